#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "banditlab/errors.hpp"
#include "banditlab/rng.hpp"

namespace bandit {

enum class Family { Bernoulli, Gaussian, Poisson, Exponential };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

/// One-parameter canonical exponential family: densities exp(theta*x - b(theta))
/// with respect to a fixed reference measure.
///
/// | family              | theta          | b(theta)            | mean domain |
/// |---------------------|----------------|---------------------|-------------|
/// | Bernoulli           | log(mu/(1-mu)) | log(1 + e^theta)    | (0, 1)      |
/// | Gaussian, var s2    | mu / s2        | s2 * theta^2 / 2    | (-inf, inf) |
/// | Poisson             | log(mu)        | e^theta             | (0, inf)    |
/// | Exponential (Gamma, | -1 / mu        | -log(-theta)        | (0, inf)    |
/// |  shape 1)           |                |                     |             |
class ExpFamilyModel {
public:
    static ExpFamilyModel bernoulli() { return ExpFamilyModel(Family::Bernoulli, 1.0); }
    static ExpFamilyModel gaussian(double sigma2);
    static ExpFamilyModel poisson() { return ExpFamilyModel(Family::Poisson, 1.0); }
    static ExpFamilyModel exponential() { return ExpFamilyModel(Family::Exponential, 1.0); }

    Family kind() const { return kind_; }
    /// Known variance of the Gaussian family (1 for other families, unused).
    double sigma2() const { return sigma2_; }
    std::string name() const;

    // Open domains; infinite endpoints are +-infinity.
    double theta_lo() const;
    double theta_hi() const;
    double mean_lo() const;
    double mean_hi() const;

    bool in_mean_domain(double mu) const { return mu > mean_lo() && mu < mean_hi(); }
    bool in_mean_closure(double mu) const { return mu >= mean_lo() && mu <= mean_hi(); }
    bool in_theta_domain(double theta) const { return theta > theta_lo() && theta < theta_hi(); }

    /// Log-partition b(theta).
    double log_partition(double theta) const;
    /// b'(theta), the mean of nu_theta.
    double mean_of(double theta) const;
    /// b''(theta), the variance of nu_theta.
    double curvature(double theta) const;
    /// (b')^{-1}(mu). Boundary means map to the infinite theta endpoints.
    double natural_of(double mu) const;

    /// Whether x is a possible observation.
    bool in_support(double x) const;

    bool operator==(const ExpFamilyModel& other) const = default;

private:
    ExpFamilyModel(Family kind, double sigma2) : kind_(kind), sigma2_(sigma2) {}

    Family kind_;
    double sigma2_;
};

struct ArmDistribution {
    ExpFamilyModel model;
    double mean;

    ArmDistribution(ExpFamilyModel m, double mu);
};

struct BanditInstance {
    ExpFamilyModel model;
    std::vector<double> means;

    BanditInstance(ExpFamilyModel m, std::vector<double> arm_means);

    std::size_t arms() const { return means.size(); }
    double mu_star() const;
    std::vector<std::size_t> optimal_set() const;
    ArmDistribution arm(std::size_t a) const { return ArmDistribution(model, means[a]); }
};

/// d(mu, mu'): KL divergence between the members with means mu and mu'.
///
/// Both arguments may sit on the closed boundary of the mean domain (limit
/// conventions 0 log 0 = 0); the result is +infinity when the divergence is
/// unbounded, e.g. Bernoulli d(0.5, 1).
double kl_mean(const ExpFamilyModel& model, double mu, double mu_prime);

/// K(theta, lambda) = b'(theta)(theta - lambda) - b(theta) + b(lambda).
double kl_natural(const ExpFamilyModel& model, double theta, double lambda);

/// V(mu) = b''((b')^{-1}(mu)).
double variance(const ExpFamilyModel& model, double mu);

/// sup{ q <= cap : d(x, q) <= level }.
///
/// Bisection on q over [x, cap] (the map q -> d(x, q) increases beyond x),
/// stopping once the feasible end of the bracket is within 1e-10 of the level
/// in divergence value or after 200 iterations. For unbounded mean domains
/// the upper bracket is expanded geometrically from x + max(1, |x|) first.
/// The Gaussian case uses the closed form x + sqrt(2 s2 level).
double d_level_set_sup(const ExpFamilyModel& model, double x, double level,
                       double cap = std::numeric_limits<double>::infinity());

/// d applied with its first argument clamped into [clamp_lo, clamp_hi].
double d_bar(const ExpFamilyModel& model, double x, double y, double clamp_lo, double clamp_hi);

/// Regularized divergence: d(x, y) for x > mu_lo, otherwise the linear
/// extension d(mu_lo, y) + (theta(y) - theta(mu_lo)) (mu_lo - x).
double d_tilde(const ExpFamilyModel& model, double x, double y, double mu_lo);

/// sup{ q in [max(x, mu_lo), cap] : d_tilde(x, q) <= level }.
double d_tilde_level_set_sup(const ExpFamilyModel& model, double x, double level, double mu_lo,
                             double cap);

/// One draw from nu^mu.
double sample(const ArmDistribution& arm, Rng& rng);

}  // namespace bandit
