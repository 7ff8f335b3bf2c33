#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "banditlab/exp_family.hpp"
#include "banditlab/rng.hpp"

namespace bandit {

/// Beta(alpha, beta) on a Bernoulli mean.
struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;
    bool operator==(const BetaPrior&) const = default;
};

/// Normal(mean0, variance0) on a Gaussian mean; variance0 = +inf is the flat prior.
struct GaussianPrior {
    double mean0 = 0.0;
    double variance0 = std::numeric_limits<double>::infinity();

    static GaussianPrior flat() { return {}; }
    bool is_flat() const { return variance0 == std::numeric_limits<double>::infinity(); }
    bool operator==(const GaussianPrior&) const = default;
};

/// Gamma(shape, rate) on a Poisson mean.
struct GammaPrior {
    double shape = 1.0;
    double rate = 1.0;
    bool operator==(const GammaPrior&) const = default;
};

/// InverseGamma(shape, scale) on an Exponential mean.
struct InverseGammaPrior {
    double shape = 1.0;
    double scale = 1.0;
    bool operator==(const InverseGammaPrior&) const = default;
};

/// Prior density tabulated on a strictly increasing mesh, linear between nodes.
class GridPrior {
public:
    static constexpr std::size_t kDefaultPoints = 4096;

    /// Values are renormalized so the trapezoid mass is 1.
    GridPrior(std::vector<double> grid, std::vector<double> density);

    static GridPrior from_function(double lo, double hi, std::size_t points,
                                   const std::function<double(double)>& density);
    static GridPrior uniform(double lo, double hi, std::size_t points = kDefaultPoints);

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    double lo() const { return grid_.front(); }
    double hi() const { return grid_.back(); }

    bool operator==(const GridPrior&) const = default;

private:
    std::vector<double> grid_;
    std::vector<double> density_;
};

using Prior = std::variant<BetaPrior, GaussianPrior, GammaPrior, InverseGammaPrior, GridPrior>;

/// Beta(1,1), flat Gaussian, Gamma(1,1), InverseGamma(1,1).
Prior default_prior(const ExpFamilyModel& model);

/// Throws ConfigError when the prior cannot describe means of this family.
void validate_prior(const Prior& prior, const ExpFamilyModel& model);

std::string describe(const Prior& prior);

/// Grid version of a conjugate prior. Unbounded mean domains are truncated at
/// the prior quantiles 1e-8 and 1 - 1e-8; Bernoulli uses the closed [0, 1].
GridPrior to_grid(const Prior& prior, const ExpFamilyModel& model,
                  std::size_t points = GridPrior::kDefaultPoints);

/// Posterior pi_{n,x} on an arm mean: the prior tilted by exp(-n d(x, u)).
/// Depends on the data only through the sufficient statistics (n, xbar).
/// Values are immutable; updates return new posteriors.
class Posterior {
public:
    Posterior(ExpFamilyModel model, Prior prior);

    /// The posterior after n observations with empirical mean xbar.
    static Posterior from_statistics(ExpFamilyModel model, Prior prior, std::size_t n, double xbar);

    const ExpFamilyModel& model() const { return model_; }
    const Prior& prior() const { return prior_; }
    std::size_t count() const { return n_; }
    double sum() const { return sum_; }
    /// Empirical mean; 0 when no observation has been made.
    double xbar() const { return n_ == 0 ? 0.0 : sum_ / static_cast<double>(n_); }

    Posterior updated(double reward) const;
    /// Same count with the empirical mean replaced (used for clamped indices).
    Posterior with_mean(double xbar) const;

    /// Hyperparameters of the conjugate posterior. Throws for grid priors.
    Prior conjugate_posterior() const;

    double density(double u) const;
    double cdf(double v) const;
    /// pi([v, mu^+)).
    double tail(double v) const;
    /// Q(alpha): P(X <= Q(alpha)) = alpha, alpha in (0, 1).
    double quantile(double alpha) const;
    double mean() const;
    double sample(Rng& rng) const;

private:
    struct GridState;

    Posterior(ExpFamilyModel model, Prior prior, std::size_t n, double sum);
    void build_grid();

    ExpFamilyModel model_;
    Prior prior_;
    std::size_t n_ = 0;
    double sum_ = 0.0;
    std::shared_ptr<const GridState> grid_;
};

}  // namespace bandit
