#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "banditlab/exp_family.hpp"
#include "banditlab/posterior.hpp"
#include "banditlab/rng.hpp"

namespace bandit {

/// Asymptotic regret floor constant * log T.
struct LowerBoundCurve {
    double constant = 0.0;
    double evaluate(double horizon) const { return constant * std::log(horizon); }
};

/// sum over suboptimal arms of (mu* - mu_a) / d(mu_a, mu*).
LowerBoundCurve lai_robbins_curve(const BanditInstance& instance);

enum class BayesRiskMethod { ClosedFormBernoulliUniform, NumericHomogeneous, NumericGeneralProduct };

struct BayesRiskConstant {
    double value = 0.0;
    BayesRiskMethod method = BayesRiskMethod::NumericHomogeneous;
};

/// (1/2) (K - 1) / (K + 1): Bayes-risk rate (times log^2 T) for K Bernoulli
/// arms with uniform priors.
double bernoulli_uniform_constant(int arms);

/// Adaptive Simpson quadrature of f on [a, b] to an absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol,
                        int max_depth = 50);

/// Integral over an interval with possibly infinite endpoints. Infinite ends
/// are mapped to a bounded variable by rational substitutions.
double integrate(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-8);

/// K(K-1)/2 * integral of q^2 Q^(K-2) over the natural parameter domain, for
/// identical per-arm priors with density q and c.d.f. Q on the natural parameter.
BayesRiskConstant bayes_risk_constant_homogeneous(
    const std::function<double(double)>& density, const std::function<double(double)>& cdf, int arms,
    double theta_lo = -std::numeric_limits<double>::infinity(),
    double theta_hi = std::numeric_limits<double>::infinity());

/// Natural-parameter prior of one arm.
struct ThetaPrior {
    std::function<double(double)> density;
    std::function<double(double)> cdf;
};

/// (1/2) sum_a integral of h_a(theta) g_a(theta), with g_a the density of the
/// maximum of the other arms' natural parameters.
BayesRiskConstant bayes_risk_constant_product(const std::vector<ThetaPrior>& priors,
                                              double theta_lo = -std::numeric_limits<double>::infinity(),
                                              double theta_hi = std::numeric_limits<double>::infinity());

/// Outcome of a Monte Carlo check of an analytic bound.
struct BoundCheck {
    std::string name;
    nlohmann::json parameters;
    double analytic = 0.0;
    double empirical = 0.0;
    double standard_error = 0.0;
    bool pass = false;
};

void to_json(nlohmann::json& j, const BoundCheck& check);

/// exp(-s d(x, mu)) for x > mu.
double chernoff_bound(const ExpFamilyModel& model, double mu, double x, std::size_t s);
/// Frequency of {mean of s draws > x} against the Chernoff bound.
BoundCheck chernoff_check(const ExpFamilyModel& model, double mu, double x, std::size_t s, std::size_t runs,
                          Rng& rng);

/// (delta log t + 1) exp(1 - delta).
double self_normalized_bound(double delta, std::size_t t);
/// Frequency of {exists s <= t : s d+(mean_s, mu) >= delta}, d+(x, mu) = d(x, mu) 1{x < mu}.
BoundCheck self_normalized_check(const ExpFamilyModel& model, double mu, double delta, std::size_t t,
                                 std::size_t paths, Rng& rng);

/// exp(-N d(mu - x/N, mu)).
double maximal_inequality_bound(const ExpFamilyModel& model, double mu, double x, std::size_t n);
/// Frequency of {max over n <= N of sum_{i<=n} (mu - Y_i) >= x}.
BoundCheck maximal_inequality_check(const ExpFamilyModel& model, double mu, double x, std::size_t n,
                                    std::size_t paths, Rng& rng);

struct PinskerReport {
    std::string family;
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    double c1 = 0.0;  // inf of b'' on the compact
    double c2 = 0.0;  // sup of b'' on the compact
    std::size_t pairs = 0;
    std::size_t natural_violations = 0;  // c1/2 dt^2 <= K <= c2/2 dt^2
    std::size_t mean_violations = 0;     // dx^2/(2 c2) <= d <= dx^2/(2 c1)
    std::size_t inverse_violations = 0;  // theta(v) - theta(x) <= (v - x)/c1
    bool pass = false;
};

void to_json(nlohmann::json& j, const PinskerReport& report);

/// c1, c2 from a dense grid (10^4 intervals) over [theta_lo, theta_hi], then
/// the three quadratic inequality families on `samples` random pairs.
PinskerReport pinsker_check(const ExpFamilyModel& model, double theta_lo, double theta_hi, std::size_t samples,
                            Rng& rng);

struct EnvelopeReport {
    double x = 0.0;
    double v = 0.0;
    double divergence = 0.0;  // d(x, v)
    double prior_mass = 0.0;  // pi_0([v, mu+)) when the prior is proper
    std::vector<std::size_t> n;
    std::vector<double> tail;      // pi_{n,x}([v, mu+))
    std::vector<double> log_tail;  // -log tail
    std::vector<double> residual;  // log_tail - n d(x, v)
    bool upper_case = true;        // x < v
    // x < v: residual in [-0.5 log n - b_B, log n + b_A]
    double b_a = 0.0;
    double b_b = 0.0;
    // v <= x: tail >= C / sqrt(n)
    double c = 0.0;
    double fitted_rate = 0.0;  // least-squares slope of log_tail on n in [100, 1000]
    double rate_relative_error = 0.0;
    bool envelope_ok = false;
    bool rate_ok = true;
    std::size_t violations = 0;
    bool pass = false;
};

void to_json(nlohmann::json& j, const EnvelopeReport& report);

/// Posterior tail log-residuals over n_range with constants fitted at the
/// smallest n. The rate check only applies when x < v and n_range reaches
/// [100, 1000].
EnvelopeReport posterior_tail_envelope(const Prior& prior, const ExpFamilyModel& model, double x, double v,
                                       const std::vector<std::size_t>& n_range);

/// A named group of checks with fixed parameter grids.
struct SuiteResult {
    std::string suite;
    nlohmann::json reports;  // array of per-check reports
    bool pass = false;
};

/// Suites: chernoff, self-normalized, maximal, pinsker, envelope, all.
/// `paths` is the Monte Carlo sample count per check (pairs for pinsker).
std::vector<std::string_view> bound_suite_names();
SuiteResult run_bound_suite(std::string_view suite, std::uint64_t seed, std::size_t paths = 100000);

}  // namespace bandit
