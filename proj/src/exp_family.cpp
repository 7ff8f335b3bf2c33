#include "banditlab/exp_family.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTolerance = 1e-10;
constexpr int kMaxBisection = 200;

// a * log(a / b) with 0 log 0 = 0.
double xlogx_over(double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return kInf;
    return a * std::log(a / b);
}

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void require_mean_closure(const ExpFamilyModel& m, double mu, const char* what) {
    if (!std::isfinite(mu) || !m.in_mean_closure(mu)) {
        throw DomainError(std::string(what) + ": mean " + std::to_string(mu) +
                          " outside the mean domain of " + m.name());
    }
}

// Bisection for sup{ q in [start, cap] : f(q) <= level } with f increasing on it.
template <class F>
double invert_increasing(F&& f, double start, double level, double cap) {
    if (level < 0.0 || std::isnan(level)) throw DomainError("level set inversion: negative level");
    if (start >= cap) return cap;
    if (level == 0.0) return start;

    double lo = start;
    double hi;
    if (std::isfinite(cap)) {
        hi = cap;
        if (f(hi) <= level) return cap;
    } else {
        double step = std::max(1.0, std::abs(start));
        hi = start + step;
        while (f(hi) <= level) {
            lo = hi;
            step *= 2.0;
            hi = start + step;
            // Divergences growing like log q never reach the level in double range.
            if (!std::isfinite(hi)) return cap;
        }
    }
    for (int it = 0; it < kMaxBisection; ++it) {
        if (level - f(lo) <= kLevelTolerance) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > level) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return lo;
}

}  // namespace

std::string_view family_name(Family f) {
    switch (f) {
        case Family::Bernoulli: return "bernoulli";
        case Family::Gaussian: return "gaussian";
        case Family::Poisson: return "poisson";
        case Family::Exponential: return "exponential";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "bernoulli") return Family::Bernoulli;
    if (name == "gaussian") return Family::Gaussian;
    if (name == "poisson") return Family::Poisson;
    if (name == "exponential") return Family::Exponential;
    throw ConfigError("unknown family '" + std::string(name) + "'");
}

ExpFamilyModel ExpFamilyModel::gaussian(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("gaussian: variance must be positive");
    return ExpFamilyModel(Family::Gaussian, sigma2);
}

std::string ExpFamilyModel::name() const {
    if (kind_ == Family::Gaussian) return "gaussian(sigma2=" + std::to_string(sigma2_) + ")";
    return std::string(family_name(kind_));
}

double ExpFamilyModel::theta_lo() const { return -kInf; }

double ExpFamilyModel::theta_hi() const { return kind_ == Family::Exponential ? 0.0 : kInf; }

double ExpFamilyModel::mean_lo() const { return kind_ == Family::Gaussian ? -kInf : 0.0; }

double ExpFamilyModel::mean_hi() const { return kind_ == Family::Bernoulli ? 1.0 : kInf; }

double ExpFamilyModel::log_partition(double theta) const {
    switch (kind_) {
        case Family::Bernoulli: return softplus(theta);
        case Family::Gaussian: return 0.5 * sigma2_ * theta * theta;
        case Family::Poisson: return std::exp(theta);
        case Family::Exponential: return -std::log(-theta);
    }
    return 0.0;
}

double ExpFamilyModel::mean_of(double theta) const {
    switch (kind_) {
        case Family::Bernoulli: return 1.0 / (1.0 + std::exp(-theta));
        case Family::Gaussian: return sigma2_ * theta;
        case Family::Poisson: return std::exp(theta);
        case Family::Exponential: return -1.0 / theta;
    }
    return 0.0;
}

double ExpFamilyModel::curvature(double theta) const {
    switch (kind_) {
        case Family::Bernoulli: {
            const double p = mean_of(theta);
            return p * (1.0 - p);
        }
        case Family::Gaussian: return sigma2_;
        case Family::Poisson: return std::exp(theta);
        case Family::Exponential: return 1.0 / (theta * theta);
    }
    return 0.0;
}

double ExpFamilyModel::natural_of(double mu) const {
    switch (kind_) {
        case Family::Bernoulli: return std::log(mu) - std::log1p(-mu);
        case Family::Gaussian: return mu / sigma2_;
        case Family::Poisson: return std::log(mu);
        case Family::Exponential: return mu == 0.0 ? -kInf : -1.0 / mu;
    }
    return 0.0;
}

bool ExpFamilyModel::in_support(double x) const {
    if (!std::isfinite(x)) return false;
    switch (kind_) {
        case Family::Bernoulli: return x == 0.0 || x == 1.0;
        case Family::Gaussian: return true;
        case Family::Poisson: return x >= 0.0 && x == std::floor(x);
        case Family::Exponential: return x >= 0.0;
    }
    return false;
}

ArmDistribution::ArmDistribution(ExpFamilyModel m, double mu) : model(m), mean(mu) {
    if (!model.in_mean_domain(mu)) {
        throw DomainError("arm mean " + std::to_string(mu) + " not inside the mean domain of " + model.name());
    }
}

BanditInstance::BanditInstance(ExpFamilyModel m, std::vector<double> arm_means)
    : model(m), means(std::move(arm_means)) {
    if (means.empty()) throw ConfigError("bandit instance needs at least one arm");
    for (double mu : means) {
        if (!model.in_mean_domain(mu)) {
            throw DomainError("arm mean " + std::to_string(mu) + " not inside the mean domain of " +
                              model.name());
        }
    }
}

double BanditInstance::mu_star() const { return *std::max_element(means.begin(), means.end()); }

std::vector<std::size_t> BanditInstance::optimal_set() const {
    const double best = mu_star();
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < means.size(); ++a) {
        if (means[a] == best) out.push_back(a);
    }
    return out;
}

double kl_mean(const ExpFamilyModel& model, double mu, double mu_prime) {
    require_mean_closure(model, mu, "kl_mean");
    require_mean_closure(model, mu_prime, "kl_mean");
    if (mu == mu_prime) return 0.0;
    switch (model.kind()) {
        case Family::Bernoulli:
            return xlogx_over(mu, mu_prime) + xlogx_over(1.0 - mu, 1.0 - mu_prime);
        case Family::Gaussian: {
            const double diff = mu - mu_prime;
            return diff * diff / (2.0 * model.sigma2());
        }
        case Family::Poisson:
            if (mu_prime == 0.0) return kInf;
            return mu_prime - mu + xlogx_over(mu, mu_prime);
        case Family::Exponential: {
            if (mu == 0.0 || mu_prime == 0.0) return kInf;
            const double ratio = mu / mu_prime;
            return ratio - 1.0 - std::log(ratio);
        }
    }
    return 0.0;
}

double kl_natural(const ExpFamilyModel& model, double theta, double lambda) {
    if (!model.in_theta_domain(theta) || !model.in_theta_domain(lambda)) {
        throw DomainError("kl_natural: natural parameter outside the domain of " + model.name());
    }
    if (theta == lambda) return 0.0;
    if (model.kind() == Family::Gaussian) return 0.5 * model.sigma2() * (theta - lambda) * (theta - lambda);
    const double k = model.mean_of(theta) * (theta - lambda) - model.log_partition(theta) +
                     model.log_partition(lambda);
    return std::max(0.0, k);
}

double variance(const ExpFamilyModel& model, double mu) {
    if (!std::isfinite(mu) || !model.in_mean_domain(mu)) {
        throw DomainError("variance: mean " + std::to_string(mu) + " not inside the mean domain");
    }
    switch (model.kind()) {
        case Family::Bernoulli: return mu * (1.0 - mu);
        case Family::Gaussian: return model.sigma2();
        case Family::Poisson: return mu;
        case Family::Exponential: return mu * mu;
    }
    return 0.0;
}

double d_level_set_sup(const ExpFamilyModel& model, double x, double level, double cap) {
    require_mean_closure(model, x, "d_level_set_sup");
    if (std::isnan(cap) || cap < model.mean_lo()) throw DomainError("d_level_set_sup: cap below the mean domain");
    cap = std::min(cap, model.mean_hi());
    if (level < 0.0 || std::isnan(level)) throw DomainError("d_level_set_sup: negative level");
    if (model.kind() == Family::Gaussian) {
        return std::min(cap, x + std::sqrt(2.0 * model.sigma2() * level));
    }
    return invert_increasing([&](double q) { return kl_mean(model, x, q); }, x, level, cap);
}

double d_bar(const ExpFamilyModel& model, double x, double y, double clamp_lo, double clamp_hi) {
    if (!(clamp_lo < clamp_hi) || !model.in_mean_domain(clamp_lo) || !model.in_mean_domain(clamp_hi)) {
        throw DomainError("d_bar: invalid clamp interval");
    }
    if (!model.in_mean_domain(y)) throw DomainError("d_bar: y outside the mean domain");
    return kl_mean(model, std::clamp(x, clamp_lo, clamp_hi), y);
}

double d_tilde(const ExpFamilyModel& model, double x, double y, double mu_lo) {
    if (!std::isfinite(y) || !model.in_mean_domain(y)) throw DomainError("d_tilde: y outside the mean domain");
    if (!std::isfinite(mu_lo) || !model.in_mean_closure(mu_lo)) {
        throw DomainError("d_tilde: lower bound outside the mean domain");
    }
    // With mu_lo on the model boundary there is nothing to regularize.
    if (x > mu_lo || !model.in_mean_domain(mu_lo)) return kl_mean(model, x, y);
    return kl_mean(model, mu_lo, y) + (model.natural_of(y) - model.natural_of(mu_lo)) * (mu_lo - x);
}

double d_tilde_level_set_sup(const ExpFamilyModel& model, double x, double level, double mu_lo,
                             double cap) {
    if (std::isnan(cap) || cap < model.mean_lo()) throw DomainError("d_tilde_level_set_sup: cap below the mean domain");
    cap = std::min(cap, model.mean_hi());
    if (x > mu_lo || !model.in_mean_domain(mu_lo)) return d_level_set_sup(model, std::max(x, mu_lo), level, cap);
    const double slope = mu_lo - x;
    const double theta_lo = model.natural_of(mu_lo);
    return invert_increasing(
        [&](double q) {
            if (q >= model.mean_hi()) return kInf;
            return kl_mean(model, mu_lo, q) + (model.natural_of(q) - theta_lo) * slope;
        },
        mu_lo, level, cap);
}

double sample(const ArmDistribution& arm, Rng& rng) {
    switch (arm.model.kind()) {
        case Family::Bernoulli: return rng.uniform() < arm.mean ? 1.0 : 0.0;
        case Family::Gaussian:
            return std::normal_distribution<double>(arm.mean, std::sqrt(arm.model.sigma2()))(rng);
        case Family::Poisson: return static_cast<double>(std::poisson_distribution<long>(arm.mean)(rng));
        case Family::Exponential: return std::exponential_distribution<double>(1.0 / arm.mean)(rng);
    }
    return 0.0;
}

}  // namespace bandit
