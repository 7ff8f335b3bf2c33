#include "banditlab/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/normal.hpp>

namespace bandit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double trapezoid_mass(const std::vector<double>& x, const std::vector<double>& y) {
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) mass += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
    return mass;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
}

double gamma_draw(double shape, Rng& rng) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

}  // namespace

// Normalized piecewise-linear posterior density on the prior's mesh.
struct Posterior::GridState {
    std::vector<double> x;
    std::vector<double> pdf;
    std::vector<double> cdf;  // cumulative mass at each node, last entry exactly 1

    std::size_t cell(double v) const {
        auto it = std::upper_bound(x.begin(), x.end(), v);
        std::size_t k = static_cast<std::size_t>(it - x.begin());
        return std::min(k == 0 ? 0 : k - 1, x.size() - 2);
    }

    double density(double u) const {
        if (u < x.front() || u > x.back()) throw DomainError("grid posterior: point outside the grid span");
        const std::size_t k = cell(u);
        const double h = x[k + 1] - x[k];
        const double s = (u - x[k]) / h;
        return pdf[k] * (1.0 - s) + pdf[k + 1] * s;
    }

    double cumulative(double v) const {
        if (v <= x.front()) return 0.0;
        if (v >= x.back()) return 1.0;
        const std::size_t k = cell(v);
        const double h = x[k + 1] - x[k];
        const double s = v - x[k];
        const double slope = (pdf[k + 1] - pdf[k]) / h;
        return std::min(1.0, cdf[k] + pdf[k] * s + 0.5 * slope * s * s);
    }

    double quantile(double alpha) const {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), alpha);
        std::size_t k = static_cast<std::size_t>(it - cdf.begin());
        k = std::min(k == 0 ? 0 : k - 1, x.size() - 2);
        const double h = x[k + 1] - x[k];
        const double r = alpha - cdf[k];
        const double slope = (pdf[k + 1] - pdf[k]) / h;
        // Root of slope/2 s^2 + pdf[k] s - r = 0 in [0, h], in cancellation-free form.
        const double disc = std::max(0.0, pdf[k] * pdf[k] + 2.0 * slope * r);
        const double denom = pdf[k] + std::sqrt(disc);
        const double s = denom > 0.0 ? 2.0 * r / denom : h;
        return x[k] + std::clamp(s, 0.0, h);
    }
};

GridPrior::GridPrior(std::vector<double> grid, std::vector<double> density)
    : grid_(std::move(grid)), density_(std::move(density)) {
    if (grid_.size() < 2 || grid_.size() != density_.size()) {
        throw DomainError("grid prior: need at least two nodes and one density value per node");
    }
    for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        if (!(grid_[i] < grid_[i + 1])) throw DomainError("grid prior: mesh must be strictly increasing");
    }
    for (double f : density_) {
        if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("grid prior: density values must be positive");
    }
    const double mass = trapezoid_mass(grid_, density_);
    for (double& f : density_) f /= mass;
}

GridPrior GridPrior::from_function(double lo, double hi, std::size_t points,
                                   const std::function<double(double)>& density) {
    if (points < 2 || !(lo < hi)) throw DomainError("grid prior: invalid mesh specification");
    std::vector<double> x(points), f(points);
    for (std::size_t i = 0; i < points; ++i) {
        x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        f[i] = density(x[i]);
    }
    x.back() = hi;
    return GridPrior(std::move(x), std::move(f));
}

GridPrior GridPrior::uniform(double lo, double hi, std::size_t points) {
    return from_function(lo, hi, points, [](double) { return 1.0; });
}

Prior default_prior(const ExpFamilyModel& model) {
    switch (model.kind()) {
        case Family::Bernoulli: return BetaPrior{1.0, 1.0};
        case Family::Gaussian: return GaussianPrior::flat();
        case Family::Poisson: return GammaPrior{1.0, 1.0};
        case Family::Exponential: return InverseGammaPrior{1.0, 1.0};
    }
    return BetaPrior{};
}

void validate_prior(const Prior& prior, const ExpFamilyModel& model) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    std::visit(overloaded{
                   [&](const BetaPrior& p) {
                       if (model.kind() != Family::Bernoulli) throw ConfigError("beta prior requires Bernoulli arms");
                       if (!positive(p.alpha) || !positive(p.beta)) throw ConfigError("beta prior: hyperparameters must be positive");
                   },
                   [&](const GaussianPrior& p) {
                       if (model.kind() != Family::Gaussian) throw ConfigError("gaussian prior requires Gaussian arms");
                       if (!std::isfinite(p.mean0) || !(p.variance0 > 0.0)) throw ConfigError("gaussian prior: invalid hyperparameters");
                   },
                   [&](const GammaPrior& p) {
                       if (model.kind() != Family::Poisson) throw ConfigError("gamma prior requires Poisson arms");
                       if (!positive(p.shape) || !positive(p.rate)) throw ConfigError("gamma prior: hyperparameters must be positive");
                   },
                   [&](const InverseGammaPrior& p) {
                       if (model.kind() != Family::Exponential) throw ConfigError("inverse-gamma prior requires Exponential arms");
                       if (!positive(p.shape) || !positive(p.scale)) throw ConfigError("inverse-gamma prior: hyperparameters must be positive");
                   },
                   [&](const GridPrior& p) {
                       if (!model.in_mean_closure(p.lo()) || !model.in_mean_closure(p.hi())) {
                           throw ConfigError("grid prior: mesh outside the mean domain");
                       }
                   },
               },
               prior);
}

std::string describe(const Prior& prior) {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const BetaPrior& p) { os << "beta(" << p.alpha << "," << p.beta << ")"; },
                   [&](const GaussianPrior& p) {
                       if (p.is_flat()) {
                           os << "gaussian(flat)";
                       } else {
                           os << "gaussian(" << p.mean0 << "," << p.variance0 << ")";
                       }
                   },
                   [&](const GammaPrior& p) { os << "gamma(" << p.shape << "," << p.rate << ")"; },
                   [&](const InverseGammaPrior& p) { os << "invgamma(" << p.shape << "," << p.scale << ")"; },
                   [&](const GridPrior& p) {
                       os << "grid(" << p.lo() << "," << p.hi() << "," << p.grid().size() << ")";
                   },
               },
               prior);
    return os.str();
}

GridPrior to_grid(const Prior& prior, const ExpFamilyModel& model, std::size_t points) {
    validate_prior(prior, model);
    constexpr double kTail = 1e-8;
    return std::visit(
        overloaded{
            [&](const BetaPrior& p) {
                boost::math::beta_distribution<double> dist(p.alpha, p.beta);
                // Interior nodes only at the ends when the density blows up there.
                const double lo = p.alpha < 1.0 ? boost::math::quantile(dist, kTail) : 0.0;
                const double hi = p.beta < 1.0 ? boost::math::quantile(boost::math::complement(dist, kTail)) : 1.0;
                return GridPrior::from_function(lo, hi, points, [&](double u) { return boost::math::pdf(dist, u); });
            },
            [&](const GaussianPrior& p) {
                if (p.is_flat()) throw DomainError("flat gaussian prior has no grid representation");
                boost::math::normal_distribution<double> dist(p.mean0, std::sqrt(p.variance0));
                return GridPrior::from_function(boost::math::quantile(dist, kTail),
                                                boost::math::quantile(boost::math::complement(dist, kTail)),
                                                points, [&](double u) { return boost::math::pdf(dist, u); });
            },
            [&](const GammaPrior& p) {
                boost::math::gamma_distribution<double> dist(p.shape, 1.0 / p.rate);
                return GridPrior::from_function(boost::math::quantile(dist, kTail),
                                                boost::math::quantile(boost::math::complement(dist, kTail)),
                                                points, [&](double u) { return boost::math::pdf(dist, u); });
            },
            [&](const InverseGammaPrior& p) {
                boost::math::inverse_gamma_distribution<double> dist(p.shape, p.scale);
                return GridPrior::from_function(boost::math::quantile(dist, kTail),
                                                boost::math::quantile(boost::math::complement(dist, kTail)),
                                                points, [&](double u) { return boost::math::pdf(dist, u); });
            },
            [&](const GridPrior& p) { return p; },
        },
        prior);
}

Posterior::Posterior(ExpFamilyModel model, Prior prior) : Posterior(model, std::move(prior), 0, 0.0) {}

Posterior::Posterior(ExpFamilyModel model, Prior prior, std::size_t n, double sum)
    : model_(model), prior_(std::move(prior)), n_(n), sum_(sum) {
    validate_prior(prior_, model_);
    if (std::holds_alternative<GridPrior>(prior_)) build_grid();
}

Posterior Posterior::from_statistics(ExpFamilyModel model, Prior prior, std::size_t n, double xbar) {
    if (n > 0 && !model.in_mean_closure(xbar)) throw DomainError("posterior: empirical mean outside the mean domain");
    return Posterior(model, std::move(prior), n, static_cast<double>(n) * xbar);
}

Posterior Posterior::updated(double reward) const {
    if (!model_.in_support(reward)) {
        throw DomainError("posterior update: reward " + std::to_string(reward) + " outside the support of " +
                          model_.name());
    }
    return Posterior(model_, prior_, n_ + 1, sum_ + reward);
}

Posterior Posterior::with_mean(double xbar) const { return from_statistics(model_, prior_, n_, xbar); }

void Posterior::build_grid() {
    const auto& prior = std::get<GridPrior>(prior_);
    auto state = std::make_shared<GridState>();
    state->x = prior.grid();
    const std::size_t m = state->x.size();
    std::vector<double> log_w(m);
    const double x = xbar();
    const double n = static_cast<double>(n_);
    for (std::size_t i = 0; i < m; ++i) {
        log_w[i] = std::log(prior.density()[i]);
        if (n_ > 0) log_w[i] -= n * kl_mean(model_, x, state->x[i]);
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    state->pdf.resize(m);
    for (std::size_t i = 0; i < m; ++i) state->pdf[i] = std::exp(log_w[i] - top);
    state->cdf.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        state->cdf[i + 1] = state->cdf[i] + 0.5 * (state->pdf[i] + state->pdf[i + 1]) * (state->x[i + 1] - state->x[i]);
    }
    const double mass = state->cdf.back();
    for (std::size_t i = 0; i < m; ++i) {
        state->pdf[i] /= mass;
        state->cdf[i] /= mass;
    }
    state->cdf.back() = 1.0;
    grid_ = std::move(state);
}

Prior Posterior::conjugate_posterior() const {
    const double n = static_cast<double>(n_);
    return std::visit(
        overloaded{
            [&](const BetaPrior& p) -> Prior { return BetaPrior{p.alpha + sum_, p.beta + n - sum_}; },
            [&](const GaussianPrior& p) -> Prior {
                const double s2 = model_.sigma2();
                if (p.is_flat()) {
                    if (n_ == 0) return p;
                    return GaussianPrior{sum_ / n, s2 / n};
                }
                const double precision = 1.0 / p.variance0 + n / s2;
                return GaussianPrior{(p.mean0 / p.variance0 + sum_ / s2) / precision, 1.0 / precision};
            },
            [&](const GammaPrior& p) -> Prior { return GammaPrior{p.shape + sum_, p.rate + n}; },
            [&](const InverseGammaPrior& p) -> Prior { return InverseGammaPrior{p.shape + n, p.scale + sum_}; },
            [&](const GridPrior&) -> Prior { throw ConfigError("grid prior has no conjugate posterior"); },
        },
        prior_);
}

namespace {

boost::math::normal_distribution<double> proper_normal(const GaussianPrior& p) {
    if (p.is_flat()) throw DomainError("flat gaussian prior is improper before the first observation");
    return boost::math::normal_distribution<double>(p.mean0, std::sqrt(p.variance0));
}

// Calls f with the boost distribution of the conjugate posterior.
template <class F>
decltype(auto) with_distribution(const Prior& post, F&& f) {
    return std::visit(
        overloaded{
            [&](const BetaPrior& p) { return f(boost::math::beta_distribution<double>(p.alpha, p.beta)); },
            [&](const GaussianPrior& p) { return f(proper_normal(p)); },
            [&](const GammaPrior& p) { return f(boost::math::gamma_distribution<double>(p.shape, 1.0 / p.rate)); },
            [&](const InverseGammaPrior& p) {
                return f(boost::math::inverse_gamma_distribution<double>(p.shape, p.scale));
            },
            [&](const GridPrior&) -> double { throw ConfigError("not a conjugate prior"); },
        },
        post);
}

}  // namespace

double Posterior::density(double u) const {
    if (!std::isfinite(u) || !model_.in_mean_closure(u)) throw DomainError("posterior density: point outside the mean domain");
    if (grid_) return grid_->density(u);
    return with_distribution(conjugate_posterior(), [&](const auto& dist) {
        const auto support = boost::math::support(dist);
        if (u < support.first || u > support.second) return 0.0;
        return boost::math::pdf(dist, u);
    });
}

double Posterior::cdf(double v) const {
    if (std::isnan(v)) throw DomainError("posterior cdf: NaN argument");
    if (v <= model_.mean_lo()) return 0.0;
    if (v >= model_.mean_hi()) return 1.0;
    if (grid_) return grid_->cumulative(v);
    return with_distribution(conjugate_posterior(), [&](const auto& dist) {
        const auto support = boost::math::support(dist);
        if (v <= support.first) return 0.0;
        if (v >= support.second) return 1.0;
        return boost::math::cdf(dist, v);
    });
}

double Posterior::tail(double v) const {
    if (std::isnan(v) || v < model_.mean_lo() || v > model_.mean_hi()) {
        throw DomainError("posterior tail: threshold outside the mean domain");
    }
    if (v <= model_.mean_lo()) return 1.0;
    if (v >= model_.mean_hi()) return 0.0;
    if (grid_) return 1.0 - grid_->cumulative(v);
    // The complement keeps relative accuracy for extreme tails.
    return with_distribution(conjugate_posterior(), [&](const auto& dist) {
        const auto support = boost::math::support(dist);
        if (v <= support.first) return 1.0;
        if (v >= support.second) return 0.0;
        return boost::math::cdf(boost::math::complement(dist, v));
    });
}

double Posterior::quantile(double alpha) const {
    check_alpha(alpha);
    if (grid_) return grid_->quantile(alpha);
    return with_distribution(conjugate_posterior(), [&](const auto& dist) {
        if (alpha > 0.5) return boost::math::quantile(boost::math::complement(dist, 1.0 - alpha));
        return boost::math::quantile(dist, alpha);
    });
}

double Posterior::mean() const {
    if (grid_) {
        double m = 0.0;
        const auto& x = grid_->x;
        const auto& f = grid_->pdf;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) m += 0.5 * (x[i] * f[i] + x[i + 1] * f[i + 1]) * (x[i + 1] - x[i]);
        return m;
    }
    return std::visit(overloaded{
                          [](const BetaPrior& p) { return p.alpha / (p.alpha + p.beta); },
                          [](const GaussianPrior& p) {
                              if (p.is_flat()) throw DomainError("flat gaussian prior has no mean");
                              return p.mean0;
                          },
                          [](const GammaPrior& p) { return p.shape / p.rate; },
                          [](const InverseGammaPrior& p) {
                              return p.shape > 1.0 ? p.scale / (p.shape - 1.0)
                                                   : std::numeric_limits<double>::infinity();
                          },
                          [](const GridPrior&) -> double { return 0.0; },
                      },
                      conjugate_posterior());
}

double Posterior::sample(Rng& rng) const {
    if (grid_) {
        double u = rng.uniform();
        while (u == 0.0) u = rng.uniform();
        return grid_->quantile(u);
    }
    return std::visit(overloaded{
                          [&](const BetaPrior& p) {
                              const double a = gamma_draw(p.alpha, rng);
                              const double b = gamma_draw(p.beta, rng);
                              return a / (a + b);
                          },
                          [&](const GaussianPrior& p) {
                              if (p.is_flat()) throw DomainError("cannot sample a flat gaussian prior");
                              return std::normal_distribution<double>(p.mean0, std::sqrt(p.variance0))(rng);
                          },
                          [&](const GammaPrior& p) { return gamma_draw(p.shape, rng) / p.rate; },
                          [&](const InverseGammaPrior& p) { return p.scale / gamma_draw(p.shape, rng); },
                          [](const GridPrior&) -> double { return 0.0; },
                      },
                      conjugate_posterior());
}

}  // namespace bandit
