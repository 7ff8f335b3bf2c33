#include "banditlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double simpson_step(const std::function<double(double)>& f, double a, double fa, double m, double fm, double b,
                    double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

double standard_error(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

BoundCheck finish(std::string name, nlohmann::json params, double analytic, std::size_t hits, std::size_t n) {
    BoundCheck check;
    check.name = std::move(name);
    check.parameters = std::move(params);
    check.analytic = analytic;
    check.empirical = static_cast<double>(hits) / static_cast<double>(n);
    check.standard_error = standard_error(check.empirical, n);
    check.pass = check.empirical <= analytic + 3.0 * check.standard_error;
    return check;
}

// Relative slack for inequalities that hold with equality in exact arithmetic.
bool leq(double a, double b) { return a <= b + 1e-9 * std::max(std::abs(a), std::abs(b)) + 1e-300; }

}  // namespace

LowerBoundCurve lai_robbins_curve(const BanditInstance& instance) {
    const double best = instance.mu_star();
    LowerBoundCurve curve;
    for (double mu : instance.means) {
        if (mu < best) curve.constant += (best - mu) / kl_mean(instance.model, mu, best);
    }
    return curve;
}

double bernoulli_uniform_constant(int arms) {
    if (arms < 2) throw DomainError("bernoulli_uniform_constant: need at least two arms");
    return 0.5 * static_cast<double>(arms - 1) / static_cast<double>(arms + 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double abs_tol, int max_depth) {
    // A few initial panels so narrow peaks are not missed by the first estimate.
    constexpr int kPanels = 16;
    double total = 0.0;
    const double h = (b - a) / kPanels;
    for (int i = 0; i < kPanels; ++i) {
        const double lo = a + h * i;
        const double hi = i + 1 == kPanels ? b : a + h * (i + 1);
        const double mid = 0.5 * (lo + hi);
        const double flo = f(lo), fmid = f(mid), fhi = f(hi);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        total += simpson_step(f, lo, flo, mid, fmid, hi, fhi, whole, abs_tol / kPanels, max_depth);
    }
    return total;
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
    if (!(lo < hi)) throw DomainError("integrate: empty interval");
    auto guard = [&](double theta, double jacobian) {
        if (!std::isfinite(theta) || !std::isfinite(jacobian)) return 0.0;
        return f(theta) * jacobian;
    };
    if (std::isinf(lo) && std::isinf(hi)) {
        // theta = s / (1 - s^2), s in (-1, 1)
        return adaptive_simpson(
            [&](double s) {
                const double q = 1.0 - s * s;
                if (q <= 0.0) return 0.0;
                return guard(s / q, (1.0 + s * s) / (q * q));
            },
            -1.0, 1.0, abs_tol);
    }
    if (std::isinf(hi)) {
        // theta = lo + s / (1 - s), s in [0, 1)
        return adaptive_simpson(
            [&](double s) {
                const double q = 1.0 - s;
                if (q <= 0.0) return 0.0;
                return guard(lo + s / q, 1.0 / (q * q));
            },
            0.0, 1.0, abs_tol);
    }
    if (std::isinf(lo)) {
        return adaptive_simpson(
            [&](double s) {
                const double q = 1.0 - s;
                if (q <= 0.0) return 0.0;
                return guard(hi - s / q, 1.0 / (q * q));
            },
            0.0, 1.0, abs_tol);
    }
    return adaptive_simpson(f, lo, hi, abs_tol);
}

namespace {

void spot_check_cdf(const std::function<double(double)>& density, const std::function<double(double)>& cdf,
                    double lo, double hi) {
    // Interior probe points, finite even when the domain is not.
    const double a = std::isinf(lo) ? (std::isinf(hi) ? -2.0 : hi - 4.0) : lo;
    const double b = std::isinf(hi) ? (std::isinf(lo) ? 2.0 : lo + 4.0) : hi;
    for (double frac : {0.15, 0.4, 0.5, 0.65, 0.85}) {
        const double theta = a + frac * (b - a);
        const double h = 1e-5 * std::max(1.0, std::abs(theta));
        const double numeric = (cdf(theta + h) - cdf(theta - h)) / (2.0 * h);
        const double exact = density(theta);
        if (!(std::abs(numeric - exact) <= 1e-4 * std::max(1.0, std::abs(exact)))) {
            throw DomainError("bayes risk constant: c.d.f. derivative does not match the density");
        }
    }
}

}  // namespace

BayesRiskConstant bayes_risk_constant_homogeneous(const std::function<double(double)>& density,
                                                  const std::function<double(double)>& cdf, int arms,
                                                  double theta_lo, double theta_hi) {
    if (arms < 2) throw DomainError("bayes risk constant: need at least two arms");
    spot_check_cdf(density, cdf, theta_lo, theta_hi);
    const double k = static_cast<double>(arms);
    const double integral = integrate(
        [&](double theta) {
            const double q = density(theta);
            return q * q * std::pow(cdf(theta), k - 2.0);
        },
        theta_lo, theta_hi, 1e-8);
    const double value = 0.5 * k * (k - 1.0) * integral;
    if (!std::isfinite(value)) throw NumericFailure("bayes risk constant: integral is not finite");
    return {value, BayesRiskMethod::NumericHomogeneous};
}

BayesRiskConstant bayes_risk_constant_product(const std::vector<ThetaPrior>& priors, double theta_lo,
                                              double theta_hi) {
    const std::size_t K = priors.size();
    if (K < 2) throw DomainError("bayes risk constant: need at least two arms");
    for (const auto& p : priors) spot_check_cdf(p.density, p.cdf, theta_lo, theta_hi);
    double total = 0.0;
    for (std::size_t a = 0; a < K; ++a) {
        total += integrate(
            [&](double theta) {
                // Density of the maximum of the other arms' parameters.
                double max_density = 0.0;
                for (std::size_t i = 0; i < K; ++i) {
                    if (i == a) continue;
                    double term = priors[i].density(theta);
                    for (std::size_t j = 0; j < K; ++j) {
                        if (j != a && j != i) term *= priors[j].cdf(theta);
                    }
                    max_density += term;
                }
                return priors[a].density(theta) * max_density;
            },
            theta_lo, theta_hi, 1e-8);
    }
    const double value = 0.5 * total;
    if (!std::isfinite(value)) throw NumericFailure("bayes risk constant: integral is not finite");
    return {value, BayesRiskMethod::NumericGeneralProduct};
}

void to_json(nlohmann::json& j, const BoundCheck& check) {
    j = nlohmann::json{{"bound", check.name},
                       {"parameters", check.parameters},
                       {"analytic", check.analytic},
                       {"empirical", check.empirical},
                       {"standard_error", check.standard_error},
                       {"pass", check.pass}};
}

double chernoff_bound(const ExpFamilyModel& model, double mu, double x, std::size_t s) {
    if (!(x > mu)) throw DomainError("chernoff bound: threshold must exceed the mean");
    return std::exp(-static_cast<double>(s) * kl_mean(model, x, mu));
}

BoundCheck chernoff_check(const ExpFamilyModel& model, double mu, double x, std::size_t s, std::size_t runs,
                          Rng& rng) {
    if (s == 0 || runs == 0) throw DomainError("chernoff check: need samples and runs");
    const double bound = chernoff_bound(model, mu, x, s);
    const ArmDistribution arm(model, mu);
    const std::uint64_t seed = rng();
    std::size_t hits = 0;
    for (std::size_t run = 0; run < runs; ++run) {
        Rng path = Rng::stream(seed, run);
        double sum = 0.0;
        for (std::size_t i = 0; i < s; ++i) sum += sample(arm, path);
        if (sum / static_cast<double>(s) > x) ++hits;
    }
    return finish("chernoff", {{"family", model.name()}, {"mu", mu}, {"x", x}, {"s", s}, {"runs", runs}}, bound,
                  hits, runs);
}

double self_normalized_bound(double delta, std::size_t t) {
    if (!(delta > 0.0) || t == 0) throw DomainError("self-normalized bound: need delta > 0 and t >= 1");
    return (delta * std::log(static_cast<double>(t)) + 1.0) * std::exp(1.0 - delta);
}

BoundCheck self_normalized_check(const ExpFamilyModel& model, double mu, double delta, std::size_t t,
                                 std::size_t paths, Rng& rng) {
    const double bound = self_normalized_bound(delta, t);
    const ArmDistribution arm(model, mu);
    const std::uint64_t seed = rng();
    std::size_t hits = 0;
    for (std::size_t p = 0; p < paths; ++p) {
        Rng path = Rng::stream(seed, p);
        double sum = 0.0;
        for (std::size_t s = 1; s <= t; ++s) {
            sum += sample(arm, path);
            const double mean = sum / static_cast<double>(s);
            if (mean < mu && static_cast<double>(s) * kl_mean(model, mean, mu) >= delta) {
                ++hits;
                break;
            }
        }
    }
    return finish("self-normalized",
                  {{"family", model.name()}, {"mu", mu}, {"delta", delta}, {"t", t}, {"paths", paths}}, bound, hits,
                  paths);
}

double maximal_inequality_bound(const ExpFamilyModel& model, double mu, double x, std::size_t n) {
    if (n == 0 || x < 0.0) throw DomainError("maximal inequality: need N >= 1 and x >= 0");
    const double shifted = mu - x / static_cast<double>(n);
    if (!model.in_mean_domain(shifted)) throw DomainError("maximal inequality: mu - x/N outside the mean domain");
    return std::exp(-static_cast<double>(n) * kl_mean(model, shifted, mu));
}

BoundCheck maximal_inequality_check(const ExpFamilyModel& model, double mu, double x, std::size_t n,
                                    std::size_t paths, Rng& rng) {
    const double bound = maximal_inequality_bound(model, mu, x, n);
    const ArmDistribution arm(model, mu);
    const std::uint64_t seed = rng();
    std::size_t hits = 0;
    for (std::size_t p = 0; p < paths; ++p) {
        Rng path = Rng::stream(seed, p);
        double partial = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            partial += mu - sample(arm, path);
            if (partial >= x) {
                ++hits;
                break;
            }
        }
    }
    return finish("maximal", {{"family", model.name()}, {"mu", mu}, {"x", x}, {"N", n}, {"paths", paths}}, bound,
                  hits, paths);
}

void to_json(nlohmann::json& j, const PinskerReport& r) {
    j = nlohmann::json{{"bound", "pinsker"},
                       {"family", r.family},
                       {"theta_lo", r.theta_lo},
                       {"theta_hi", r.theta_hi},
                       {"c1", r.c1},
                       {"c2", r.c2},
                       {"pairs", r.pairs},
                       {"natural_violations", r.natural_violations},
                       {"mean_violations", r.mean_violations},
                       {"inverse_violations", r.inverse_violations},
                       {"pass", r.pass}};
}

PinskerReport pinsker_check(const ExpFamilyModel& model, double theta_lo, double theta_hi, std::size_t samples,
                            Rng& rng) {
    if (!(theta_lo < theta_hi) || !model.in_theta_domain(theta_lo) || !model.in_theta_domain(theta_hi)) {
        throw DomainError("pinsker check: compact must be a nondegenerate interval inside the natural domain");
    }
    PinskerReport report;
    report.family = model.name();
    report.theta_lo = theta_lo;
    report.theta_hi = theta_hi;
    constexpr int kIntervals = 10000;
    report.c1 = kInf;
    report.c2 = 0.0;
    for (int i = 0; i <= kIntervals; ++i) {
        const double theta = theta_lo + (theta_hi - theta_lo) * i / kIntervals;
        const double curv = model.curvature(theta);
        report.c1 = std::min(report.c1, curv);
        report.c2 = std::max(report.c2, curv);
    }
    const double c1 = report.c1;
    const double c2 = report.c2;
    for (std::size_t k = 0; k < samples; ++k) {
        const double theta = theta_lo + (theta_hi - theta_lo) * rng.uniform();
        const double lambda = theta_lo + (theta_hi - theta_lo) * rng.uniform();
        const double dt2 = (theta - lambda) * (theta - lambda);
        const double kl = kl_natural(model, theta, lambda);
        if (!leq(0.5 * c1 * dt2, kl) || !leq(kl, 0.5 * c2 * dt2)) ++report.natural_violations;

        const double x = model.mean_of(theta);
        const double v = model.mean_of(lambda);
        const double dx2 = (x - v) * (x - v);
        const double d = kl_mean(model, x, v);
        if (!leq(dx2 / (2.0 * c2), d) || !leq(d, dx2 / (2.0 * c1))) ++report.mean_violations;

        const double lo = std::min(x, v);
        const double hi = std::max(x, v);
        if (lo < hi && !leq(model.natural_of(hi) - model.natural_of(lo), (hi - lo) / c1)) ++report.inverse_violations;
    }
    report.pairs = samples;
    report.pass = report.natural_violations == 0 && report.mean_violations == 0 && report.inverse_violations == 0;
    return report;
}

void to_json(nlohmann::json& j, const EnvelopeReport& r) {
    j = nlohmann::json{{"bound", "posterior-tail-envelope"},
                       {"x", r.x},
                       {"v", r.v},
                       {"divergence", r.divergence},
                       {"prior_mass", r.prior_mass},
                       {"upper_case", r.upper_case},
                       {"b_a", r.b_a},
                       {"b_b", r.b_b},
                       {"c", r.c},
                       {"fitted_rate", r.fitted_rate},
                       {"rate_relative_error", r.rate_relative_error},
                       {"envelope_ok", r.envelope_ok},
                       {"rate_ok", r.rate_ok},
                       {"violations", r.violations},
                       {"n_points", r.n.size()},
                       {"pass", r.pass}};
}

EnvelopeReport posterior_tail_envelope(const Prior& prior, const ExpFamilyModel& model, double x, double v,
                                       const std::vector<std::size_t>& n_range) {
    if (!model.in_mean_domain(x) || !model.in_mean_domain(v)) {
        throw DomainError("posterior tail envelope: x and v must be interior means");
    }
    if (n_range.empty()) throw DomainError("posterior tail envelope: empty n range");
    std::vector<std::size_t> ns(n_range);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    EnvelopeReport r;
    r.x = x;
    r.v = v;
    r.upper_case = x < v;
    r.divergence = kl_mean(model, x, v);
    const bool proper = !(std::holds_alternative<GaussianPrior>(prior) && std::get<GaussianPrior>(prior).is_flat());
    if (proper) r.prior_mass = Posterior(model, prior).tail(v);

    for (std::size_t n : ns) {
        if (n == 0) continue;  // the no-data tail is reported as prior_mass
        const double tail = Posterior::from_statistics(model, prior, n, x).tail(v);
        if (!(tail > 0.0)) throw NumericFailure("posterior tail envelope: tail underflow at n = " + std::to_string(n));
        r.n.push_back(n);
        r.tail.push_back(tail);
        r.log_tail.push_back(-std::log(tail));
        r.residual.push_back(r.log_tail.back() - static_cast<double>(n) * r.divergence);
    }
    if (r.n.empty()) throw DomainError("posterior tail envelope: need at least one n >= 1");

    const double log_n0 = std::log(static_cast<double>(r.n.front()));
    if (r.upper_case) {
        r.b_a = r.residual.front() - log_n0;
        r.b_b = -r.residual.front() - 0.5 * log_n0;
        for (std::size_t i = 0; i < r.n.size(); ++i) {
            const double ln = std::log(static_cast<double>(r.n[i]));
            const double res = r.residual[i];
            if (!leq(res, ln + r.b_a) || !leq(-0.5 * ln - r.b_b, res)) ++r.violations;
        }
        // Exponential rate from a least-squares line over n in [100, 1000].
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < r.n.size(); ++i) {
            if (r.n[i] >= 100 && r.n[i] <= 1000) {
                xs.push_back(static_cast<double>(r.n[i]));
                ys.push_back(r.log_tail[i]);
            }
        }
        if (xs.size() >= 2) {
            const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxy += (xs[i] - mx) * (ys[i] - my);
                sxx += (xs[i] - mx) * (xs[i] - mx);
            }
            r.fitted_rate = sxy / sxx;
            r.rate_relative_error = std::abs(r.fitted_rate - r.divergence) / r.divergence;
            r.rate_ok = r.rate_relative_error <= 0.02;
        }
    } else {
        r.c = r.tail.front() * std::sqrt(static_cast<double>(r.n.front()));
        for (std::size_t i = 0; i < r.n.size(); ++i) {
            if (!leq(r.c / std::sqrt(static_cast<double>(r.n[i])), r.tail[i])) ++r.violations;
        }
    }
    r.envelope_ok = r.violations == 0;
    r.pass = r.envelope_ok && r.rate_ok;
    return r;
}

}  // namespace bandit

namespace bandit {

std::vector<std::string_view> bound_suite_names() {
    return {"chernoff", "self-normalized", "maximal", "pinsker", "envelope", "all"};
}

SuiteResult run_bound_suite(std::string_view suite, std::uint64_t seed, std::size_t paths) {
    SuiteResult result;
    result.suite = std::string(suite);
    result.reports = nlohmann::json::array();
    const auto bern = ExpFamilyModel::bernoulli();
    const auto gauss = ExpFamilyModel::gaussian(1.0);
    const auto pois = ExpFamilyModel::poisson();
    const auto expo = ExpFamilyModel::exponential();
    const bool all = suite == "all";
    bool known = all;
    std::uint64_t check_id = 0;
    auto next_rng = [&] { return Rng::stream(seed, ++check_id); };

    if (all || suite == "chernoff") {
        known = true;
        struct Case { ExpFamilyModel m; double mu, x; std::size_t s; };
        for (const Case& c : {Case{bern, 0.5, 0.6, 10}, Case{bern, 0.5, 0.7, 50}, Case{bern, 0.1, 0.2, 50},
                              Case{gauss, 0.0, 0.5, 10}, Case{pois, 1.0, 1.5, 10}, Case{expo, 1.0, 1.5, 10}}) {
            Rng rng = next_rng();
            result.reports.push_back(chernoff_check(c.m, c.mu, c.x, c.s, paths, rng));
        }
    }
    if (all || suite == "self-normalized") {
        known = true;
        struct Case { ExpFamilyModel m; double mu, delta; std::size_t t; };
        for (const Case& c : {Case{bern, 0.5, 5.0, 100}, Case{bern, 0.5, 8.0, 100}, Case{bern, 0.2, 6.0, 200},
                              Case{gauss, 0.0, 5.0, 100}, Case{pois, 1.0, 6.0, 100}}) {
            Rng rng = next_rng();
            result.reports.push_back(self_normalized_check(c.m, c.mu, c.delta, c.t, paths, rng));
        }
    }
    if (all || suite == "maximal") {
        known = true;
        struct Case { ExpFamilyModel m; double mu, x; std::size_t n; };
        for (const Case& c : {Case{bern, 0.5, 20.0, 100}, Case{bern, 0.5, 10.0, 100}, Case{gauss, 0.0, 15.0, 50},
                              Case{gauss, 0.0, 5.0, 50}, Case{pois, 1.0, 10.0, 50}, Case{expo, 1.0, 10.0, 50}}) {
            Rng rng = next_rng();
            result.reports.push_back(maximal_inequality_check(c.m, c.mu, c.x, c.n, paths, rng));
        }
    }
    if (all || suite == "pinsker") {
        known = true;
        struct Case { ExpFamilyModel m; double lo, hi; };
        for (const Case& c : {Case{gauss, -2.0, 2.0}, Case{bern, -2.0, 2.0}, Case{pois, 0.0, 1.0},
                              Case{expo, -2.0, -0.5}}) {
            Rng rng = next_rng();
            result.reports.push_back(pinsker_check(c.m, c.lo, c.hi, paths, rng));
        }
    }
    if (all || suite == "envelope") {
        known = true;
        std::vector<std::size_t> ns(1000);
        std::iota(ns.begin(), ns.end(), std::size_t{1});
        struct Case { ExpFamilyModel m; Prior prior; double x, v; };
        for (const Case& c : {Case{bern, BetaPrior{1.0, 1.0}, 0.3, 0.5}, Case{bern, BetaPrior{1.0, 1.0}, 0.6, 0.5},
                              Case{gauss, GaussianPrior::flat(), 0.0, 0.5}, Case{gauss, GaussianPrior::flat(), 0.5, 0.0}}) {
            nlohmann::json report = posterior_tail_envelope(c.prior, c.m, c.x, c.v, ns);
            report["family"] = c.m.name();
            report["prior"] = describe(c.prior);
            result.reports.push_back(std::move(report));
        }
    }
    if (!known) throw ConfigError("unknown bound suite '" + std::string(suite) + "'");
    result.pass = std::all_of(result.reports.begin(), result.reports.end(),
                              [](const nlohmann::json& r) { return r.at("pass").get<bool>(); });
    return result;
}

}  // namespace bandit
