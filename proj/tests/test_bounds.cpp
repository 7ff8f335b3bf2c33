#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "banditlab/bounds.hpp"

using namespace bandit;

namespace {

const auto bern = ExpFamilyModel::bernoulli();

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logistic_density(double t) {
    const double e = std::exp(-std::abs(t));
    return e / ((1.0 + e) * (1.0 + e));
}

std::vector<std::size_t> one_to(std::size_t n) {
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), 1);
    return out;
}

}  // namespace

TEST_CASE("Lai-Robbins constant") {
    CHECK(lai_robbins_curve(BanditInstance(bern, {0.4, 0.4})).constant == 0.0);
    // mpmath: d(0.05, 0.15) = 0.050733738921307676
    CHECK(lai_robbins_curve(BanditInstance(bern, {0.05, 0.15})).constant ==
          doctest::Approx(0.1 / 0.050733738921307676).epsilon(1e-12));
    const auto expo = ExpFamilyModel::exponential();
    std::vector<double> means{1.0, 1.5, 2.0, 2.5, 3.0};
    const double c = lai_robbins_curve(BanditInstance(expo, means)).constant;
    CHECK(c == doctest::Approx(58.19872851441065).epsilon(1e-12));
    CHECK(lai_robbins_curve(BanditInstance(expo, means)).evaluate(std::exp(2.0)) == doctest::Approx(2.0 * c));
    Rng rng(41);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(means.begin(), means.end(), rng);
        REQUIRE(lai_robbins_curve(BanditInstance(expo, means)).constant == doctest::Approx(c).epsilon(1e-14));
    }
}

TEST_CASE("Bernoulli uniform Bayes-risk constant") {
    CHECK(bernoulli_uniform_constant(2) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(bernoulli_uniform_constant(3) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(bernoulli_uniform_constant(5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(bernoulli_uniform_constant(100000) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK_THROWS_AS(bernoulli_uniform_constant(1), DomainError);
}

TEST_CASE("quadrature") {
    CHECK(adaptive_simpson([](double x) { return x * x; }, 0.0, 3.0, 1e-12) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x * x); }, -INFINITY, INFINITY) ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-8));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, INFINITY) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(integrate([](double x) { return std::exp(x); }, -INFINITY, 0.0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("homogeneous Bayes-risk constant matches the closed form") {
    for (int k = 2; k <= 20; ++k) {
        const BayesRiskConstant c = bayes_risk_constant_homogeneous(logistic_density, logistic, k);
        INFO("K = " << k);
        CHECK(c.method == BayesRiskMethod::NumericHomogeneous);
        CHECK(std::abs(c.value / bernoulli_uniform_constant(k) - 1.0) <= 1e-6);
    }
    // exponential arms with inverse-gamma(1,1) means: theta = -1/mu has density e^theta on (-inf, 0)
    auto e = [](double t) { return std::exp(t); };
    CHECK(bayes_risk_constant_homogeneous(e, e, 5, -INFINITY, 0.0).value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK_THROWS_AS(bayes_risk_constant_homogeneous(logistic_density, logistic, 1), DomainError);
}

TEST_CASE("product-form constant reduces to the homogeneous one") {
    for (int k : {2, 3, 6}) {
        const std::vector<ThetaPrior> priors(k, ThetaPrior{logistic_density, logistic});
        const BayesRiskConstant c = bayes_risk_constant_product(priors);
        CHECK(c.method == BayesRiskMethod::NumericGeneralProduct);
        CHECK(c.value == doctest::Approx(bernoulli_uniform_constant(k)).epsilon(1e-6));
    }
}

TEST_CASE("analytic bound values") {
    CHECK(self_normalized_bound(1.0, 1) == doctest::Approx(1.0));
    CHECK(self_normalized_bound(5.0, 100) == doctest::Approx(0.44004880962734770).epsilon(1e-13));
    CHECK(maximal_inequality_bound(bern, 0.5, 0.0, 100) == 1.0);
    CHECK(maximal_inequality_bound(bern, 0.5, 20.0, 100) == doctest::Approx(2.66993071188615e-4).epsilon(1e-12));
    CHECK(maximal_inequality_bound(ExpFamilyModel::gaussian(1.0), 0.0, 15.0, 50) ==
          doctest::Approx(0.10539922456186434).epsilon(1e-13));
    CHECK_THROWS_AS(maximal_inequality_bound(bern, 0.5, 60.0, 100), DomainError);
    CHECK(chernoff_bound(ExpFamilyModel::gaussian(1.0), 0.0, 0.5, 10) == doctest::Approx(std::exp(-1.25)));
}

TEST_CASE("Monte Carlo checks pass on small samples") {
    Rng rng(42);
    const auto gauss = ExpFamilyModel::gaussian(1.0);
    const std::vector<BoundCheck> checks = {
        chernoff_check(bern, 0.5, 0.7, 20, 20000, rng),
        chernoff_check(ExpFamilyModel::poisson(), 1.0, 1.5, 10, 20000, rng),
        self_normalized_check(bern, 0.5, 8.0, 100, 5000, rng),
        self_normalized_check(gauss, 0.0, 5.0, 100, 5000, rng),
        maximal_inequality_check(bern, 0.5, 10.0, 100, 5000, rng),
        maximal_inequality_check(ExpFamilyModel::exponential(), 1.0, 10.0, 50, 5000, rng),
    };
    for (const auto& c : checks) {
        INFO(nlohmann::json(c).dump());
        CHECK(c.pass);
        CHECK(c.empirical >= 0.0);
        CHECK(c.empirical <= 1.0);
        CHECK(c.standard_error >= 0.0);
    }
    const nlohmann::json j = checks.front();
    for (const char* key : {"bound", "parameters", "analytic", "empirical", "standard_error", "pass"}) {
        CHECK(j.contains(key));
    }
}

TEST_CASE("Monte Carlo checks are reproducible") {
    Rng a(43), b(43);
    const BoundCheck x = maximal_inequality_check(bern, 0.5, 5.0, 50, 2000, a);
    const BoundCheck y = maximal_inequality_check(bern, 0.5, 5.0, 50, 2000, b);
    CHECK(x.empirical == y.empirical);
}

TEST_CASE("Pinsker-type inequalities") {
    Rng rng(44);
    const PinskerReport g = pinsker_check(ExpFamilyModel::gaussian(1.0), -2.0, 2.0, 10000, rng);
    CHECK(g.c1 == doctest::Approx(1.0));
    CHECK(g.c2 == doctest::Approx(1.0));
    CHECK(g.pass);

    const PinskerReport b = pinsker_check(bern, -2.0, 2.0, 10000, rng);
    CHECK(b.c1 == doctest::Approx(0.10499358540350652).epsilon(1e-12));
    CHECK(b.c2 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b.natural_violations + b.mean_violations + b.inverse_violations == 0);
    CHECK(b.pass);

    const PinskerReport p = pinsker_check(ExpFamilyModel::poisson(), 0.0, 1.0, 10000, rng);
    CHECK(p.c1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.c2 == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(p.pass);

    CHECK_THROWS(pinsker_check(bern, 1.0, 1.0, 10, rng));
}

TEST_CASE("posterior tail envelope, x < v") {
    const EnvelopeReport r = posterior_tail_envelope(BetaPrior{}, bern, 0.3, 0.5, one_to(1000));
    CHECK(r.upper_case);
    CHECK(r.n.size() == 1000);
    CHECK(r.divergence == doctest::Approx(0.08228287850505185).epsilon(1e-13));
    CHECK(r.b_a <= 5.0);
    CHECK(r.b_b <= 5.0);
    CHECK(r.violations == 0);
    CHECK(r.rate_ok);
    CHECK(r.rate_relative_error <= 0.02);
    CHECK(r.pass);
    // the tail at n = 1 is the Beta(1.3, 1.7) upper tail
    CHECK(r.tail.front() == doctest::Approx(Posterior::from_statistics(bern, BetaPrior{}, 1, 0.3).tail(0.5)));
}

TEST_CASE("posterior tail envelope, v <= x") {
    const EnvelopeReport r = posterior_tail_envelope(BetaPrior{}, bern, 0.6, 0.5, one_to(1000));
    CHECK(!r.upper_case);
    CHECK(r.c > 0.0);
    CHECK(r.violations == 0);
    CHECK(r.pass);
}

TEST_CASE("posterior tail envelope without data") {
    std::vector<std::size_t> ns{0};
    for (std::size_t n = 1; n <= 50; ++n) ns.push_back(n);
    const EnvelopeReport r = posterior_tail_envelope(BetaPrior{}, bern, 0.3, 0.4, ns);
    CHECK(r.prior_mass == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(r.n.front() == 1);
}

TEST_CASE("unknown suite") { CHECK_THROWS_AS(run_bound_suite("nope", 1, 10), ConfigError); }
