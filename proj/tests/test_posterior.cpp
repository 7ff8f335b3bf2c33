#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "banditlab/posterior.hpp"

using namespace bandit;

namespace {

const auto bern = ExpFamilyModel::bernoulli();

BetaPrior beta_of(const Posterior& p) { return std::get<BetaPrior>(p.conjugate_posterior()); }

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double worst = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return worst;
}

}  // namespace

TEST_CASE("conjugate updates") {
    const Posterior flat(bern, BetaPrior{1.0, 1.0});
    CHECK(beta_of(flat.updated(1.0)) == BetaPrior{2.0, 1.0});
    CHECK(beta_of(Posterior(bern, BetaPrior{2.0, 3.0}).updated(0.0)) == BetaPrior{2.0, 4.0});
    CHECK_THROWS_AS(flat.updated(0.5), DomainError);

    const auto pois = ExpFamilyModel::poisson();
    const auto g = std::get<GammaPrior>(Posterior(pois, GammaPrior{1.0, 1.0}).updated(3.0).updated(0.0).conjugate_posterior());
    CHECK(g == GammaPrior{4.0, 3.0});
    CHECK_THROWS_AS(Posterior(pois, GammaPrior{}).updated(1.5), DomainError);

    const auto expo = ExpFamilyModel::exponential();
    const auto ig = std::get<InverseGammaPrior>(Posterior(expo, InverseGammaPrior{1.0, 1.0}).updated(2.5).conjugate_posterior());
    CHECK(ig == InverseGammaPrior{2.0, 3.5});

    // precision-weighted normal: prior N(0, 1), sigma2 = 1, one observation 2 -> N(1, 1/2)
    const auto gauss = ExpFamilyModel::gaussian(1.0);
    const auto gp = std::get<GaussianPrior>(Posterior(gauss, GaussianPrior{0.0, 1.0}).updated(2.0).conjugate_posterior());
    CHECK(gp.mean0 == doctest::Approx(1.0));
    CHECK(gp.variance0 == doctest::Approx(0.5));
}

TEST_CASE("sequential updates equal the batch posterior") {
    Rng rng(21);
    const std::vector<std::pair<ExpFamilyModel, Prior>> cases = {
        {bern, BetaPrior{1.0, 1.0}},
        {bern, GridPrior::uniform(0.0, 1.0, 1024)},
        {ExpFamilyModel::poisson(), GammaPrior{2.0, 1.0}},
        {ExpFamilyModel::exponential(), InverseGammaPrior{1.0, 1.0}},
        {ExpFamilyModel::gaussian(1.0), GaussianPrior::flat()},
    };
    for (const auto& [model, prior] : cases) {
        Posterior p(model, prior);
        const ArmDistribution arm(model, model.kind() == Family::Bernoulli ? 0.4 : (model.kind() == Family::Gaussian ? 0.3 : 2.0));
        for (int i = 0; i < 12; ++i) p = p.updated(sample(arm, rng));
        const Posterior batch = Posterior::from_statistics(model, prior, p.count(), p.xbar());
        for (double u : {0.05, 0.3, 0.5, 0.7, 0.95, 1.5, 2.5}) {
            if (!model.in_mean_domain(u)) continue;
            if (std::holds_alternative<GridPrior>(prior) && (u < 0.0 || u > 1.0)) continue;
            REQUIRE(p.density(u) == doctest::Approx(batch.density(u)).epsilon(1e-9));
        }
    }
}

TEST_CASE("density") {
    const Posterior prior(bern, BetaPrior{2.0, 5.0});
    // Beta(2,5) density 30 u (1-u)^4
    CHECK(prior.density(0.3) == doctest::Approx(30.0 * 0.3 * std::pow(0.7, 4)));
    CHECK(Posterior::from_statistics(bern, BetaPrior{}, 2, 1.0).density(0.7) == doctest::Approx(3.0 * 0.49));
    const Posterior grid = Posterior::from_statistics(bern, GridPrior::uniform(0.0, 1.0), 2, 1.0);
    CHECK(std::abs(grid.density(0.5) - 0.75) <= 1e-4);
}

TEST_CASE("grid posterior matches the conjugate Beta posterior") {
    const GridPrior uniform = GridPrior::uniform(0.0, 1.0);
    for (std::size_t n : {1u, 5u, 20u}) {
        for (double x : {0.0, 0.3, 1.0}) {
            const Posterior grid = Posterior::from_statistics(bern, uniform, n, x);
            const Posterior exact = Posterior::from_statistics(bern, BetaPrior{1.0, 1.0}, n, x);
            double worst = 0.0;
            for (double u : uniform.grid()) {
                if (u <= 0.0 || u >= 1.0) continue;
                worst = std::max(worst, std::abs(grid.density(u) - exact.density(u)));
            }
            INFO("n = " << n << ", x = " << x);
            CHECK(worst <= 1e-4);
        }
    }
}

TEST_CASE("quantiles") {
    CHECK(Posterior(bern, BetaPrior{1.0, 1.0}).quantile(0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(Posterior(bern, BetaPrior{3.0, 1.0}).quantile(0.729) == doctest::Approx(0.9).epsilon(1e-12));
    const auto gauss = ExpFamilyModel::gaussian(1.0);
    // mpmath: 0.5 * sqrt(2) * erfinv(0.95)
    CHECK(Posterior::from_statistics(gauss, GaussianPrior::flat(), 4, 0.0).quantile(0.975) ==
          doctest::Approx(0.97998199227002712).epsilon(1e-12));
    CHECK_THROWS_AS(Posterior(bern, BetaPrior{}).quantile(1.0), DomainError);
    CHECK_THROWS_AS(Posterior(bern, BetaPrior{}).quantile(0.0), DomainError);

    const Posterior p = Posterior::from_statistics(bern, BetaPrior{}, 7, 3.0 / 7.0);
    double prev = 0.0;
    for (int i = 1; i < 1000; ++i) {
        const double q = p.quantile(i / 1000.0);
        REQUIRE(q >= prev);
        prev = q;
    }
}

TEST_CASE("tails") {
    CHECK(Posterior(bern, BetaPrior{3.0, 1.0}).tail(0.5) == doctest::Approx(0.875).epsilon(1e-14));
    CHECK(Posterior(bern, BetaPrior{2.0, 2.0}).tail(0.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(Posterior(bern, BetaPrior{2.0, 2.0}).tail(0.0) == 1.0);
    CHECK(Posterior(bern, BetaPrior{2.0, 2.0}).tail(1e-300) == doctest::Approx(1.0));
    CHECK(Posterior::from_statistics(bern, GridPrior::uniform(0.0, 1.0), 2, 1.0).tail(0.0) == doctest::Approx(1.0));
}

TEST_CASE("quantile and tail are dual") {
    const std::vector<Posterior> posteriors = {
        Posterior::from_statistics(bern, BetaPrior{}, 10, 0.3),
        Posterior::from_statistics(bern, GridPrior::uniform(0.0, 1.0), 10, 0.3),
        Posterior::from_statistics(ExpFamilyModel::poisson(), GammaPrior{1.0, 1.0}, 20, 2.5),
        Posterior::from_statistics(ExpFamilyModel::exponential(), InverseGammaPrior{1.0, 1.0}, 20, 2.5),
        Posterior::from_statistics(ExpFamilyModel::gaussian(2.0), GaussianPrior::flat(), 9, -1.0),
        Posterior::from_statistics(ExpFamilyModel::gaussian(2.0), GaussianPrior{1.0, 3.0}, 9, -1.0),
    };
    for (const auto& p : posteriors) {
        for (double alpha : {0.01, 0.5, 0.99}) {
            REQUIRE(std::abs(p.tail(p.quantile(alpha)) - (1.0 - alpha)) <= 1e-8);
        }
    }
}

TEST_CASE("means") {
    CHECK(Posterior(bern, BetaPrior{1.0, 1.0}).mean() == doctest::Approx(0.5));
    CHECK(Posterior(bern, BetaPrior{3.0, 1.0}).mean() == doctest::Approx(0.75));
    CHECK(Posterior(ExpFamilyModel::poisson(), GammaPrior{2.0, 4.0}).mean() == doctest::Approx(0.5));
    CHECK(Posterior::from_statistics(bern, GridPrior::uniform(0.0, 1.0), 2, 1.0).mean() ==
          doctest::Approx(0.75).epsilon(1e-6));
    CHECK_THROWS_AS(Posterior(ExpFamilyModel::gaussian(1.0), GaussianPrior::flat()).mean(), DomainError);
}

TEST_CASE("sampling") {
    Rng rng(22);
    for (auto [prior, expected] : {std::pair{BetaPrior{1.0, 1.0}, 0.5}, std::pair{BetaPrior{3.0, 1.0}, 0.75}}) {
        const Posterior p(bern, prior);
        double sum = 0.0;
        for (int i = 0; i < 1000000; ++i) sum += p.sample(rng);
        CHECK(std::abs(sum / 1e6 - expected) <= 0.002);
    }
    // grid density proportional to u^2 versus the conjugate Beta(3,1)
    const Posterior grid(bern, GridPrior::from_function(0.0, 1.0, GridPrior::kDefaultPoints,
                                                        [](double u) { return 3.0 * u * u + 1e-12; }));
    const Posterior conj(bern, BetaPrior{3.0, 1.0});
    std::vector<double> a, b;
    for (int i = 0; i < 100000; ++i) {
        a.push_back(grid.sample(rng));
        b.push_back(conj.sample(rng));
    }
    CHECK(two_sample_ks(a, b) <= 0.01);
}

TEST_CASE("posterior concentrates") {
    const std::size_t n = 10000;
    const std::vector<std::pair<ExpFamilyModel, double>> cases = {
        {bern, 0.3}, {ExpFamilyModel::poisson(), 2.0}, {ExpFamilyModel::exponential(), 2.0},
        {ExpFamilyModel::gaussian(1.0), -0.4}};
    for (const auto& [model, mu] : cases) {
        const Posterior p = Posterior::from_statistics(model, default_prior(model), n, mu);
        CHECK(std::abs(p.quantile(0.5) - mu) <= 3.0 * std::sqrt(variance(model, mu) / n));
    }
}

TEST_CASE("prior validation") {
    CHECK_THROWS_AS(validate_prior(GammaPrior{}, bern), ConfigError);
    CHECK_THROWS_AS(validate_prior(BetaPrior{0.0, 1.0}, bern), ConfigError);
    CHECK_NOTHROW(validate_prior(BetaPrior{0.5, 0.5}, bern));
    CHECK_THROWS_AS(GridPrior({0.0, 0.5, 0.4}, {1.0, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(GridPrior({0.0, 1.0}, {1.0, 0.0}), DomainError);
    CHECK(describe(Prior(BetaPrior{1.0, 1.0})) == "beta(1,1)");
}
