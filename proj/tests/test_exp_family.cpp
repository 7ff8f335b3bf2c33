#include <doctest.h>

#include <cmath>
#include <vector>

#include "banditlab/exp_family.hpp"

using namespace bandit;

namespace {

const auto bern = ExpFamilyModel::bernoulli();
const auto gauss1 = ExpFamilyModel::gaussian(1.0);
const auto pois = ExpFamilyModel::poisson();
const auto expo = ExpFamilyModel::exponential();

// Random interior mean for each family.
double random_mean(const ExpFamilyModel& m, Rng& rng) {
    switch (m.kind()) {
        case Family::Bernoulli: return 0.001 + 0.998 * rng.uniform();
        case Family::Gaussian: return -20.0 + 40.0 * rng.uniform();
        default: return std::exp(-5.0 + 10.0 * rng.uniform());
    }
}

}  // namespace

TEST_CASE("kl_mean closed forms") {
    CHECK(kl_mean(bern, 0.3, 0.3) == 0.0);
    // mpmath, 40 digits
    CHECK(kl_mean(bern, 0.05, 0.15) == doctest::Approx(0.050733738921307676).epsilon(1e-13));
    CHECK(kl_mean(gauss1, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kl_mean(ExpFamilyModel::gaussian(2.0), 0.0, 2.0) == doctest::Approx(1.0));
    CHECK(kl_mean(pois, 5.0, 4.0) == doctest::Approx(0.11571775657104878).epsilon(1e-13));
    CHECK(kl_mean(expo, 1.0, 3.0) == doctest::Approx(1.0 / 3.0 - 1.0 + std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("kl_mean boundary conventions") {
    CHECK(kl_mean(bern, 0.0, 0.5) == doctest::Approx(std::log(2.0)));
    CHECK(kl_mean(bern, 1.0, 0.5) == doctest::Approx(std::log(2.0)));
    CHECK(std::isinf(kl_mean(bern, 0.5, 1.0)));
    CHECK(kl_mean(pois, 0.0, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(kl_mean(bern, -0.1, 0.5), DomainError);
    CHECK_THROWS_AS(kl_mean(bern, 0.5, 1.2), DomainError);
    CHECK_THROWS_AS(kl_mean(pois, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(kl_mean(gauss1, NAN, 1.0), DomainError);
}

TEST_CASE("kl_natural") {
    CHECK(kl_natural(bern, 0.7, 0.7) == 0.0);
    CHECK(kl_natural(bern, 0.0, std::log(9.0)) == doctest::Approx(0.51082562376599068).epsilon(1e-13));
    CHECK(kl_natural(gauss1, 0.0, 1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(kl_natural(expo, 0.5, -1.0), DomainError);
}

TEST_CASE("variance") {
    CHECK(variance(bern, 0.5) == doctest::Approx(0.25));
    CHECK(variance(ExpFamilyModel::gaussian(2.0), -7.0) == doctest::Approx(2.0));
    CHECK(variance(expo, 3.0) == doctest::Approx(9.0));
    CHECK(variance(pois, 4.5) == doctest::Approx(4.5));
    CHECK_THROWS_AS(variance(bern, 1.0), DomainError);
}

TEST_CASE("natural and mean maps are inverse") {
    Rng rng(11);
    for (const auto& m : {bern, gauss1, pois, expo}) {
        for (int i = 0; i < 10000; ++i) {
            const double mu = random_mean(m, rng);
            const double back = m.mean_of(m.natural_of(mu));
            REQUIRE(std::abs(back - mu) <= 1e-10 * std::max(1.0, std::abs(mu)));
            REQUIRE(variance(m, mu) > 0.0);
        }
    }
}

TEST_CASE("closed forms agree with the natural-parameter formula") {
    Rng rng(12);
    for (const auto& m : {bern, gauss1, pois, expo}) {
        for (int i = 0; i < 5000; ++i) {
            const double x = random_mean(m, rng);
            const double y = random_mean(m, rng);
            const double a = kl_mean(m, x, y);
            const double b = kl_natural(m, m.natural_of(x), m.natural_of(y));
            // Both sides lose relative accuracy when x and y nearly coincide.
            REQUIRE(std::abs(a - b) <= 1e-9 * a + 1e-13);
        }
    }
}

TEST_CASE("d(x, .) increases beyond x") {
    for (const auto& m : {bern, gauss1, pois, expo}) {
        const double x = m.kind() == Family::Bernoulli ? 0.3 : (m.kind() == Family::Gaussian ? 0.0 : 1.0);
        const double top = m.kind() == Family::Bernoulli ? 0.999 : x + 10.0;
        double prev = 0.0;
        for (int i = 1; i <= 500; ++i) {
            const double q = x + (top - x) * i / 500.0;
            const double d = kl_mean(m, x, q);
            REQUIRE(d > prev);
            prev = d;
        }
    }
}

TEST_CASE("d_level_set_sup") {
    CHECK(d_level_set_sup(bern, 0.5, 0.0) == 0.5);
    CHECK(d_level_set_sup(bern, 0.0, 0.6931) == doctest::Approx(1.0 - std::exp(-0.6931)).epsilon(1e-9));
    CHECK(d_level_set_sup(gauss1, 0.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d_level_set_sup(bern, 0.2, 5.0, 0.6) == 0.6);
    CHECK(d_level_set_sup(expo, 2.0, 1e6) > 1e10);
    CHECK_THROWS_AS(d_level_set_sup(bern, 0.5, -1.0), DomainError);
}

TEST_CASE("d_level_set_sup inversion residual") {
    Rng rng(13);
    for (const auto& m : {bern, pois, expo}) {
        for (int i = 0; i < 2000; ++i) {
            const double x = random_mean(m, rng);
            const double level = std::exp(-8.0 + 10.0 * rng.uniform());
            const double q = d_level_set_sup(m, x, level);
            REQUIRE(q >= x);
            if (q >= m.mean_hi()) continue;
            const double d = kl_mean(m, x, q);
            REQUIRE(d <= level + 1e-9);
            // Near the boundary one ulp of q can move d by more than 1e-9; then q
            // must be the last representable mean below the level.
            const bool resolved = std::abs(d - level) <= 1e-9;
            const double next = std::nextafter(q, m.mean_hi());
            REQUIRE((resolved || next >= m.mean_hi() || kl_mean(m, x, next) > level));
        }
    }
}

TEST_CASE("d_bar clamps its first argument") {
    CHECK(d_bar(bern, 0.3, 0.5, 0.1, 0.9) == kl_mean(bern, 0.3, 0.5));
    CHECK(d_bar(bern, 0.0, 0.5, 0.1, 0.9) == doctest::Approx(0.36806420716849707).epsilon(1e-13));
    CHECK(d_bar(pois, 10.0, 4.0, 0.5, 5.0) == doctest::Approx(0.11571775657104878).epsilon(1e-13));
    CHECK_THROWS_AS(d_bar(bern, 0.3, 0.5, 0.9, 0.1), DomainError);
}

TEST_CASE("d_tilde") {
    CHECK(d_tilde(bern, 0.5, 0.7, 0.1) == kl_mean(bern, 0.5, 0.7));
    CHECK(d_tilde(bern, 0.1, 0.5, 0.1) == doctest::Approx(kl_mean(bern, 0.1, 0.5)));
    // d(0.1, 0.5) + log(9) * 0.05, mpmath
    CHECK(d_tilde(bern, 0.05, 0.5, 0.1) == doctest::Approx(0.47792543603530804).epsilon(1e-13));
    // continuity at mu_lo, linear in the gap
    const double base = kl_mean(bern, 0.1, 0.5);
    const double slope = std::log(9.0);
    for (double eps : {1e-2, 1e-4, 1e-6}) {
        CHECK(d_tilde(bern, 0.1 - eps, 0.5, 0.1) - base == doctest::Approx(slope * eps).epsilon(1e-9));
    }
    CHECK_THROWS_AS(d_tilde(bern, 0.05, 1.5, 0.1), DomainError);
}

TEST_CASE("d_tilde_level_set_sup solves the regularized level") {
    const double q = d_tilde_level_set_sup(bern, 0.0, 1.0, 0.1, 1.0);
    CHECK(d_tilde(bern, 0.0, q, 0.1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sampling moments") {
    Rng rng(14);
    SUBCASE("bernoulli near the upper boundary") {
        const ArmDistribution arm(bern, 1.0 - 1e-12);
        int ones = 0;
        for (int i = 0; i < 1000000; ++i) ones += sample(arm, rng) == 1.0;
        CHECK(ones >= 1000000 - 1);
    }
    SUBCASE("exponential mean") {
        const ArmDistribution arm(expo, 2.0);
        double sum = 0.0;
        for (int i = 0; i < 1000000; ++i) {
            const double y = sample(arm, rng);
            REQUIRE(y >= 0.0);
            sum += y;
        }
        CHECK(std::abs(sum / 1e6 - 2.0) <= 0.01);
    }
    SUBCASE("gaussian variance") {
        const ArmDistribution arm(gauss1, 0.0);
        double s = 0.0, ss = 0.0;
        for (int i = 0; i < 1000000; ++i) {
            const double y = sample(arm, rng);
            s += y;
            ss += y * y;
        }
        const double mean = s / 1e6;
        CHECK(std::abs(ss / 1e6 - mean * mean - 1.0) <= 0.01);
    }
    SUBCASE("poisson support") {
        const ArmDistribution arm(pois, 3.0);
        for (int i = 0; i < 10000; ++i) {
            const double y = sample(arm, rng);
            REQUIRE(y >= 0.0);
            REQUIRE(y == std::floor(y));
        }
    }
}

TEST_CASE("instances") {
    const BanditInstance inst(bern, {0.2, 0.8, 0.8});
    CHECK(inst.mu_star() == 0.8);
    CHECK(inst.optimal_set() == std::vector<std::size_t>{1, 2});
    CHECK_THROWS_AS(ArmDistribution(bern, 1.0), DomainError);
    CHECK_THROWS_AS(BanditInstance(bern, {}), ConfigError);
    CHECK(parse_family("exponential") == Family::Exponential);
    CHECK_THROWS_AS(parse_family("cauchy"), ConfigError);
}
