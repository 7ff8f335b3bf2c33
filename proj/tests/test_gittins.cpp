#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "banditlab/gittins.hpp"

using namespace bandit;

TEST_CASE("calibration value") {
    CHECK(calibration_value(BetaState(1, 1), 1, 0.5) == 0.0);
    CHECK(calibration_value(BetaState(1, 1), 1, 0.3) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(calibration_value(BetaState(1, 1), 0, 0.1) == 0.0);
    CHECK(calibration_value(BetaState(1, 1), 2, 5.0 / 9.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(calibration_value(BetaState(1, 1), 2, 5.0 / 9.0 - 1e-6) > 0.0);
    CHECK_THROWS_AS(calibration_value(BetaState(1, 1), -1, 0.5), DomainError);
}

TEST_CASE("calibration value is bounded and monotone") {
    for (double a : {1.0, 2.0, 5.0}) {
        for (double b : {1.0, 3.0}) {
            const BetaState s(a, b);
            for (double lambda : {0.0, 0.2, 0.5, 0.8, 1.0}) {
                double prev = 0.0;
                for (int r = 0; r <= 30; ++r) {
                    const double v = calibration_value(s, r, lambda);
                    REQUIRE(v >= prev - 1e-12);
                    REQUIRE(v <= r * std::max(1.0 - lambda, 0.0) + 1e-12);
                    REQUIRE(v >= r * std::max(s.mean() - lambda, 0.0) - 1e-12);
                    prev = v;
                }
            }
            for (int r : {1, 5, 20}) {
                double prev = 1e300;
                for (int i = 0; i <= 20; ++i) {
                    const double v = calibration_value(s, r, i / 20.0);
                    REQUIRE(v <= prev + 1e-12);
                    prev = v;
                }
            }
        }
    }
}

TEST_CASE("finite-horizon Gittins index") {
    CHECK(fh_gittins_index(BetaState(1, 1), 1) == 0.5);
    CHECK(fh_gittins_index(BetaState(3, 2), 1) == 0.6);
    CHECK(fh_gittins_index(BetaState(1, 1), 2) == doctest::Approx(5.0 / 9.0).epsilon(1e-6));
    CHECK_THROWS_AS(fh_gittins_index(BetaState(1, 1), 0), DomainError);
    for (const BetaState s : {BetaState(1, 1), BetaState(4, 2), BetaState(1, 9)}) {
        double prev = fh_gittins_index(s, 1);
        for (int r = 2; r <= 50; ++r) {
            const double g = fh_gittins_index(s, r);
            REQUIRE(g > prev);
            REQUIRE(g <= 1.0);
            prev = g;
        }
    }
}

TEST_CASE("Gittins table") {
    const BetaGittinsTable table = build_gittins_table(BetaState(1, 1), 30, 1);
    CHECK(table.size() == BetaGittinsTable::entry_count(30));
    for (int s = 0; s < 30; ++s) {
        for (int f = 0; s + f < 30; ++f) {
            double prev = 0.0;
            for (int r = 1; s + f + r <= 30; ++r) {
                const double g = table.at(s, f, r);
                REQUIRE(g >= 0.0);
                REQUIRE(g <= 1.0);
                REQUIRE(g >= prev);
                prev = g;
            }
        }
    }
    CHECK(table.at(3, 4, 10) == fh_gittins_index(BetaState(4, 5), 10));
    CHECK(!table.contains(10, 10, 11));
    CHECK_THROWS_AS(table.at(10, 10, 11), DomainError);

    const BetaGittinsTable one = build_gittins_table(BetaState(2, 3), 1, 1);
    CHECK(one.size() == 1);
    CHECK(one.at(0, 0, 1) == 0.4);

    CHECK_THROWS_AS(build_gittins_table(BetaState(1, 1), 2001, 1), DomainError);
    CHECK_THROWS_AS(build_gittins_table(BetaState(1, 1), 0, 1), DomainError);
}

TEST_CASE("Gittins table CSV round-trip") {
    const auto path = std::filesystem::temp_directory_path() / "banditlab_gittins_roundtrip.csv";
    const BetaGittinsTable table = build_gittins_table(BetaState(1, 2), 12, 2);
    table.save_csv(path.string());
    const BetaGittinsTable back = BetaGittinsTable::load_csv(path.string());
    CHECK(back.horizon() == 12);
    CHECK(back.prior().alpha == 1.0);
    CHECK(back.prior().beta == 2.0);
    for (int s = 0; s < 12; ++s) {
        for (int f = 0; s + f < 12; ++f) {
            for (int r = 1; s + f + r <= 12; ++r) REQUIRE(back.at(s, f, r) == table.at(s, f, r));
        }
    }
    std::filesystem::remove(path);
    CHECK_THROWS_AS(BetaGittinsTable::load_csv(path.string()), IoError);
}

TEST_CASE("two-armed optimal values") {
    CHECK(bayes_optimal_two_armed(1).value() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bayes_optimal_two_armed(1).bayes_risk() == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(std::abs(bayes_optimal_two_armed(2).value() - 13.0 / 12.0) <= 1e-12);
    CHECK_THROWS_AS(bayes_optimal_two_armed(101), DomainError);

    double prev_value = 0.0, prev_risk = 0.0;
    for (int t = 1; t <= 60; ++t) {
        const TwoArmedSolution sol = bayes_optimal_two_armed(t);
        REQUIRE(sol.value() > prev_value);
        REQUIRE(sol.bayes_risk() >= prev_risk - 1e-12);
        REQUIRE(sol.value() <= t * 2.0 / 3.0);
        prev_value = sol.value();
        prev_risk = sol.bayes_risk();
    }
}

TEST_CASE("policy evaluation reproduces the optimal value") {
    for (int t : {1, 2, 7, 25}) {
        const TwoArmedSolution sol = bayes_optimal_two_armed(t);
        const double v = evaluate_two_armed_policy(
            t, [&](const TwoArmedDpState& s, int) { return sol.action(s) == 0 ? 1.0 : 0.0; });
        CHECK(v == doctest::Approx(sol.value()).epsilon(1e-12));
        // uniform random play earns T/2
        CHECK(evaluate_two_armed_policy(t, [](const TwoArmedDpState&, int) { return 0.5; }) ==
              doctest::Approx(t * 0.5).epsilon(1e-12));
    }
}

TEST_CASE("FH-Gittins is optimal for short horizons and close for longer ones") {
    for (int horizon : {1, 2, 10, 30}) {
        const BetaGittinsTable table = build_gittins_table(BetaState(1, 1), horizon, 1);
        const double gittins = evaluate_two_armed_policy(horizon, [&](const TwoArmedDpState& s, int r) {
            const double g1 = table.at(s.s1, s.f1, r);
            const double g2 = table.at(s.s2, s.f2, r);
            return g1 > g2 ? 1.0 : (g1 < g2 ? 0.0 : 0.5);
        });
        const double optimal = bayes_optimal_two_armed(horizon).value();
        INFO("T = " << horizon);
        CHECK(gittins <= optimal + 1e-12);
        if (horizon <= 2) CHECK(gittins == doctest::Approx(optimal).epsilon(1e-12));
        // the regret gap stays a small fraction of the optimal Bayes risk
        CHECK(optimal - gittins <= 0.1 * bayes_optimal_two_armed(horizon).bayes_risk());
    }
}
