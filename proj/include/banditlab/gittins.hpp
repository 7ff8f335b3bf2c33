#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "banditlab/errors.hpp"

namespace bandit {

/// Beta posterior on a Bernoulli mean.
struct BetaState {
    double alpha = 1.0;
    double beta = 1.0;

    BetaState() = default;
    BetaState(double a, double b);

    double mean() const { return alpha / (alpha + beta); }
    BetaState after_success() const { return {alpha + 1.0, beta}; }
    BetaState after_failure() const { return {alpha, beta + 1.0}; }
};

/// Value of the calibration game: pay lambda per pull of an arm with posterior
/// `state`, stop whenever, at most r pulls. Computed by backward induction.
double calibration_value(const BetaState& state, int r, double lambda);

/// Finite-horizon Gittins index G(state, r) = inf{lambda : V_lambda(state, r) = 0}.
///
/// Bisection on [posterior mean, 1] down to a bracket of width 1e-7, returning
/// the midpoint. For r = 1 the index is the posterior mean, returned exactly.
double fh_gittins_index(const BetaState& state, int r);

/// G(prior + (s successes, f failures), r) for every state reachable in a game
/// of the given horizon, i.e. s + f + r <= horizon with r >= 1.
class BetaGittinsTable {
public:
    static constexpr int kMaxHorizon = 2000;

    BetaGittinsTable(BetaState prior, int horizon, std::vector<double> values);

    const BetaState& prior() const { return prior_; }
    int horizon() const { return horizon_; }
    std::size_t size() const { return values_.size(); }

    bool contains(int successes, int failures, int r) const;
    double at(int successes, int failures, int r) const;

    /// CSV cache: a prior/horizon header, then rows
    /// alpha_offset,beta_offset,r,G ordered by (s + f, s, r).
    void save_csv(const std::string& path) const;
    static BetaGittinsTable load_csv(const std::string& path);

    static std::size_t entry_count(int horizon);

private:
    std::size_t offset(int successes, int failures, int r) const;

    BetaState prior_;
    int horizon_;
    std::vector<std::size_t> layer_offset_;
    std::vector<double> values_;
};

/// Rejects horizons above kMaxHorizon. `workers` = 0 uses the hardware concurrency.
BetaGittinsTable build_gittins_table(const BetaState& prior, int horizon, unsigned workers = 0);

/// Success/failure counts of both arms of a two-armed Bernoulli bandit with
/// independent uniform priors.
struct TwoArmedDpState {
    int s1 = 0;
    int f1 = 0;
    int s2 = 0;
    int f2 = 0;

    int total() const { return s1 + f1 + s2 + f2; }
};

/// Bayes-optimal policy for the two-armed Bernoulli bandit with uniform priors.
class TwoArmedSolution {
public:
    static constexpr int kMaxHorizon = 100;

    TwoArmedSolution(int horizon, double value, std::vector<std::uint8_t> actions);

    int horizon() const { return horizon_; }
    /// Maximal expected total reward over the horizon.
    double value() const { return value_; }
    /// horizon * E[max(mu1, mu2)] - value, with E[max] = 2/3 under uniform priors.
    double bayes_risk() const { return horizon_ * 2.0 / 3.0 - value_; }

    /// Optimal arm (0 or 1) in `state`; arm 0 when both are optimal.
    int action(const TwoArmedDpState& state) const;
    /// Both arms optimal in `state` (values equal to 1e-12 relative).
    bool tie(const TwoArmedDpState& state) const;
    std::size_t tie_count() const;

private:
    std::size_t index(const TwoArmedDpState& state) const;

    int horizon_;
    double value_;
    std::vector<std::uint8_t> actions_;
    std::vector<std::vector<std::size_t>> offsets_;  // [total][n1] -> flat position
};

/// Backward induction over (s1, f1, s2, f2); W(., 0) = 0.
TwoArmedSolution bayes_optimal_two_armed(int horizon);

/// Exact expected total reward of an arbitrary (possibly randomized) Markov
/// policy on the two-armed uniform-prior bandit. `prob_arm0(state, r)` is the
/// probability of pulling arm 0 with r rounds remaining.
double evaluate_two_armed_policy(int horizon,
                                 const std::function<double(const TwoArmedDpState&, int)>& prob_arm0);

/// The table layout shared by the optimal solution and policy evaluation.
std::vector<std::vector<std::size_t>> two_armed_offsets(int horizon);

}  // namespace bandit
