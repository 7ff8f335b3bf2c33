#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "banditlab/exp_family.hpp"
#include "banditlab/gittins.hpp"
#include "banditlab/posterior.hpp"
#include "banditlab/rng.hpp"

namespace bandit {

enum class PolicyKind {
    KlUcb,
    KlUcbPlus,
    KlUcbHPlus,
    BayesUcb,
    ThompsonSampling,
    Moss,
    LaiIndex,
    FhGittinsApprox,
    FhGittinsExact,
    BayesOptimalTwoArmed,
    UniformRandom,
};

/// Lower-kebab-case name used in config files and output ("kl-ucb-h-plus").
std::string_view policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

bool requires_horizon(PolicyKind kind);
bool is_bayesian(PolicyKind kind);

/// Known compact [lo, hi] inside the mean domain containing every arm mean.
struct Clamp {
    double lo;
    double hi;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::KlUcb;
    double c = 0.0;
    std::optional<std::size_t> horizon;
    std::optional<Clamp> clamp;
    /// Bayesian policies only; the family default when unset.
    std::optional<Prior> prior;
    /// Display name; the kind name when empty.
    std::string label;

    std::string name() const { return label.empty() ? std::string(policy_kind_name(kind)) : label; }
};

/// Throws ConfigError for a missing horizon, a bad clamp, a prior of the
/// wrong family or an unsupported (kind, family) pair.
void validate_policy(const PolicyConfig& config, const ExpFamilyModel& model, std::size_t arms);

struct ArmStatistics {
    std::size_t pulls = 0;
    double reward_sum = 0.0;

    /// 0 when the arm has not been pulled.
    double empirical_mean() const { return pulls == 0 ? 0.0 : reward_sum / static_cast<double>(pulls); }
};

/// Exploration level of the UCB-type indices at round t (rounds completed):
///   kl-UCB       log(t log^c t)
///   kl-UCB+      log(t log^c t / N)
///   kl-UCB-H+    log(T log^c T / N)
///   Lai          log(T / N)
///   FH-Gittins approximation  log((T - t) / N), with T - t floored at 1
/// The log^c factor is applied only for t >= 3 and the result is floored at 0.
double exploration_rate(PolicyKind kind, double t, double n_pulls, std::optional<double> horizon, double c);

/// sup{ q : N d(mu_hat, q) <= level }.
double kl_ucb_family_index(const ArmStatistics& stats, double level, const ExpFamilyModel& model);

/// Posterior quantile of order max(1 - 1/(t log^c t), 1/2). With a clamp the
/// posterior is rebuilt with its empirical mean projected into the clamp.
double bayes_ucb_index(const Posterior& posterior, double t, double c, std::optional<Clamp> clamp = std::nullopt);

/// mu_hat + sqrt(log+(T / (K N)) / N).
double moss_index(const ArmStatistics& stats, std::size_t horizon, std::size_t arms);

/// Precomputed tables shared (read-only) by every replication of a policy.
struct PolicyResources {
    std::shared_ptr<const BetaGittinsTable> gittins;
    std::shared_ptr<const TwoArmedSolution> optimal;
};

/// Builds the tables a configuration needs (FH-Gittins, Bayes-optimal).
/// When `gittins_cache_dir` is non-empty, Gittins tables are loaded from or
/// saved to a CSV cache there.
PolicyResources prepare_resources(const PolicyConfig& config, const ExpFamilyModel& model, std::size_t arms,
                                  const std::string& gittins_cache_dir = {});

/// A stateful arm-selection strategy. Not thread-safe; each replication owns one.
class Policy {
public:
    Policy(PolicyConfig config, ExpFamilyModel model, std::size_t arms, PolicyResources resources = {});

    /// Arm to pull at the current round. Rounds 0..K-1 pull each arm once in
    /// order (except for FH-Gittins and the Bayes-optimal policy, which are
    /// defined from the prior on); afterwards the argmax of the index with
    /// uniformly random tie-breaking.
    std::size_t select(Rng& rng);
    void update(std::size_t arm, double reward);

    std::size_t round() const { return round_; }
    std::size_t arms() const { return stats_.size(); }
    const PolicyConfig& config() const { return config_; }
    const ExpFamilyModel& model() const { return model_; }
    const std::vector<ArmStatistics>& statistics() const { return stats_; }
    /// Empty for non-Bayesian policies.
    const std::vector<Posterior>& posteriors() const { return posteriors_; }

    /// Index of one arm at the current round (not defined for Thompson
    /// sampling, the Bayes-optimal policy and uniform random play).
    double index(std::size_t arm) const;

private:
    bool forced_initialization() const;
    bool index_depends_on_round() const;
    std::size_t argmax_random(const std::vector<double>& values, Rng& rng) const;

    PolicyConfig config_;
    ExpFamilyModel model_;
    PolicyResources resources_;
    std::vector<ArmStatistics> stats_;
    std::vector<Posterior> posteriors_;
    std::vector<double> cache_;
    std::vector<bool> cache_valid_;
    std::vector<double> scratch_;
    std::size_t round_ = 0;
};

}  // namespace bandit
