#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "banditlab/exp_family.hpp"
#include "banditlab/policies.hpp"
#include "banditlab/posterior.hpp"
#include "banditlab/rng.hpp"

namespace bandit {

enum class ExperimentMode { FixedInstance, BayesRisk };
enum class RegretKind { Pseudo, Realized };
enum class OutputFormat { Csv, Json };

/// Degenerate mean prior: the arm mean is always `value`.
struct PointMass {
    double value = 0.0;
    bool operator==(const PointMass&) const = default;
};

using MeanPrior = std::variant<PointMass, Prior>;

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::FixedInstance;
    ExpFamilyModel model = ExpFamilyModel::bernoulli();
    std::vector<double> means;            // FixedInstance
    std::vector<MeanPrior> mean_priors;   // BayesRisk, one per arm
    std::vector<PolicyConfig> policies;
    std::size_t horizon = 1000;
    std::size_t replications = 100;
    std::uint64_t seed = 0;
    /// Unset: geometric default grid. Set but empty: no curve points.
    std::optional<std::vector<std::size_t>> checkpoints;
    unsigned workers = 0;  // 0 = hardware concurrency
    std::string output_path;
    OutputFormat format = OutputFormat::Csv;
    RegretKind regret = RegretKind::Pseudo;
    std::string gittins_cache_dir;

    std::size_t arms() const { return mode == ExperimentMode::FixedInstance ? means.size() : mean_priors.size(); }
};

/// Checks the invariants (T >= K, N >= 1, checkpoints inside [1, T], every
/// policy valid for the family) and fills policy horizons from the
/// experiment horizon. Throws ConfigError.
ExperimentConfig validated(ExperimentConfig config);

/// 64 geometrically spaced rounds in [1, T], deduplicated, plus T.
std::vector<std::size_t> default_checkpoints(std::size_t horizon);

std::string mode_name(ExperimentMode mode);
std::string describe(const MeanPrior& prior);

struct Trajectory {
    std::vector<std::uint32_t> arms;
    std::vector<double> rewards;
    std::vector<double> pseudo_regret;  // cumulative, index t - 1
    std::vector<std::size_t> pulls;
};

/// T select/update cycles of a fresh policy. Rewards come from `rng`.
Trajectory run_episode(const BanditInstance& instance, Policy& policy, std::size_t horizon, Rng& rng);

/// As above with one reward stream per arm, so that different policies
/// facing the same instance see the same k-th reward of each arm.
Trajectory run_episode(const BanditInstance& instance, Policy& policy, std::size_t horizon, Rng& policy_rng,
                       std::vector<Rng>& reward_rngs);

struct PolicyCurve {
    std::string name;
    std::string kind;
    double c = 0.0;
    std::string prior;  // empty for non-Bayesian policies
    std::vector<double> mean;
    std::vector<double> standard_error;
    std::vector<double> mean_pulls;  // E[N_a(T)]
    bool operator==(const PolicyCurve&) const = default;
};

/// Deterministic reference curve drawn next to the Monte Carlo curves.
struct Overlay {
    std::string name;
    double constant = 0.0;  // 0 when the curve has no single constant
    std::vector<double> values;
    bool operator==(const Overlay&) const = default;
};

struct RunResult {
    std::string mode;
    std::string family;
    std::size_t horizon = 0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::string regret;
    std::vector<std::size_t> checkpoints;
    std::vector<PolicyCurve> policies;
    std::vector<Overlay> overlays;
    double wall_clock_seconds = 0.0;
    nlohmann::json config;  // echo of the experiment configuration
    bool operator==(const RunResult&) const = default;
};

void to_json(nlohmann::json& j, const RunResult& result);
void from_json(const nlohmann::json& j, RunResult& result);

nlohmann::json config_echo(const ExperimentConfig& config);

/// FixedInstance replications. Replication r of policy p draws from
/// substreams keyed by (seed, r), so output does not depend on `workers`.
/// Adds the asymptotic frequentist lower bound as overlay `lower_bound`.
RunResult monte_carlo_regret(const ExperimentConfig& config);

/// BayesRisk replications: arm means are drawn from the mean priors first.
/// Overlays the Bayes-risk lower bound (`lower_bound`, and the factor-two
/// variant `lower_bound_alt`) and, for two uniform Bernoulli arms with T <= 100,
/// the exact optimal Bayes risk `bayes_optimal`.
RunResult bayes_risk_estimate(const ExperimentConfig& config);

/// Dispatches on the mode.
RunResult run_experiment(const ExperimentConfig& config);

/// CSV `t,policy,mean_regret,stderr,n_reps,seed`, overlays last.
std::string to_csv(const RunResult& result);
void emit(const RunResult& result, OutputFormat format, const std::string& path);

}  // namespace bandit
