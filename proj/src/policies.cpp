#include "banditlab/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace bandit {

namespace {

struct KindName {
    PolicyKind kind;
    std::string_view name;
};

constexpr std::array<KindName, 11> kKindNames{{
    {PolicyKind::KlUcb, "kl-ucb"},
    {PolicyKind::KlUcbPlus, "kl-ucb-plus"},
    {PolicyKind::KlUcbHPlus, "kl-ucb-h-plus"},
    {PolicyKind::BayesUcb, "bayes-ucb"},
    {PolicyKind::ThompsonSampling, "thompson-sampling"},
    {PolicyKind::Moss, "moss"},
    {PolicyKind::LaiIndex, "lai-index"},
    {PolicyKind::FhGittinsApprox, "fh-gittins-approx"},
    {PolicyKind::FhGittinsExact, "fh-gittins-exact"},
    {PolicyKind::BayesOptimalTwoArmed, "bayes-optimal-two-armed"},
    {PolicyKind::UniformRandom, "uniform-random"},
}};

// log(t log^c t), with the log^c factor only once log log t > 0 is safe.
double log_with_loglog(double t, double c) {
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    double value = std::log(t);
    if (c > 0.0 && t >= 3.0) value += c * std::log(std::log(t));
    return value;
}

Clamp effective_clamp(const std::optional<Clamp>& clamp, const ExpFamilyModel& model) {
    if (clamp) return *clamp;
    return {model.mean_lo(), model.mean_hi()};
}

BetaPrior beta_prior_of(const PolicyConfig& config) {
    if (!config.prior) return BetaPrior{1.0, 1.0};
    if (const auto* beta = std::get_if<BetaPrior>(&*config.prior)) return *beta;
    throw UnsupportedConfiguration(config.name() + ": requires a beta prior");
}

}  // namespace

std::string_view policy_kind_name(PolicyKind kind) {
    for (const auto& entry : kKindNames) {
        if (entry.kind == kind) return entry.name;
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
    for (const auto& entry : kKindNames) {
        if (entry.name == name) return entry.kind;
    }
    throw ConfigError("unknown policy '" + std::string(name) + "'");
}

bool requires_horizon(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::KlUcbHPlus:
        case PolicyKind::Moss:
        case PolicyKind::LaiIndex:
        case PolicyKind::FhGittinsApprox:
        case PolicyKind::FhGittinsExact:
        case PolicyKind::BayesOptimalTwoArmed: return true;
        default: return false;
    }
}

bool is_bayesian(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::BayesUcb:
        case PolicyKind::ThompsonSampling:
        case PolicyKind::FhGittinsExact:
        case PolicyKind::BayesOptimalTwoArmed: return true;
        default: return false;
    }
}

void validate_policy(const PolicyConfig& config, const ExpFamilyModel& model, std::size_t arms) {
    const std::string who = config.name();
    if (arms == 0) throw ConfigError(who + ": no arms");
    if (!(config.c >= 0.0) || !std::isfinite(config.c)) throw ConfigError(who + ": c must be a nonnegative number");
    if (requires_horizon(config.kind) && (!config.horizon || *config.horizon == 0)) {
        throw ConfigError(who + ": a positive horizon is required");
    }
    if (config.clamp) {
        const auto [lo, hi] = *config.clamp;
        if (!(lo < hi) || !model.in_mean_domain(lo) || !model.in_mean_domain(hi)) {
            throw ConfigError(who + ": clamp must be an interval strictly inside the mean domain");
        }
    }
    if (config.prior) {
        if (!is_bayesian(config.kind)) throw ConfigError(who + ": prior given to a non-Bayesian policy");
        validate_prior(*config.prior, model);
    }
    if (config.kind == PolicyKind::FhGittinsExact) {
        if (model.kind() != Family::Bernoulli) throw UnsupportedConfiguration(who + ": only Bernoulli arms are supported");
        beta_prior_of(config);
        if (*config.horizon > static_cast<std::size_t>(BetaGittinsTable::kMaxHorizon)) {
            throw UnsupportedConfiguration(who + ": horizon above " + std::to_string(BetaGittinsTable::kMaxHorizon));
        }
    }
    if (config.kind == PolicyKind::BayesOptimalTwoArmed) {
        if (model.kind() != Family::Bernoulli || arms != 2) {
            throw UnsupportedConfiguration(who + ": only two Bernoulli arms are supported");
        }
        const auto beta = beta_prior_of(config);
        if (beta.alpha != 1.0 || beta.beta != 1.0) throw UnsupportedConfiguration(who + ": only uniform priors are supported");
        if (*config.horizon > static_cast<std::size_t>(TwoArmedSolution::kMaxHorizon)) {
            throw UnsupportedConfiguration(who + ": horizon above " + std::to_string(TwoArmedSolution::kMaxHorizon));
        }
    }
}

double exploration_rate(PolicyKind kind, double t, double n_pulls, std::optional<double> horizon, double c) {
    if (!(t >= 1.0)) throw DomainError("exploration_rate: t must be at least 1");
    auto need_pulls = [&] {
        if (!(n_pulls >= 1.0)) throw DomainError("exploration_rate: arm must have been pulled");
    };
    auto need_horizon = [&] {
        if (!horizon) throw ConfigError(std::string(policy_kind_name(kind)) + ": exploration rate needs a horizon");
        return *horizon;
    };
    double level = 0.0;
    switch (kind) {
        case PolicyKind::KlUcb:
        case PolicyKind::BayesUcb: level = log_with_loglog(t, c); break;
        case PolicyKind::KlUcbPlus:
            need_pulls();
            level = log_with_loglog(t, c) - std::log(n_pulls);
            break;
        case PolicyKind::KlUcbHPlus: {
            const double T = need_horizon();
            need_pulls();
            level = log_with_loglog(T, c) - std::log(n_pulls);
            break;
        }
        case PolicyKind::LaiIndex: {
            const double T = need_horizon();
            need_pulls();
            level = std::log(T / n_pulls);
            break;
        }
        case PolicyKind::FhGittinsApprox: {
            const double T = need_horizon();
            need_pulls();
            const double remaining = std::max(1.0, T - t);
            level = std::log(remaining / n_pulls);
            break;
        }
        default:
            throw ConfigError(std::string(policy_kind_name(kind)) + " has no divergence exploration rate");
    }
    return std::max(0.0, level);
}

double kl_ucb_family_index(const ArmStatistics& stats, double level, const ExpFamilyModel& model) {
    if (stats.pulls == 0) throw DomainError("kl-ucb index: arm has not been pulled");
    return d_level_set_sup(model, stats.empirical_mean(), level / static_cast<double>(stats.pulls), model.mean_hi());
}

double bayes_ucb_index(const Posterior& posterior, double t, double c, std::optional<Clamp> clamp) {
    const double scale = std::exp(log_with_loglog(std::max(t, 1.0), c));
    const double alpha = std::max(1.0 - 1.0 / scale, 0.5);
    if (clamp && posterior.count() > 0) {
        const double xbar = std::clamp(posterior.xbar(), clamp->lo, clamp->hi);
        return posterior.with_mean(xbar).quantile(alpha);
    }
    return posterior.quantile(alpha);
}

double moss_index(const ArmStatistics& stats, std::size_t horizon, std::size_t arms) {
    if (stats.pulls == 0) throw DomainError("moss index: arm has not been pulled");
    const double n = static_cast<double>(stats.pulls);
    const double bonus = std::max(0.0, std::log(static_cast<double>(horizon) / (static_cast<double>(arms) * n)));
    return stats.empirical_mean() + std::sqrt(bonus / n);
}

PolicyResources prepare_resources(const PolicyConfig& config, const ExpFamilyModel& model, std::size_t arms,
                                  const std::string& gittins_cache_dir) {
    validate_policy(config, model, arms);
    PolicyResources res;
    if (config.kind == PolicyKind::FhGittinsExact) {
        const auto beta = beta_prior_of(config);
        const BetaState prior(beta.alpha, beta.beta);
        const int horizon = static_cast<int>(*config.horizon);
        if (gittins_cache_dir.empty()) {
            res.gittins = std::make_shared<const BetaGittinsTable>(build_gittins_table(prior, horizon));
        } else {
            namespace fs = std::filesystem;
            const fs::path path = fs::path(gittins_cache_dir) /
                                  ("gittins_a" + std::to_string(beta.alpha) + "_b" + std::to_string(beta.beta) +
                                   "_T" + std::to_string(horizon) + ".csv");
            if (fs::exists(path)) {
                res.gittins = std::make_shared<const BetaGittinsTable>(BetaGittinsTable::load_csv(path.string()));
            } else {
                auto table = build_gittins_table(prior, horizon);
                std::error_code ec;
                fs::create_directories(gittins_cache_dir, ec);
                table.save_csv(path.string());
                res.gittins = std::make_shared<const BetaGittinsTable>(std::move(table));
            }
        }
    }
    if (config.kind == PolicyKind::BayesOptimalTwoArmed) {
        res.optimal = std::make_shared<const TwoArmedSolution>(bayes_optimal_two_armed(static_cast<int>(*config.horizon)));
    }
    return res;
}

Policy::Policy(PolicyConfig config, ExpFamilyModel model, std::size_t arms, PolicyResources resources)
    : config_(std::move(config)), model_(model), resources_(std::move(resources)), stats_(arms),
      cache_(arms, 0.0), cache_valid_(arms, false), scratch_(arms, 0.0) {
    validate_policy(config_, model_, arms);
    if (config_.kind == PolicyKind::FhGittinsExact) {
        if (!resources_.gittins) resources_ = prepare_resources(config_, model_, arms);
        const auto beta = beta_prior_of(config_);
        if (resources_.gittins->prior().alpha != beta.alpha || resources_.gittins->prior().beta != beta.beta ||
            resources_.gittins->horizon() < static_cast<int>(*config_.horizon)) {
            throw ConfigError(config_.name() + ": gittins table does not match the prior and horizon");
        }
    }
    if (config_.kind == PolicyKind::BayesOptimalTwoArmed) {
        if (!resources_.optimal) resources_ = prepare_resources(config_, model_, arms);
        if (resources_.optimal->horizon() != static_cast<int>(*config_.horizon)) {
            throw ConfigError(config_.name() + ": optimal policy table has the wrong horizon");
        }
    }
    if (is_bayesian(config_.kind)) {
        const Prior prior = config_.prior ? *config_.prior : default_prior(model_);
        posteriors_.assign(arms, Posterior(model_, prior));
    }
}

bool Policy::forced_initialization() const {
    return config_.kind != PolicyKind::FhGittinsExact && config_.kind != PolicyKind::BayesOptimalTwoArmed;
}

bool Policy::index_depends_on_round() const {
    switch (config_.kind) {
        case PolicyKind::KlUcbHPlus:
        case PolicyKind::Moss:
        case PolicyKind::LaiIndex: return false;
        default: return true;
    }
}

double Policy::index(std::size_t arm) const {
    if (arm >= stats_.size()) throw std::out_of_range("policy index: arm out of range");
    const ArmStatistics& st = stats_[arm];
    const double t = std::max(1.0, static_cast<double>(round_));
    const double n = static_cast<double>(st.pulls);
    std::optional<double> horizon;
    if (config_.horizon) horizon = static_cast<double>(*config_.horizon);
    switch (config_.kind) {
        case PolicyKind::KlUcb:
        case PolicyKind::KlUcbPlus:
        case PolicyKind::KlUcbHPlus:
            return kl_ucb_family_index(st, exploration_rate(config_.kind, t, n, horizon, config_.c), model_);
        case PolicyKind::LaiIndex: {
            const Clamp cl = effective_clamp(config_.clamp, model_);
            const double level = exploration_rate(config_.kind, t, n, horizon, config_.c) / n;
            const double x = std::clamp(st.empirical_mean(), cl.lo, cl.hi);
            return d_level_set_sup(model_, x, level, cl.hi);
        }
        case PolicyKind::FhGittinsApprox: {
            const Clamp cl = effective_clamp(config_.clamp, model_);
            const double level = exploration_rate(config_.kind, t, n, horizon, config_.c) / n;
            return d_tilde_level_set_sup(model_, st.empirical_mean(), level, cl.lo, cl.hi);
        }
        case PolicyKind::Moss: return moss_index(st, *config_.horizon, stats_.size());
        case PolicyKind::BayesUcb: return bayes_ucb_index(posteriors_[arm], t, config_.c, config_.clamp);
        case PolicyKind::FhGittinsExact: {
            const int s = static_cast<int>(st.reward_sum);
            const int f = static_cast<int>(st.pulls) - s;
            const int r = static_cast<int>(*config_.horizon) - static_cast<int>(round_);
            return resources_.gittins->at(s, f, r);
        }
        default: throw std::logic_error(config_.name() + " is not an index policy");
    }
}

std::size_t Policy::argmax_random(const std::vector<double>& values, Rng& rng) const {
    const double best = *std::max_element(values.begin(), values.end());
    std::size_t ties = 0;
    for (double v : values) ties += v == best ? 1 : 0;
    std::size_t pick = ties == 1 ? 0 : rng.below(ties);
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (values[a] == best) {
            if (pick == 0) return a;
            --pick;
        }
    }
    return 0;
}

std::size_t Policy::select(Rng& rng) {
    std::size_t total = 0;
    for (const auto& st : stats_) total += st.pulls;
    if (total != round_) throw std::logic_error("policy state inconsistent: pulls do not sum to the round");
    if (config_.horizon && round_ >= *config_.horizon) throw std::logic_error(config_.name() + ": horizon exhausted");

    const std::size_t K = stats_.size();
    if (forced_initialization() && round_ < K && stats_[round_].pulls == 0) return round_;

    switch (config_.kind) {
        case PolicyKind::UniformRandom: return rng.below(K);
        case PolicyKind::ThompsonSampling:
            for (std::size_t a = 0; a < K; ++a) scratch_[a] = posteriors_[a].sample(rng);
            return argmax_random(scratch_, rng);
        case PolicyKind::BayesOptimalTwoArmed: {
            const int s1 = static_cast<int>(stats_[0].reward_sum);
            const int s2 = static_cast<int>(stats_[1].reward_sum);
            const TwoArmedDpState state{s1, static_cast<int>(stats_[0].pulls) - s1, s2,
                                        static_cast<int>(stats_[1].pulls) - s2};
            if (resources_.optimal->tie(state)) return rng.below(2);
            return static_cast<std::size_t>(resources_.optimal->action(state));
        }
        default: break;
    }
    const bool per_round = index_depends_on_round();
    for (std::size_t a = 0; a < K; ++a) {
        if (per_round || !cache_valid_[a]) {
            cache_[a] = index(a);
            cache_valid_[a] = true;
        }
        scratch_[a] = cache_[a];
    }
    return argmax_random(scratch_, rng);
}

void Policy::update(std::size_t arm, double reward) {
    if (arm >= stats_.size()) throw std::out_of_range("policy update: arm out of range");
    if (!model_.in_support(reward)) {
        throw DomainError("policy update: reward " + std::to_string(reward) + " outside the support of " + model_.name());
    }
    stats_[arm].pulls += 1;
    stats_[arm].reward_sum += reward;
    if (!posteriors_.empty()) posteriors_[arm] = posteriors_[arm].updated(reward);
    cache_valid_[arm] = false;
    ++round_;
}

}  // namespace bandit
