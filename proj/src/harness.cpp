#include "banditlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "banditlab/bounds.hpp"
#include "banditlab/gittins.hpp"

namespace bandit {

namespace {

// Reward streams are keyed apart from the policy streams.
constexpr std::uint64_t kRewardKey = 0x5265776172647321ULL;

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw NumericFailure("cannot format a double");
    return std::string(buf, end);
}

unsigned resolve_workers(unsigned workers) {
    if (workers != 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Calls body(i) for i in [0, n) on a pool of threads; rethrows the first failure.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body body) {
    workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
}

double clamp_open(const ExpFamilyModel& model, double mu) {
    if (model.in_mean_domain(mu)) return mu;
    return std::clamp(mu, std::nextafter(model.mean_lo(), model.mean_hi()),
                      std::nextafter(model.mean_hi(), model.mean_lo()));
}

// Shared engine of both modes. `draw_means` maps (replication, stream) to arm means.
template <class DrawMeans>
std::vector<PolicyCurve> replicate(const ExperimentConfig& config, const std::vector<std::size_t>& checkpoints,
                                   DrawMeans draw_means) {
    const std::size_t K = config.arms();
    const std::size_t P = config.policies.size();
    const std::size_t C = checkpoints.size();
    const std::size_t N = config.replications;

    std::vector<PolicyResources> resources;
    for (const auto& pc : config.policies) {
        resources.push_back(prepare_resources(pc, config.model, K, config.gittins_cache_dir));
    }

    std::vector<double> regret(N * P * C, 0.0);
    std::vector<double> pulls(N * P * K, 0.0);

    parallel_for(N, config.workers, [&](std::size_t rep) {
        Rng mean_rng = Rng::stream(config.seed, rep, 0);
        const BanditInstance instance(config.model, draw_means(mean_rng));
        const double best = instance.mu_star();
        for (std::size_t p = 0; p < P; ++p) {
            Rng policy_rng = Rng::stream(config.seed, rep, p + 1);
            std::vector<Rng> reward_rngs;
            reward_rngs.reserve(K);
            for (std::size_t a = 0; a < K; ++a) reward_rngs.push_back(Rng::stream(config.seed ^ kRewardKey, rep, a));
            Policy policy(config.policies[p], config.model, K, resources[p]);
            const Trajectory traj = run_episode(instance, policy, config.horizon, policy_rng, reward_rngs);

            double* out = &regret[(rep * P + p) * C];
            if (config.regret == RegretKind::Pseudo) {
                for (std::size_t c = 0; c < C; ++c) out[c] = traj.pseudo_regret[checkpoints[c] - 1];
            } else {
                double collected = 0.0;
                std::size_t c = 0;
                for (std::size_t t = 1; t <= config.horizon && c < C; ++t) {
                    collected += traj.rewards[t - 1];
                    while (c < C && checkpoints[c] == t) out[c++] = static_cast<double>(t) * best - collected;
                }
            }
            for (std::size_t a = 0; a < K; ++a) pulls[(rep * P + p) * K + a] = static_cast<double>(traj.pulls[a]);
        }
    });

    // Ordered reduction: sums run over replications in index order.
    std::vector<PolicyCurve> curves;
    for (std::size_t p = 0; p < P; ++p) {
        const PolicyConfig& pc = config.policies[p];
        PolicyCurve curve;
        curve.name = pc.name();
        curve.kind = std::string(policy_kind_name(pc.kind));
        curve.c = pc.c;
        if (is_bayesian(pc.kind)) curve.prior = describe(pc.prior ? *pc.prior : default_prior(config.model));
        curve.mean.assign(C, 0.0);
        curve.standard_error.assign(C, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < N; ++r) sum += regret[(r * P + p) * C + c];
            const double mean = sum / static_cast<double>(N);
            double ss = 0.0;
            for (std::size_t r = 0; r < N; ++r) {
                const double dev = regret[(r * P + p) * C + c] - mean;
                ss += dev * dev;
            }
            curve.mean[c] = mean;
            curve.standard_error[c] = N > 1 ? std::sqrt(ss / static_cast<double>(N - 1) / static_cast<double>(N)) : 0.0;
        }
        curve.mean_pulls.assign(K, 0.0);
        for (std::size_t a = 0; a < K; ++a) {
            double sum = 0.0;
            for (std::size_t r = 0; r < N; ++r) sum += pulls[(r * P + p) * K + a];
            curve.mean_pulls[a] = sum / static_cast<double>(N);
        }
        curves.push_back(std::move(curve));
    }
    return curves;
}

RunResult skeleton(const ExperimentConfig& config, const std::vector<std::size_t>& checkpoints) {
    RunResult result;
    result.mode = mode_name(config.mode);
    result.family = config.model.name();
    result.horizon = config.horizon;
    result.replications = config.replications;
    result.seed = config.seed;
    result.regret = config.regret == RegretKind::Pseudo ? "pseudo" : "realized";
    result.checkpoints = checkpoints;
    result.config = config_echo(config);
    return result;
}

// Natural-parameter density and c.d.f. induced by a prior on the mean.
ThetaPrior theta_prior(const ExpFamilyModel& model, const Prior& prior) {
    auto post = std::make_shared<Posterior>(model, prior);
    ThetaPrior tp;
    tp.density = [post, model](double theta) {
        const double mu = model.mean_of(theta);
        if (!model.in_mean_domain(mu)) return 0.0;
        return post->density(mu) * model.curvature(theta);
    };
    tp.cdf = [post, model](double theta) {
        const double mu = model.mean_of(theta);
        if (!(mu > model.mean_lo())) return 0.0;
        if (!(mu < model.mean_hi())) return 1.0;
        return post->cdf(mu);
    };
    return tp;
}

bool all_uniform_beta(const std::vector<MeanPrior>& priors) {
    const MeanPrior uniform = Prior(BetaPrior{1.0, 1.0});
    return std::all_of(priors.begin(), priors.end(), [&](const MeanPrior& p) { return p == uniform; });
}

}  // namespace

std::string mode_name(ExperimentMode mode) {
    return mode == ExperimentMode::FixedInstance ? "fixed" : "bayes-risk";
}

std::string describe(const MeanPrior& prior) {
    if (const auto* pm = std::get_if<PointMass>(&prior)) return "point(" + format_double(pm->value) + ")";
    return describe(std::get<Prior>(prior));
}

std::vector<std::size_t> default_checkpoints(std::size_t horizon) {
    std::vector<std::size_t> points;
    if (horizon == 0) return points;
    constexpr int kPoints = 64;
    const double log_t = std::log(static_cast<double>(horizon));
    for (int i = 0; i < kPoints; ++i) {
        const auto t = static_cast<std::size_t>(std::llround(std::exp(log_t * i / kPoints)));
        points.push_back(std::clamp<std::size_t>(t, 1, horizon));
    }
    points.push_back(horizon);
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

ExperimentConfig validated(ExperimentConfig config) {
    const std::size_t K = config.arms();
    if (K == 0) throw ConfigError("experiment needs at least one arm");
    if (config.mode == ExperimentMode::FixedInstance) {
        for (double mu : config.means) {
            if (!config.model.in_mean_domain(mu)) {
                throw ConfigError("arm mean " + format_double(mu) + " outside the " + config.model.name() +
                                  " mean domain");
            }
        }
    } else {
        for (const auto& mp : config.mean_priors) {
            if (const auto* pm = std::get_if<PointMass>(&mp)) {
                if (!config.model.in_mean_domain(pm->value)) {
                    throw ConfigError("point-mass mean " + format_double(pm->value) + " outside the mean domain");
                }
            } else {
                const Prior& prior = std::get<Prior>(mp);
                validate_prior(prior, config.model);
                if (const auto* g = std::get_if<GaussianPrior>(&prior); g && g->is_flat()) {
                    throw ConfigError("a flat gaussian prior cannot generate arm means");
                }
            }
        }
    }
    if (config.policies.empty()) throw ConfigError("experiment needs at least one policy");
    if (config.horizon < K) throw ConfigError("horizon must be at least the number of arms");
    if (config.replications == 0) throw ConfigError("replications must be positive");
    if (config.checkpoints) {
        auto& cps = *config.checkpoints;
        for (std::size_t t : cps) {
            if (t < 1 || t > config.horizon) {
                throw ConfigError("checkpoint " + std::to_string(t) + " outside [1, horizon]");
            }
        }
        std::sort(cps.begin(), cps.end());
        cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    }
    for (auto& pc : config.policies) {
        const bool needs_table = pc.kind == PolicyKind::FhGittinsExact || pc.kind == PolicyKind::BayesOptimalTwoArmed;
        if (!pc.horizon && (requires_horizon(pc.kind) || needs_table)) pc.horizon = config.horizon;
        if (needs_table && pc.horizon && *pc.horizon < config.horizon) {
            throw ConfigError(pc.name() + ": policy horizon is shorter than the experiment");
        }
        validate_policy(pc, config.model, K);
    }
    return config;
}

Trajectory run_episode(const BanditInstance& instance, Policy& policy, std::size_t horizon, Rng& policy_rng,
                       std::vector<Rng>& reward_rngs) {
    const std::size_t K = instance.arms();
    if (!(policy.model() == instance.model)) {
        throw ConfigError("policy family " + policy.model().name() + " does not match instance family " +
                          instance.model.name());
    }
    if (policy.arms() != K || reward_rngs.size() != K) throw ConfigError("policy and instance arm counts differ");
    if (policy.round() != 0) throw std::logic_error("run_episode needs a fresh policy");

    std::vector<ArmDistribution> arms;
    for (std::size_t a = 0; a < K; ++a) arms.push_back(instance.arm(a));
    const double best = instance.mu_star();

    Trajectory traj;
    traj.arms.reserve(horizon);
    traj.rewards.reserve(horizon);
    traj.pseudo_regret.reserve(horizon);
    traj.pulls.assign(K, 0);
    double regret = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = policy.select(policy_rng);
        const double reward = sample(arms[a], reward_rngs[a]);
        policy.update(a, reward);
        regret += best - instance.means[a];
        traj.arms.push_back(static_cast<std::uint32_t>(a));
        traj.rewards.push_back(reward);
        traj.pseudo_regret.push_back(regret);
        ++traj.pulls[a];
    }
    return traj;
}

Trajectory run_episode(const BanditInstance& instance, Policy& policy, std::size_t horizon, Rng& rng) {
    // Every arm reads from the same generator.
    const std::size_t K = instance.arms();
    if (!(policy.model() == instance.model)) {
        throw ConfigError("policy family " + policy.model().name() + " does not match instance family " +
                          instance.model.name());
    }
    if (policy.arms() != K) throw ConfigError("policy and instance arm counts differ");
    if (policy.round() != 0) throw std::logic_error("run_episode needs a fresh policy");
    const double best = instance.mu_star();
    Trajectory traj;
    traj.pulls.assign(K, 0);
    double regret = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = policy.select(rng);
        const double reward = sample(instance.arm(a), rng);
        policy.update(a, reward);
        regret += best - instance.means[a];
        traj.arms.push_back(static_cast<std::uint32_t>(a));
        traj.rewards.push_back(reward);
        traj.pseudo_regret.push_back(regret);
        ++traj.pulls[a];
    }
    return traj;
}

nlohmann::json config_echo(const ExperimentConfig& config) {
    nlohmann::json j;
    j["mode"] = mode_name(config.mode);
    j["family"] = config.model.name();
    if (config.model.kind() == Family::Gaussian) j["sigma2"] = config.model.sigma2();
    if (config.mode == ExperimentMode::FixedInstance) {
        j["means"] = config.means;
    } else {
        auto priors = nlohmann::json::array();
        for (const auto& mp : config.mean_priors) priors.push_back(describe(mp));
        j["mean_priors"] = priors;
    }
    auto policies = nlohmann::json::array();
    for (const auto& pc : config.policies) {
        nlohmann::json p{{"name", pc.name()}, {"kind", policy_kind_name(pc.kind)}, {"c", pc.c}};
        if (pc.horizon) p["horizon"] = *pc.horizon;
        if (pc.clamp) p["clamp"] = {pc.clamp->lo, pc.clamp->hi};
        if (is_bayesian(pc.kind)) p["prior"] = describe(pc.prior ? *pc.prior : default_prior(config.model));
        policies.push_back(p);
    }
    j["policies"] = policies;
    j["horizon"] = config.horizon;
    j["replications"] = config.replications;
    j["seed"] = config.seed;
    if (config.checkpoints) {
        j["checkpoints"] = *config.checkpoints;
    } else {
        j["checkpoints"] = "default";
    }
    j["regret"] = config.regret == RegretKind::Pseudo ? "pseudo" : "realized";
    return j;
}

RunResult monte_carlo_regret(const ExperimentConfig& raw) {
    if (raw.mode != ExperimentMode::FixedInstance) throw ConfigError("monte_carlo_regret needs a fixed instance");
    const ExperimentConfig config = validated(raw);
    const auto start = std::chrono::steady_clock::now();
    const auto checkpoints = config.checkpoints ? *config.checkpoints : default_checkpoints(config.horizon);

    RunResult result = skeleton(config, checkpoints);
    result.policies = replicate(config, checkpoints, [&](Rng&) { return config.means; });

    const LowerBoundCurve lr = lai_robbins_curve(BanditInstance(config.model, config.means));
    Overlay overlay{"lower_bound", lr.constant, {}};
    for (std::size_t t : checkpoints) overlay.values.push_back(lr.evaluate(static_cast<double>(t)));
    result.overlays.push_back(std::move(overlay));

    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

RunResult bayes_risk_estimate(const ExperimentConfig& raw) {
    if (raw.mode != ExperimentMode::BayesRisk) throw ConfigError("bayes_risk_estimate needs bayes-risk mode");
    const ExperimentConfig config = validated(raw);
    const auto start = std::chrono::steady_clock::now();
    const auto checkpoints = config.checkpoints ? *config.checkpoints : default_checkpoints(config.horizon);
    const std::size_t K = config.arms();

    // Point masses consume no randomness, so a fully degenerate prior replays
    // the fixed-instance streams exactly.
    std::vector<std::optional<Posterior>> samplers;
    for (const auto& mp : config.mean_priors) {
        if (const auto* prior = std::get_if<Prior>(&mp)) {
            samplers.emplace_back(Posterior(config.model, *prior));
        } else {
            samplers.emplace_back();
        }
    }
    auto draw = [&](Rng& rng) {
        std::vector<double> means(K);
        for (std::size_t a = 0; a < K; ++a) {
            if (samplers[a]) {
                means[a] = clamp_open(config.model, samplers[a]->sample(rng));
            } else {
                means[a] = std::get<PointMass>(config.mean_priors[a]).value;
            }
        }
        return means;
    };

    RunResult result = skeleton(config, checkpoints);
    result.policies = replicate(config, checkpoints, draw);

    const bool proper = std::all_of(config.mean_priors.begin(), config.mean_priors.end(),
                                    [](const MeanPrior& mp) { return std::holds_alternative<Prior>(mp); });
    if (proper && K >= 2) {
        std::optional<BayesRiskConstant> constant;
        if (config.model.kind() == Family::Bernoulli && all_uniform_beta(config.mean_priors)) {
            constant = BayesRiskConstant{bernoulli_uniform_constant(static_cast<int>(K)),
                                         BayesRiskMethod::ClosedFormBernoulliUniform};
        } else {
            try {
                const bool homogeneous =
                    std::all_of(config.mean_priors.begin(), config.mean_priors.end(),
                                [&](const MeanPrior& mp) { return mp == config.mean_priors.front(); });
                if (homogeneous) {
                    const ThetaPrior tp = theta_prior(config.model, std::get<Prior>(config.mean_priors.front()));
                    constant = bayes_risk_constant_homogeneous(tp.density, tp.cdf, static_cast<int>(K),
                                                               config.model.theta_lo(), config.model.theta_hi());
                } else {
                    std::vector<ThetaPrior> tps;
                    for (const auto& mp : config.mean_priors) tps.push_back(theta_prior(config.model, std::get<Prior>(mp)));
                    constant = bayes_risk_constant_product(tps, config.model.theta_lo(), config.model.theta_hi());
                }
            } catch (const DomainError&) {
            } catch (const NumericFailure&) {
            }
        }
        if (constant) {
            Overlay main{"lower_bound", constant->value, {}};
            Overlay alt{"lower_bound_alt", 2.0 * constant->value, {}};
            for (std::size_t t : checkpoints) {
                const double l = std::log(static_cast<double>(t));
                main.values.push_back(main.constant * l * l);
                alt.values.push_back(alt.constant * l * l);
            }
            result.overlays.push_back(std::move(main));
            result.overlays.push_back(std::move(alt));
        }
    }
    if (K == 2 && config.model.kind() == Family::Bernoulli && all_uniform_beta(config.mean_priors) &&
        config.horizon <= static_cast<std::size_t>(TwoArmedSolution::kMaxHorizon) &&
        config.regret == RegretKind::Pseudo) {
        Overlay optimal{"bayes_optimal", 0.0, {}};
        for (std::size_t t : checkpoints) {
            optimal.values.push_back(bayes_optimal_two_armed(static_cast<int>(t)).bayes_risk());
        }
        result.overlays.push_back(std::move(optimal));
    }

    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

RunResult run_experiment(const ExperimentConfig& config) {
    return config.mode == ExperimentMode::FixedInstance ? monte_carlo_regret(config) : bayes_risk_estimate(config);
}

void to_json(nlohmann::json& j, const RunResult& r) {
    auto policies = nlohmann::json::array();
    for (const auto& p : r.policies) {
        policies.push_back({{"name", p.name},
                            {"kind", p.kind},
                            {"c", p.c},
                            {"prior", p.prior},
                            {"mean_regret", p.mean},
                            {"stderr", p.standard_error},
                            {"mean_pulls", p.mean_pulls}});
    }
    auto overlays = nlohmann::json::array();
    for (const auto& o : r.overlays) overlays.push_back({{"name", o.name}, {"constant", o.constant}, {"values", o.values}});
    j = nlohmann::json{{"mode", r.mode},
                       {"family", r.family},
                       {"horizon", r.horizon},
                       {"replications", r.replications},
                       {"seed", r.seed},
                       {"regret", r.regret},
                       {"checkpoints", r.checkpoints},
                       {"policies", policies},
                       {"overlays", overlays},
                       {"metadata",
                        {{"wall_clock_seconds", r.wall_clock_seconds},
                         {"stderr", "sample standard deviation / sqrt(replications)"},
                         {"config", r.config}}}};
}

void from_json(const nlohmann::json& j, RunResult& r) {
    r = RunResult{};
    j.at("mode").get_to(r.mode);
    j.at("family").get_to(r.family);
    j.at("horizon").get_to(r.horizon);
    j.at("replications").get_to(r.replications);
    j.at("seed").get_to(r.seed);
    j.at("regret").get_to(r.regret);
    j.at("checkpoints").get_to(r.checkpoints);
    for (const auto& p : j.at("policies")) {
        PolicyCurve curve;
        p.at("name").get_to(curve.name);
        p.at("kind").get_to(curve.kind);
        p.at("c").get_to(curve.c);
        p.at("prior").get_to(curve.prior);
        p.at("mean_regret").get_to(curve.mean);
        p.at("stderr").get_to(curve.standard_error);
        p.at("mean_pulls").get_to(curve.mean_pulls);
        r.policies.push_back(std::move(curve));
    }
    for (const auto& o : j.at("overlays")) {
        Overlay overlay;
        o.at("name").get_to(overlay.name);
        o.at("constant").get_to(overlay.constant);
        o.at("values").get_to(overlay.values);
        r.overlays.push_back(std::move(overlay));
    }
    const auto& meta = j.at("metadata");
    meta.at("wall_clock_seconds").get_to(r.wall_clock_seconds);
    r.config = meta.at("config");
}

std::string to_csv(const RunResult& r) {
    std::ostringstream out;
    out << "t,policy,mean_regret,stderr,n_reps,seed\n";
    const std::string tail = "," + std::to_string(r.replications) + "," + std::to_string(r.seed) + "\n";
    for (const auto& p : r.policies) {
        for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
            out << r.checkpoints[c] << ',' << p.name << ',' << format_double(p.mean[c]) << ','
                << format_double(p.standard_error[c]) << tail;
        }
    }
    for (const auto& o : r.overlays) {
        for (std::size_t c = 0; c < r.checkpoints.size(); ++c) {
            out << r.checkpoints[c] << ',' << o.name << ',' << format_double(o.values[c]) << ",0" << tail;
        }
    }
    return out.str();
}

void emit(const RunResult& result, OutputFormat format, const std::string& path) {
    const std::string text = format == OutputFormat::Csv ? to_csv(result) : nlohmann::json(result).dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw IoError("cannot write to standard output");
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open " + path + " for writing");
    file << text;
    file.close();
    if (!file) throw IoError("write failed: " + path);
}

}  // namespace bandit
