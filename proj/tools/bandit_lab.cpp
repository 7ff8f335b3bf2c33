#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "banditlab/bounds.hpp"
#include "banditlab/config.hpp"
#include "banditlab/errors.hpp"
#include "banditlab/gittins.hpp"
#include "banditlab/harness.hpp"

namespace {

using namespace bandit;

ExpFamilyModel make_model(Family family, double sigma2) {
    switch (family) {
        case Family::Bernoulli: return ExpFamilyModel::bernoulli();
        case Family::Gaussian: return ExpFamilyModel::gaussian(sigma2);
        case Family::Poisson: return ExpFamilyModel::poisson();
        case Family::Exponential: return ExpFamilyModel::exponential();
    }
    throw ConfigError("unknown family");
}

struct RunOptions {
    std::string config_path;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> policies;
    std::optional<std::string> arms;
    std::optional<std::string> family;
    std::optional<double> sigma2;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<unsigned> workers;
};

void apply_arms(ExperimentConfig& config, const std::string& text) {
    if (config.mode == ExperimentMode::FixedInstance) {
        config.means = parse_number_list(text);
        return;
    }
    // Bayes-risk mode: an arm count, or a ';'-separated list of priors.
    if (text.find('(') == std::string::npos) {
        const auto count = parse_number_list(text);
        if (count.size() != 1 || count[0] < 1 || count[0] != static_cast<double>(static_cast<std::size_t>(count[0]))) {
            throw ConfigError("--arms in bayes-risk mode takes an arm count or a ';'-separated prior list");
        }
        const MeanPrior prior = config.mean_priors.empty() ? MeanPrior(default_prior(config.model))
                                                           : config.mean_priors.front();
        config.mean_priors.assign(static_cast<std::size_t>(count[0]), prior);
        return;
    }
    config.mean_priors.clear();
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(';', start);
        config.mean_priors.push_back(parse_mean_prior(text.substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
}

int run_command(const RunOptions& opt) {
    ExperimentConfig config = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
    if (opt.family) {
        const double sigma2 = opt.sigma2 ? *opt.sigma2 : config.model.sigma2();
        config.model = make_model(parse_family(*opt.family), sigma2);
    } else if (opt.sigma2) {
        config.model = make_model(config.model.kind(), *opt.sigma2);
    }
    if (opt.arms) apply_arms(config, *opt.arms);
    if (opt.horizon) config.horizon = *opt.horizon;
    if (opt.reps) config.replications = *opt.reps;
    if (opt.seed) config.seed = *opt.seed;
    if (opt.workers) config.workers = *opt.workers;
    if (opt.out) config.output_path = *opt.out;
    if (opt.format) config.format = parse_format(*opt.format);
    if (!opt.policies.empty()) {
        config.policies.clear();
        for (const auto& name : opt.policies) config.policies.push_back(PolicyConfig{parse_policy_kind(name)});
    }
    const RunResult result = run_experiment(config);
    emit(result, config.format, config.output_path);
    if (!config.output_path.empty() && config.output_path != "-") {
        std::cerr << "wrote " << config.output_path << " (" << result.wall_clock_seconds << " s)\n";
    }
    return 0;
}

int gittins_command(int horizon, double alpha, double beta, const std::string& out, unsigned workers) {
    if (horizon < 1) throw ConfigError("--horizon must be positive");
    const BetaGittinsTable table = build_gittins_table(BetaState(alpha, beta), horizon, workers);
    table.save_csv(out);
    std::cerr << "wrote " << table.size() << " indices to " << out << "\n";
    return 0;
}

int check_bounds_command(const std::string& suite, std::uint64_t seed, std::size_t paths) {
    const SuiteResult result = run_bound_suite(suite, seed, paths);
    nlohmann::json j{{"suite", result.suite}, {"seed", seed}, {"reports", result.reports}, {"pass", result.pass}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int lower_bound_command(const std::string& family, double sigma2, const std::string& arms) {
    const ExpFamilyModel model = make_model(parse_family(family), sigma2);
    const std::vector<double> means = parse_number_list(arms);
    if (means.empty()) throw ConfigError("--arms needs at least one mean");
    for (double mu : means) {
        if (!model.in_mean_domain(mu)) throw ConfigError("arm mean outside the " + model.name() + " mean domain");
    }
    const BanditInstance instance(model, means);
    const LowerBoundCurve curve = lai_robbins_curve(instance);
    auto terms = nlohmann::json::array();
    for (double mu : means) {
        if (mu < instance.mu_star()) {
            terms.push_back((instance.mu_star() - mu) / kl_mean(model, mu, instance.mu_star()));
        } else {
            terms.push_back(0.0);
        }
    }
    nlohmann::json j{{"family", model.name()}, {"means", means}, {"constant", curve.constant}, {"per_arm", terms}};
    if (model.kind() == Family::Bernoulli && means.size() >= 2) {
        const double c = bernoulli_uniform_constant(static_cast<int>(means.size()));
        j["bayes_risk_uniform_prior"] = {{"arms", means.size()}, {"constant", c}, {"alternative_constant", 2.0 * c}};
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo lab for exponential-family multi-armed bandits"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run a regret or Bayes-risk experiment");
    run_cmd->add_option("--config", run.config_path, "experiment file");
    run_cmd->add_option("--horizon", run.horizon, "horizon T");
    run_cmd->add_option("--reps", run.reps, "Monte Carlo replications");
    run_cmd->add_option("--seed", run.seed, "64-bit seed");
    run_cmd->add_option("--policy", run.policies, "policy kind (repeatable; replaces the file's policies)");
    run_cmd->add_option("--arms", run.arms, "arm means (fixed) or arm count / prior list (bayes-risk)");
    run_cmd->add_option("--family", run.family, "bernoulli, gaussian, poisson or exponential");
    run_cmd->add_option("--sigma2", run.sigma2, "gaussian variance");
    run_cmd->add_option("--out", run.out, "output path ('-' for stdout)");
    run_cmd->add_option("--format", run.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run_cmd->add_option("--workers", run.workers, "worker threads (0 = all cores)");

    int gittins_horizon = 0;
    double alpha = 1.0, beta = 1.0;
    std::string gittins_out;
    unsigned gittins_workers = 0;
    auto* gittins_cmd = app.add_subcommand("gittins-table", "tabulate finite-horizon Gittins indices");
    gittins_cmd->add_option("--horizon", gittins_horizon, "horizon T")->required();
    gittins_cmd->add_option("--out", gittins_out, "CSV path")->required();
    gittins_cmd->add_option("--alpha", alpha, "Beta prior alpha");
    gittins_cmd->add_option("--beta", beta, "Beta prior beta");
    gittins_cmd->add_option("--workers", gittins_workers, "worker threads (0 = all cores)");

    std::string suite = "all";
    std::uint64_t bounds_seed = 1;
    std::size_t paths = 100000;
    auto* bounds_cmd = app.add_subcommand("check-bounds", "Monte Carlo and numeric checks of the inequalities");
    std::vector<std::string> suites;
    for (auto name : bound_suite_names()) suites.emplace_back(name);
    bounds_cmd->add_option("--suite", suite, "suite name")->check(CLI::IsMember(suites));
    bounds_cmd->add_option("--seed", bounds_seed, "64-bit seed");
    bounds_cmd->add_option("--paths", paths, "sample paths per check")->check(CLI::PositiveNumber);

    std::string lb_family = "bernoulli";
    double lb_sigma2 = 1.0;
    std::string lb_arms;
    auto* lb_cmd = app.add_subcommand("lower-bound", "asymptotic regret lower-bound constants");
    lb_cmd->add_option("--family", lb_family, "family name");
    lb_cmd->add_option("--sigma2", lb_sigma2, "gaussian variance");
    lb_cmd->add_option("--arms", lb_arms, "comma-separated arm means")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd) return run_command(run);
        if (*gittins_cmd) return gittins_command(gittins_horizon, alpha, beta, gittins_out, gittins_workers);
        if (*bounds_cmd) return check_bounds_command(suite, bounds_seed, paths);
        if (*lb_cmd) return lower_bound_command(lb_family, lb_sigma2, lb_arms);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericFailure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
