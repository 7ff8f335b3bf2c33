#include "banditlab/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace bandit {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) return parts;
        start = pos + 1;
    }
}

double parse_double(std::string_view s) {
    s = trim(s);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("not a number: '" + std::string(s) + "'");
    }
    return value;
}

template <class Int>
Int parse_integer(std::string_view s) {
    s = trim(s);
    Int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("not a nonnegative integer: '" + std::string(s) + "'");
    }
    return value;
}

// "name(a,b)" -> ("name", ["a", "b"])
std::pair<std::string, std::vector<std::string_view>> call_syntax(std::string_view text) {
    text = trim(text);
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')') {
        throw ConfigError("expected name(arguments), got '" + std::string(text) + "'");
    }
    std::string name(trim(text.substr(0, open)));
    const auto inner = text.substr(open + 1, text.size() - open - 2);
    return {name, trim(inner).empty() ? std::vector<std::string_view>{} : split(inner, ',')};
}

void expect_args(const std::string& name, const std::vector<std::string_view>& args, std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
        throw ConfigError(name + "(...) takes " + std::to_string(lo) +
                          (lo == hi ? "" : " to " + std::to_string(hi)) + " arguments");
    }
}

}  // namespace

Prior parse_prior(std::string_view text) {
    auto [name, args] = call_syntax(text);
    if (name == "beta") {
        expect_args(name, args, 2, 2);
        return BetaPrior{parse_double(args[0]), parse_double(args[1])};
    }
    if (name == "gaussian") {
        if (args.size() == 1 && args[0] == "flat") return GaussianPrior::flat();
        expect_args(name, args, 2, 2);
        return GaussianPrior{parse_double(args[0]), parse_double(args[1])};
    }
    if (name == "gamma") {
        expect_args(name, args, 2, 2);
        return GammaPrior{parse_double(args[0]), parse_double(args[1])};
    }
    if (name == "invgamma") {
        expect_args(name, args, 2, 2);
        return InverseGammaPrior{parse_double(args[0]), parse_double(args[1])};
    }
    if (name == "grid") {
        expect_args(name, args, 2, 3);
        const std::size_t points = args.size() == 3 ? parse_integer<std::size_t>(args[2]) : GridPrior::kDefaultPoints;
        try {
            return GridPrior::uniform(parse_double(args[0]), parse_double(args[1]), points);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("grid prior: ") + e.what());
        }
    }
    throw ConfigError("unknown prior '" + name + "'");
}

MeanPrior parse_mean_prior(std::string_view text) {
    auto [name, args] = call_syntax(text);
    if (name == "point") {
        expect_args(name, args, 1, 1);
        return PointMass{parse_double(args[0])};
    }
    return parse_prior(text);
}

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> values;
    if (trim(text).empty()) return values;
    for (auto part : split(text, ',')) values.push_back(parse_double(part));
    return values;
}

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ConfigError("unknown output format '" + std::string(name) + "' (csv or json)");
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    using Block = std::map<std::string, std::pair<std::string, int>>;  // key -> (value, line)
    Block top;
    std::vector<Block> policy_blocks;
    Block* current = &top;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line == "[policy]") {
                policy_blocks.emplace_back();
                current = &policy_blocks.back();
            } else if (line == "[experiment]") {
                current = &top;
            } else {
                throw ConfigError(where + "unknown section " + std::string(line));
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(where + "empty key");
        if (!current->emplace(key, std::make_pair(value, line_no)).second) {
            throw ConfigError(where + "repeated key '" + key + "'");
        }
    }

    auto context = [&](const std::pair<std::string, int>& entry) {
        return source + ":" + std::to_string(entry.second) + ": ";
    };
    // Runs fn(value) and prefixes any ConfigError with the line.
    auto with_line = [&](const Block& block, const std::string& key, auto fn) {
        const auto it = block.find(key);
        if (it == block.end()) return false;
        try {
            fn(it->second.first);
        } catch (const ConfigError& e) {
            throw ConfigError(context(it->second) + key + ": " + e.what());
        } catch (const DomainError& e) {
            throw ConfigError(context(it->second) + key + ": " + e.what());
        }
        return true;
    };
    auto reject_unknown = [&](const Block& block, const std::set<std::string>& known, const std::string& what) {
        for (const auto& [key, entry] : block) {
            if (!known.count(key)) throw ConfigError(context(entry) + "unknown " + what + " key '" + key + "'");
        }
    };

    reject_unknown(top,
                   {"mode", "family", "sigma2", "arms", "arm_prior", "arm_priors", "arm_count", "horizon",
                    "replications", "seed", "checkpoints", "workers", "out", "format", "regret", "gittins_cache"},
                   "experiment");

    ExperimentConfig config;
    std::optional<std::string> mode;
    with_line(top, "mode", [&](const std::string& v) {
        if (v != "fixed" && v != "bayes-risk") throw ConfigError("expected fixed or bayes-risk");
        mode = v;
    });
    Family family = Family::Bernoulli;
    double sigma2 = 1.0;
    with_line(top, "family", [&](const std::string& v) { family = parse_family(v); });
    const bool has_sigma2 = with_line(top, "sigma2", [&](const std::string& v) { sigma2 = parse_double(v); });
    if (has_sigma2 && family != Family::Gaussian) throw ConfigError(source + ": sigma2 applies to the gaussian family only");
    try {
        switch (family) {
            case Family::Bernoulli: config.model = ExpFamilyModel::bernoulli(); break;
            case Family::Gaussian: config.model = ExpFamilyModel::gaussian(sigma2); break;
            case Family::Poisson: config.model = ExpFamilyModel::poisson(); break;
            case Family::Exponential: config.model = ExpFamilyModel::exponential(); break;
        }
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }

    const bool has_means = with_line(top, "arms", [&](const std::string& v) { config.means = parse_number_list(v); });
    std::optional<MeanPrior> shared_prior;
    std::optional<std::size_t> arm_count;
    const bool has_prior = with_line(top, "arm_prior", [&](const std::string& v) { shared_prior = parse_mean_prior(v); });
    with_line(top, "arm_count", [&](const std::string& v) { arm_count = parse_integer<std::size_t>(v); });
    const bool has_priors = with_line(top, "arm_priors", [&](const std::string& v) {
        for (auto part : split(v, ';')) config.mean_priors.push_back(parse_mean_prior(part));
    });

    const bool bayes = mode ? *mode == "bayes-risk" : (has_prior || has_priors || arm_count.has_value());
    config.mode = bayes ? ExperimentMode::BayesRisk : ExperimentMode::FixedInstance;
    if (bayes) {
        if (has_means) throw ConfigError(source + ": 'arms' lists fixed means; use arm_priors in bayes-risk mode");
        if (has_priors && (has_prior || arm_count)) {
            throw ConfigError(source + ": give either arm_priors or arm_prior with arm_count");
        }
        if (!has_priors) {
            if (!arm_count) throw ConfigError(source + ": bayes-risk mode needs arm_count or arm_priors");
            const MeanPrior prior = shared_prior ? *shared_prior : MeanPrior(default_prior(config.model));
            config.mean_priors.assign(*arm_count, prior);
        }
    } else if (has_prior || has_priors || arm_count) {
        throw ConfigError(source + ": arm priors are only used in bayes-risk mode");
    }

    with_line(top, "horizon", [&](const std::string& v) { config.horizon = parse_integer<std::size_t>(v); });
    with_line(top, "replications", [&](const std::string& v) { config.replications = parse_integer<std::size_t>(v); });
    with_line(top, "seed", [&](const std::string& v) { config.seed = parse_integer<std::uint64_t>(v); });
    with_line(top, "workers", [&](const std::string& v) { config.workers = parse_integer<unsigned>(v); });
    with_line(top, "checkpoints", [&](const std::string& v) {
        if (v == "default") return;
        std::vector<std::size_t> cps;
        if (!v.empty()) {
            for (auto part : split(v, ',')) cps.push_back(parse_integer<std::size_t>(part));
        }
        config.checkpoints = cps;
    });
    with_line(top, "out", [&](const std::string& v) { config.output_path = v; });
    with_line(top, "format", [&](const std::string& v) { config.format = parse_format(v); });
    with_line(top, "regret", [&](const std::string& v) {
        if (v == "pseudo") {
            config.regret = RegretKind::Pseudo;
        } else if (v == "realized") {
            config.regret = RegretKind::Realized;
        } else {
            throw ConfigError("expected pseudo or realized");
        }
    });
    with_line(top, "gittins_cache", [&](const std::string& v) { config.gittins_cache_dir = v; });

    for (const Block& block : policy_blocks) {
        reject_unknown(block, {"kind", "c", "horizon", "clamp", "prior", "label"}, "policy");
        PolicyConfig pc;
        if (!with_line(block, "kind", [&](const std::string& v) { pc.kind = parse_policy_kind(v); })) {
            throw ConfigError(source + ": policy block without 'kind'");
        }
        with_line(block, "c", [&](const std::string& v) { pc.c = parse_double(v); });
        with_line(block, "horizon", [&](const std::string& v) { pc.horizon = parse_integer<std::size_t>(v); });
        with_line(block, "clamp", [&](const std::string& v) {
            const auto bounds = parse_number_list(v);
            if (bounds.size() != 2) throw ConfigError("expected lo, hi");
            pc.clamp = Clamp{bounds[0], bounds[1]};
        });
        with_line(block, "prior", [&](const std::string& v) { pc.prior = parse_prior(v); });
        with_line(block, "label", [&](const std::string& v) { pc.label = v; });
        config.policies.push_back(std::move(pc));
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    if (file.bad()) throw IoError("cannot read config file " + path);
    return parse_config(buffer.str(), path);
}

}  // namespace bandit
