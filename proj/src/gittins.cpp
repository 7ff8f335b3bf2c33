#include "banditlab/gittins.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace bandit {

namespace {

constexpr double kBisectionWidth = 1e-7;

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& path) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError(path + ": malformed number '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

unsigned resolve_workers(unsigned workers) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    return workers;
}

}  // namespace

BetaState::BetaState(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("beta state: hyperparameters must be positive");
    }
}

double calibration_value(const BetaState& state, int r, double lambda) {
    if (r < 0) throw DomainError("calibration_value: negative number of remaining pulls");
    if (r == 0) return 0.0;
    // values[i]: i successes among the d pulls made so far, r - d pulls left.
    std::vector<double> values(static_cast<std::size_t>(r) + 1, 0.0);
    const double total0 = state.alpha + state.beta;
    for (int d = r - 1; d >= 0; --d) {
        const double total = total0 + d;
        for (int i = 0; i <= d; ++i) {
            const double p = (state.alpha + i) / total;
            const double cont = p * (1.0 - lambda + values[i + 1]) + (1.0 - p) * (-lambda + values[i]);
            values[i] = std::max(0.0, cont);
        }
    }
    return values[0];
}

double fh_gittins_index(const BetaState& state, int r) {
    if (r < 1) throw DomainError("fh_gittins_index: remaining time must be at least 1");
    const double mean = state.mean();
    if (r == 1) return mean;
    double lo = mean;
    double hi = 1.0;
    while (hi - lo > kBisectionWidth) {
        const double mid = 0.5 * (lo + hi);
        if (calibration_value(state, r, mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::size_t BetaGittinsTable::entry_count(int horizon) {
    std::size_t count = 0;
    for (int n = 0; n < horizon; ++n) count += static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(horizon - n);
    return count;
}

BetaGittinsTable::BetaGittinsTable(BetaState prior, int horizon, std::vector<double> values)
    : prior_(prior), horizon_(horizon), values_(std::move(values)) {
    if (horizon < 1 || horizon > kMaxHorizon) {
        throw DomainError("gittins table: horizon must lie in [1, " + std::to_string(kMaxHorizon) + "]");
    }
    if (values_.size() != entry_count(horizon)) throw DomainError("gittins table: wrong number of entries");
    layer_offset_.resize(static_cast<std::size_t>(horizon) + 1, 0);
    for (int n = 0; n < horizon; ++n) {
        layer_offset_[n + 1] = layer_offset_[n] + static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(horizon - n);
    }
}

bool BetaGittinsTable::contains(int successes, int failures, int r) const {
    return successes >= 0 && failures >= 0 && r >= 1 && successes + failures + r <= horizon_;
}

std::size_t BetaGittinsTable::offset(int successes, int failures, int r) const {
    const int n = successes + failures;
    return layer_offset_[n] + static_cast<std::size_t>(successes) * static_cast<std::size_t>(horizon_ - n) +
           static_cast<std::size_t>(r - 1);
}

double BetaGittinsTable::at(int successes, int failures, int r) const {
    if (!contains(successes, failures, r)) {
        throw DomainError("gittins table: state (" + std::to_string(successes) + "," + std::to_string(failures) +
                          ", r=" + std::to_string(r) + ") outside horizon " + std::to_string(horizon_));
    }
    return values_[offset(successes, failures, r)];
}

void BetaGittinsTable::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(path + ": cannot open for writing");
    out << "alpha,beta,horizon\n"
        << format_double(prior_.alpha) << ',' << format_double(prior_.beta) << ',' << horizon_ << '\n'
        << "alpha_offset,beta_offset,r,G\n";
    for (int n = 0; n < horizon_; ++n) {
        for (int s = 0; s <= n; ++s) {
            for (int r = 1; r <= horizon_ - n; ++r) {
                out << s << ',' << n - s << ',' << r << ',' << format_double(at(s, n - s, r)) << '\n';
            }
        }
    }
    if (!out) throw IoError(path + ": write failed");
}

BetaGittinsTable BetaGittinsTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::string line;
    if (!std::getline(in, line) || line != "alpha,beta,horizon") throw IoError(path + ": missing table header");
    if (!std::getline(in, line)) throw IoError(path + ": truncated header");
    auto head = split_csv(line);
    if (head.size() != 3) throw IoError(path + ": malformed header row");
    const BetaState prior(parse_double(head[0], path), parse_double(head[1], path));
    const int horizon = static_cast<int>(parse_double(head[2], path));
    if (horizon < 1 || horizon > kMaxHorizon) throw IoError(path + ": horizon out of range");
    if (!std::getline(in, line) || line != "alpha_offset,beta_offset,r,G") throw IoError(path + ": missing row header");

    std::vector<double> values;
    values.reserve(entry_count(horizon));
    for (int n = 0; n < horizon; ++n) {
        for (int s = 0; s <= n; ++s) {
            for (int r = 1; r <= horizon - n; ++r) {
                if (!std::getline(in, line)) throw IoError(path + ": truncated table");
                auto cols = split_csv(line);
                if (cols.size() != 4 || cols[0] != std::to_string(s) || cols[1] != std::to_string(n - s) ||
                    cols[2] != std::to_string(r)) {
                    throw IoError(path + ": unexpected row '" + line + "'");
                }
                values.push_back(parse_double(cols[3], path));
            }
        }
    }
    return BetaGittinsTable(prior, horizon, std::move(values));
}

BetaGittinsTable build_gittins_table(const BetaState& prior, int horizon, unsigned workers) {
    if (horizon < 1) throw DomainError("build_gittins_table: horizon must be positive");
    if (horizon > BetaGittinsTable::kMaxHorizon) {
        throw DomainError("build_gittins_table: horizon " + std::to_string(horizon) + " exceeds the limit of " +
                          std::to_string(BetaGittinsTable::kMaxHorizon));
    }
    std::vector<double> values(BetaGittinsTable::entry_count(horizon));
    // Work items are posterior states (s, f); each fills its row over r.
    std::vector<std::pair<int, int>> items;
    std::vector<std::size_t> starts;
    std::size_t pos = 0;
    for (int n = 0; n < horizon; ++n) {
        for (int s = 0; s <= n; ++s) {
            items.emplace_back(s, n - s);
            starts.push_back(pos);
            pos += static_cast<std::size_t>(horizon - n);
        }
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < items.size(); k = next++) {
            const auto [s, f] = items[k];
            const BetaState state(prior.alpha + s, prior.beta + f);
            for (int r = 1; r <= horizon - s - f; ++r) values[starts[k] + static_cast<std::size_t>(r - 1)] = fh_gittins_index(state, r);
        }
    };
    const unsigned n_workers = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(items.size()));
    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
    }
    return BetaGittinsTable(prior, horizon, std::move(values));
}

// ---------------------------------------------------------------------------
// Two-armed Bayes-optimal solution

std::vector<std::vector<std::size_t>> two_armed_offsets(int horizon) {
    // offsets[n][n1]: position of (s1 = 0, s2 = 0) for totals n and n1 = s1 + f1,
    // relative to the layer start; offsets[n][n + 1] is the layer size.
    std::vector<std::vector<std::size_t>> offsets(static_cast<std::size_t>(horizon) + 1);
    for (int n = 0; n <= horizon; ++n) {
        auto& row = offsets[n];
        row.resize(static_cast<std::size_t>(n) + 2, 0);
        for (int n1 = 0; n1 <= n; ++n1) {
            row[n1 + 1] = row[n1] + static_cast<std::size_t>(n1 + 1) * static_cast<std::size_t>(n - n1 + 1);
        }
    }
    return offsets;
}

namespace {

std::size_t local_index(const std::vector<std::vector<std::size_t>>& offsets, const TwoArmedDpState& st) {
    const int n = st.total();
    const int n1 = st.s1 + st.f1;
    return offsets[n][n1] + static_cast<std::size_t>(st.s1) * static_cast<std::size_t>(n - n1 + 1) +
           static_cast<std::size_t>(st.s2);
}

// Visits every state with total pulls n.
template <class F>
void for_each_state(int n, F&& f) {
    for (int n1 = 0; n1 <= n; ++n1) {
        const int n2 = n - n1;
        for (int s1 = 0; s1 <= n1; ++s1) {
            for (int s2 = 0; s2 <= n2; ++s2) f(TwoArmedDpState{s1, n1 - s1, s2, n2 - s2});
        }
    }
}

struct ArmValues {
    double q0;
    double q1;
};

// One-step lookahead values of both arms given next-layer values.
ArmValues lookahead(const std::vector<std::vector<std::size_t>>& offsets, const std::vector<double>& next,
                    const TwoArmedDpState& st) {
    const double p0 = (st.s1 + 1.0) / (st.s1 + st.f1 + 2.0);
    const double p1 = (st.s2 + 1.0) / (st.s2 + st.f2 + 2.0);
    auto v = [&](TwoArmedDpState s) { return next[local_index(offsets, s)]; };
    const double q0 = p0 * (1.0 + v({st.s1 + 1, st.f1, st.s2, st.f2})) + (1.0 - p0) * v({st.s1, st.f1 + 1, st.s2, st.f2});
    const double q1 = p1 * (1.0 + v({st.s1, st.f1, st.s2 + 1, st.f2})) + (1.0 - p1) * v({st.s1, st.f1, st.s2, st.f2 + 1});
    return {q0, q1};
}

}  // namespace

TwoArmedSolution::TwoArmedSolution(int horizon, double value, std::vector<std::uint8_t> actions)
    : horizon_(horizon), value_(value), actions_(std::move(actions)), offsets_(two_armed_offsets(horizon)) {}

std::size_t TwoArmedSolution::index(const TwoArmedDpState& state) const {
    if (state.s1 < 0 || state.f1 < 0 || state.s2 < 0 || state.f2 < 0 || state.total() >= horizon_) {
        throw DomainError("two-armed solution: state outside the horizon");
    }
    std::size_t start = 0;
    for (int n = 0; n < state.total(); ++n) start += offsets_[n].back();
    return start + local_index(offsets_, state);
}

int TwoArmedSolution::action(const TwoArmedDpState& state) const { return actions_[index(state)] & 1; }

bool TwoArmedSolution::tie(const TwoArmedDpState& state) const { return (actions_[index(state)] & 2) != 0; }

std::size_t TwoArmedSolution::tie_count() const {
    return static_cast<std::size_t>(std::count_if(actions_.begin(), actions_.end(), [](std::uint8_t a) { return (a & 2) != 0; }));
}

TwoArmedSolution bayes_optimal_two_armed(int horizon) {
    if (horizon < 1 || horizon > TwoArmedSolution::kMaxHorizon) {
        throw DomainError("bayes_optimal_two_armed: horizon must lie in [1, " +
                          std::to_string(TwoArmedSolution::kMaxHorizon) + "]");
    }
    const auto offsets = two_armed_offsets(horizon);
    std::vector<std::size_t> layer_start(static_cast<std::size_t>(horizon) + 1, 0);
    for (int n = 0; n < horizon; ++n) layer_start[n + 1] = layer_start[n] + offsets[n].back();
    std::vector<std::uint8_t> actions(layer_start[horizon], 0);

    std::vector<double> next(offsets[horizon].back(), 0.0);  // W(., 0) = 0
    for (int n = horizon - 1; n >= 0; --n) {
        std::vector<double> current(offsets[n].back(), 0.0);
        for_each_state(n, [&](const TwoArmedDpState& st) {
            const auto [q0, q1] = lookahead(offsets, next, st);
            const std::size_t k = local_index(offsets, st);
            const bool tie = std::abs(q0 - q1) <= 1e-12 * std::max(1.0, std::abs(q0));
            std::uint8_t a = q1 > q0 && !tie ? 1 : 0;
            if (tie) a |= 2;
            actions[layer_start[n] + k] = a;
            current[k] = std::max(q0, q1);
        });
        next = std::move(current);
    }
    return TwoArmedSolution(horizon, next[0], std::move(actions));
}

double evaluate_two_armed_policy(int horizon,
                                 const std::function<double(const TwoArmedDpState&, int)>& prob_arm0) {
    if (horizon < 1) throw DomainError("evaluate_two_armed_policy: horizon must be positive");
    const auto offsets = two_armed_offsets(horizon);
    std::vector<double> next(offsets[horizon].back(), 0.0);
    for (int n = horizon - 1; n >= 0; --n) {
        std::vector<double> current(offsets[n].back(), 0.0);
        for_each_state(n, [&](const TwoArmedDpState& st) {
            const auto [q0, q1] = lookahead(offsets, next, st);
            const double w = prob_arm0(st, horizon - n);
            current[local_index(offsets, st)] = w * q0 + (1.0 - w) * q1;
        });
        next = std::move(current);
    }
    return next[0];
}

}  // namespace bandit
