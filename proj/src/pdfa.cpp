#include "pdfabench/pdfa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "pdfabench/error.hpp"
#include "pdfabench/information.hpp"

namespace pdfabench {

std::string default_state_name(std::size_t index) {
    std::string name;
    do {
        name.insert(name.begin(), static_cast<char>('A' + index % 26));
        index /= 26;
    } while (index-- > 0);
    return name;
}

namespace {

std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> names;
    names.reserve(n);
    for (std::size_t i = 0; i < n; ++i) names.push_back(default_state_name(i));
    return names;
}

}  // namespace

Pdfa::Pdfa(std::string machine_id, std::vector<TransitionRow> rows)
    : Pdfa(std::move(machine_id), std::vector<std::string>{}, std::move(rows)) {}

Pdfa::Pdfa(std::string machine_id, std::vector<std::string> state_names,
           std::vector<TransitionRow> rows)
    : machine_id_(std::move(machine_id)),
      state_names_(std::move(state_names)),
      rows_(std::move(rows)) {
    if (state_names_.empty()) state_names_ = default_names(rows_.size());
    if (rows_.empty()) throw ValidationError("machine '" + machine_id_ + "' has no states");
    if (state_names_.size() != rows_.size()) {
        throw ValidationError("machine '" + machine_id_ + "': state name count " +
                              std::to_string(state_names_.size()) + " != state count " +
                              std::to_string(rows_.size()));
    }
    auto const n = static_cast<StateIndex>(rows_.size());
    for (std::size_t s = 0; s < rows_.size(); ++s) {
        for (auto const& t : rows_[s]) {
            if (!t) continue;
            if (t->next < 0 || t->next >= n) {
                throw ValidationError("machine '" + machine_id_ + "': transition from state " +
                                      std::to_string(s) + " targets unknown state " +
                                      std::to_string(t->next));
            }
            if (!std::isfinite(t->p) || t->p < 0.0 || t->p > 1.0) {
                throw ValidationError("machine '" + machine_id_ + "': probability out of [0,1]");
            }
        }
    }
}

Pdfa Pdfa::with_id(std::string machine_id) const {
    Pdfa copy = *this;
    copy.machine_id_ = std::move(machine_id);
    return copy;
}

char const* to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::normalization: return "normalization";
        case ViolationKind::dangling_state: return "dangling state";
        case ViolationKind::not_strongly_connected: return "not strongly connected";
        case ViolationKind::non_minimal: return "non-minimal";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](Violation const& v) { return v.kind == kind; });
}

std::string ValidationReport::to_string() const {
    if (ok()) return "pass";
    std::ostringstream out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) out << "; ";
        out << pdfabench::to_string(violations[i].kind) << ": " << violations[i].detail;
    }
    return out.str();
}

ValidationReport validate(Pdfa const& pdfa, double minimality_tol) {
    ValidationReport report;
    auto const n = pdfa.n_states();
    auto const& names = pdfa.state_names();
    bool structurally_sound = true;
    for (std::size_t s = 0; s < n; ++s) {
        auto const si = static_cast<StateIndex>(s);
        double const total = pdfa.emission(si, 0) + pdfa.emission(si, 1);
        if (std::abs(total - 1.0) > kNormalizationTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "state " << names[s] << " sums to " << total;
            report.violations.push_back({ViolationKind::normalization, msg.str()});
            structurally_sound = false;
        }
        if (pdfa.successor(si, 0) < 0 && pdfa.successor(si, 1) < 0) {
            report.violations.push_back(
                {ViolationKind::dangling_state, "state " + names[s] + " has no outgoing transition"});
            structurally_sound = false;
        }
    }
    if (!is_strongly_connected(pdfa)) {
        report.violations.push_back({ViolationKind::not_strongly_connected,
                                     "some state cannot reach every other state"});
        structurally_sound = false;
    }
    if (structurally_sound && !is_minimal(pdfa, minimality_tol)) {
        report.violations.push_back({ViolationKind::non_minimal, "equivalent states can be merged"});
    }
    return report;
}

namespace {

std::vector<bool> reachable_from(Pdfa const& pdfa, StateIndex start, bool reversed) {
    auto const n = pdfa.n_states();
    std::vector<bool> seen(n, false);
    std::vector<StateIndex> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
        StateIndex const s = stack.back();
        stack.pop_back();
        for (std::size_t u = 0; u < n; ++u) {
            for (Symbol x = 0; x < kAlphabetSize; ++x) {
                StateIndex from = reversed ? static_cast<StateIndex>(u) : s;
                StateIndex to = pdfa.successor(from, x);
                bool const edge = reversed ? to == s : (to >= 0 && static_cast<std::size_t>(to) == u);
                if (edge && !seen[u]) {
                    seen[u] = true;
                    stack.push_back(static_cast<StateIndex>(u));
                }
            }
        }
    }
    return seen;
}

}  // namespace

bool is_strongly_connected(Pdfa const& pdfa) {
    auto const all = [](std::vector<bool> const& v) {
        return std::all_of(v.begin(), v.end(), [](bool b) { return b; });
    };
    return all(reachable_from(pdfa, 0, false)) && all(reachable_from(pdfa, 0, true));
}

bool is_minimal(Pdfa const& pdfa, double tol) {
    auto const n = pdfa.n_states();
    std::vector<int> block(n, -1);
    std::vector<std::size_t> representatives;
    for (std::size_t s = 0; s < n; ++s) {
        auto const si = static_cast<StateIndex>(s);
        for (std::size_t b = 0; b < representatives.size(); ++b) {
            auto const r = static_cast<StateIndex>(representatives[b]);
            if (std::abs(pdfa.emission(si, 0) - pdfa.emission(r, 0)) <= tol &&
                std::abs(pdfa.emission(si, 1) - pdfa.emission(r, 1)) <= tol) {
                block[s] = static_cast<int>(b);
                break;
            }
        }
        if (block[s] < 0) {
            block[s] = static_cast<int>(representatives.size());
            representatives.push_back(s);
        }
    }

    std::size_t n_blocks = representatives.size();
    while (true) {
        std::map<std::tuple<int, int, int>, int> signature_to_block;
        std::vector<int> refined(n);
        for (std::size_t s = 0; s < n; ++s) {
            auto const si = static_cast<StateIndex>(s);
            auto succ_block = [&](Symbol x) {
                StateIndex const t = pdfa.successor(si, x);
                return t < 0 ? -1 : block[static_cast<std::size_t>(t)];
            };
            auto key = std::make_tuple(block[s], succ_block(0), succ_block(1));
            auto [it, inserted] =
                signature_to_block.try_emplace(key, static_cast<int>(signature_to_block.size()));
            refined[s] = it->second;
        }
        block = std::move(refined);
        if (signature_to_block.size() == n_blocks) break;
        n_blocks = signature_to_block.size();
    }
    return n_blocks == n;
}

std::vector<std::vector<double>> state_transition_matrix(Pdfa const& pdfa) {
    auto const n = pdfa.n_states();
    std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        for (Symbol x = 0; x < kAlphabetSize; ++x) {
            auto const& tr = pdfa.transition(static_cast<StateIndex>(s), x);
            if (tr) t[s][static_cast<std::size_t>(tr->next)] += tr->p;
        }
    }
    return t;
}

std::vector<double> stationary_distribution(Pdfa const& pdfa, double threshold,
                                            std::size_t max_iterations) {
    auto const n = pdfa.n_states();
    auto const t = state_transition_matrix(pdfa);
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        for (std::size_t j = 0; j < n; ++j) next[j] = 0.5 * pi[j];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) next[j] += 0.5 * pi[i] * t[i][j];
        }
        double total = 0.0;
        for (double v : next) total += v;
        double change = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= total;
            change = std::max(change, std::abs(next[j] - pi[j]));
        }
        pi.swap(next);
        if (change < threshold) return pi;
    }
    throw NumericalError("stationary distribution of machine '" + pdfa.machine_id() +
                         "' did not converge in " + std::to_string(max_iterations) +
                         " iterations");
}

double entropy_rate(Pdfa const& pdfa, std::span<double const> pi) {
    double h = 0.0;
    for (std::size_t s = 0; s < pdfa.n_states(); ++s) {
        auto const si = static_cast<StateIndex>(s);
        double const emissions[2] = {pdfa.emission(si, 0), pdfa.emission(si, 1)};
        h += pi[s] * entropy_nats(emissions);
    }
    return h;
}

double statistical_complexity(Pdfa const&, std::span<double const> pi) {
    return entropy_nats(pi);
}

Symbol optimal_prediction(Pdfa const& pdfa, StateIndex s) {
    return pdfa.emission(s, 1) > pdfa.emission(s, 0) ? Symbol{1} : Symbol{0};
}

RateAccuracyPoint optimal_predictor_point(Pdfa const& pdfa, std::span<double const> pi) {
    double accuracy = 0.0;
    double marginal[2] = {0.0, 0.0};
    for (std::size_t s = 0; s < pdfa.n_states(); ++s) {
        auto const si = static_cast<StateIndex>(s);
        Symbol const r = optimal_prediction(pdfa, si);
        accuracy += pi[s] * pdfa.emission(si, r);
        marginal[r] += pi[s];
    }
    return {entropy_nats(marginal), accuracy};
}

ProcessSummary summarize(Pdfa const& pdfa) {
    ProcessSummary summary;
    summary.pi = stationary_distribution(pdfa);
    summary.entropy_rate_nats = entropy_rate(pdfa, summary.pi);
    summary.statistical_complexity_nats = statistical_complexity(pdfa, summary.pi);
    auto const opt = optimal_predictor_point(pdfa, summary.pi);
    summary.optimal_accuracy = opt.accuracy;
    summary.optimal_rate_nats = opt.rate_nats;
    return summary;
}

double word_probability(Pdfa const& pdfa, std::span<double const> pi,
                        std::span<Symbol const> word) {
    double total = 0.0;
    for (std::size_t s0 = 0; s0 < pdfa.n_states(); ++s0) {
        double p = pi[s0];
        auto s = static_cast<StateIndex>(s0);
        for (Symbol x : word) {
            p *= pdfa.emission(s, x);
            if (p == 0.0) break;
            s = pdfa.successor(s, x);
        }
        total += p;
    }
    return total;
}

SequenceSample sample_sequence(Pdfa const& pdfa, std::span<double const> pi, std::size_t length,
                               std::uint64_t seed) {
    SequenceSample sample;
    sample.seed = seed;
    if (length == 0) return sample;
    sample.symbols.reserve(length);
    sample.states.reserve(length);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    double u = unit(rng);
    StateIndex state = static_cast<StateIndex>(pdfa.n_states() - 1);
    double cumulative = 0.0;
    for (std::size_t s = 0; s < pdfa.n_states(); ++s) {
        cumulative += pi[s];
        if (u < cumulative && pi[s] > 0.0) {
            state = static_cast<StateIndex>(s);
            break;
        }
    }

    for (std::size_t t = 0; t < length; ++t) {
        u = unit(rng);
        Symbol const x = u < pdfa.emission(state, 0) ? Symbol{0} : Symbol{1};
        sample.symbols.push_back(x);
        sample.states.push_back(state);
        state = pdfa.transition(state, x)->next;
    }
    return sample;
}

SequenceSample sample_sequence(Pdfa const& pdfa, std::size_t length, std::uint64_t seed) {
    auto const pi = stationary_distribution(pdfa);
    return sample_sequence(pdfa, pi, length, seed);
}

StateFilter::StateFilter(Pdfa const& pdfa, std::vector<double> prior)
    : pdfa_(&pdfa), belief_(std::move(prior)), scratch_(belief_.size()) {
    if (belief_.size() != pdfa.n_states()) {
        throw ValidationError("filter prior has wrong length for machine '" + pdfa.machine_id() + "'");
    }
}

double StateFilter::next_symbol_probability(Symbol x) const {
    double p = 0.0;
    for (std::size_t s = 0; s < belief_.size(); ++s) {
        p += belief_[s] * pdfa_->emission(static_cast<StateIndex>(s), x);
    }
    return p;
}

Symbol StateFilter::predict() const {
    return next_symbol_probability(1) > next_symbol_probability(0) ? Symbol{1} : Symbol{0};
}

void StateFilter::observe(Symbol x) {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < belief_.size(); ++s) {
        if (belief_[s] == 0.0) continue;
        auto const si = static_cast<StateIndex>(s);
        double const w = belief_[s] * pdfa_->emission(si, x);
        if (w == 0.0) continue;
        scratch_[static_cast<std::size_t>(pdfa_->successor(si, x))] += w;
        total += w;
    }
    if (total == 0.0) throw ImpossibleObservation(pdfa_->machine_id(), steps_);
    for (double& v : scratch_) v /= total;
    belief_.swap(scratch_);
    ++steps_;
}

StateIndex StateFilter::synchronized_state() const noexcept {
    StateIndex found = -1;
    for (std::size_t s = 0; s < belief_.size(); ++s) {
        if (belief_[s] == 0.0) continue;
        if (found >= 0) return -1;
        found = static_cast<StateIndex>(s);
    }
    return found;
}

std::vector<std::vector<double>> filter_states(Pdfa const& pdfa, std::span<Symbol const> symbols) {
    StateFilter filter(pdfa, stationary_distribution(pdfa));
    std::vector<std::vector<double>> rows;
    rows.reserve(symbols.size());
    for (Symbol x : symbols) {
        filter.observe(x);
        rows.push_back(filter.belief());
    }
    return rows;
}

}  // namespace pdfabench
