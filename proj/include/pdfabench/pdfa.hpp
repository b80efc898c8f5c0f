#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pdfabench {

using Symbol = std::uint8_t;
using StateIndex = int;

inline constexpr int kAlphabetSize = 2;

struct Transition {
    StateIndex next = 0;
    double p = 0.0;

    friend bool operator==(Transition const&, Transition const&) = default;
};

/// Outgoing transitions of one state, indexed by emitted symbol. A missing
/// entry means the symbol is never emitted from that state.
using TransitionRow = std::array<std::optional<Transition>, kAlphabetSize>;

/// Probabilistic deterministic finite automaton over the binary alphabet.
///
/// Unifilarity holds by construction: each (state, symbol) pair owns at most
/// one successor. Normalization, connectivity and minimality are not enforced
/// here; run validate() for those.
class Pdfa {
public:
    /// State names default to "A", "B", ...
    Pdfa(std::string machine_id, std::vector<TransitionRow> rows);
    Pdfa(std::string machine_id, std::vector<std::string> state_names,
         std::vector<TransitionRow> rows);

    std::string const& machine_id() const noexcept { return machine_id_; }
    std::size_t n_states() const noexcept { return rows_.size(); }
    std::vector<std::string> const& state_names() const noexcept { return state_names_; }
    std::vector<TransitionRow> const& rows() const noexcept { return rows_; }

    std::optional<Transition> const& transition(StateIndex s, Symbol x) const {
        return rows_.at(static_cast<std::size_t>(s))[x];
    }

    /// p(x | s), zero when the symbol is absent.
    double emission(StateIndex s, Symbol x) const {
        auto const& t = transition(s, x);
        return t ? t->p : 0.0;
    }

    /// Successor on x, or -1 when x cannot be emitted from s.
    StateIndex successor(StateIndex s, Symbol x) const {
        auto const& t = transition(s, x);
        return (t && t->p > 0.0) ? t->next : -1;
    }

    Pdfa with_id(std::string machine_id) const;

    friend bool operator==(Pdfa const&, Pdfa const&) = default;

private:
    std::string machine_id_;
    std::vector<std::string> state_names_;
    std::vector<TransitionRow> rows_;
};

std::string default_state_name(std::size_t index);

enum class ViolationKind { normalization, dangling_state, not_strongly_connected, non_minimal };

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(ViolationKind kind) const noexcept;
    std::string to_string() const;
};

char const* to_string(ViolationKind kind) noexcept;

inline constexpr double kNormalizationTolerance = 1e-12;
inline constexpr double kMinimalityTolerance = 1e-9;

/// Diagnostics only; never throws.
ValidationReport validate(Pdfa const& pdfa, double minimality_tol = kMinimalityTolerance);

bool is_strongly_connected(Pdfa const& pdfa);

/// Moore-style partition refinement. Two states start in the same block when
/// their emission probabilities agree within tol; blocks are then split by
/// the block of each symbol's successor until nothing changes.
bool is_minimal(Pdfa const& pdfa, double tol = kMinimalityTolerance);

/// State-to-state transition matrix T(s, s') = sum_x p(x|s) [delta(s,x) = s'].
std::vector<std::vector<double>> state_transition_matrix(Pdfa const& pdfa);

/// Power iteration on the lazy chain (T + I) / 2, which shares T's fixed
/// point and is aperiodic. Throws NumericalError after max_iterations.
std::vector<double> stationary_distribution(Pdfa const& pdfa, double threshold = 1e-14,
                                            std::size_t max_iterations = 1'000'000);

/// Entropy rate in nats per symbol.
double entropy_rate(Pdfa const& pdfa, std::span<double const> pi);

/// Shannon entropy of pi in nats.
double statistical_complexity(Pdfa const& pdfa, std::span<double const> pi);

/// Argmax of the state's emission distribution; ties go to symbol 0.
Symbol optimal_prediction(Pdfa const& pdfa, StateIndex s);

struct RateAccuracyPoint {
    double rate_nats = 0.0;
    double accuracy = 0.0;
};

/// Exact rate and accuracy of the filter-then-argmax predictor.
RateAccuracyPoint optimal_predictor_point(Pdfa const& pdfa, std::span<double const> pi);

struct ProcessSummary {
    std::vector<double> pi;
    double entropy_rate_nats = 0.0;
    double statistical_complexity_nats = 0.0;
    double optimal_accuracy = 0.0;
    double optimal_rate_nats = 0.0;
};

ProcessSummary summarize(Pdfa const& pdfa);

/// Probability that the stationary process emits `word` next.
double word_probability(Pdfa const& pdfa, std::span<double const> pi,
                        std::span<Symbol const> word);

struct SequenceSample {
    std::vector<Symbol> symbols;
    /// State occupied when the matching symbol was emitted.
    std::vector<StateIndex> states;
    std::uint64_t seed = 0;
};

/// Initial state is drawn from pi. Deterministic in (pdfa, length, seed).
SequenceSample sample_sequence(Pdfa const& pdfa, std::span<double const> pi,
                               std::size_t length, std::uint64_t seed);
SequenceSample sample_sequence(Pdfa const& pdfa, std::size_t length, std::uint64_t seed);

/// Incremental Bayesian tracker of the current causal state.
class StateFilter {
public:
    StateFilter(Pdfa const& pdfa, std::vector<double> prior);

    /// Distribution over the state that will emit the next symbol.
    std::vector<double> const& belief() const noexcept { return belief_; }

    /// Predictive probability of the next symbol.
    double next_symbol_probability(Symbol x) const;

    /// Argmax prediction; ties go to symbol 0.
    Symbol predict() const;

    /// Bayes update on x followed by the unifilar move. Throws
    /// ImpossibleObservation when x has zero probability.
    void observe(Symbol x);

    /// Index of the state when the belief is a point mass, else -1.
    StateIndex synchronized_state() const noexcept;

private:
    Pdfa const* pdfa_;
    std::vector<double> belief_;
    std::vector<double> scratch_;
    std::size_t steps_ = 0;
};

/// Row t is the state distribution after observing symbols[0..t].
std::vector<std::vector<double>> filter_states(Pdfa const& pdfa, std::span<Symbol const> symbols);

}  // namespace pdfabench
