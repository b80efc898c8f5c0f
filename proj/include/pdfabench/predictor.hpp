#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdfabench/logistic.hpp"
#include "pdfabench/pdfa.hpp"

namespace pdfabench {

enum class Family { glm, reservoir, lstm, oracle };

std::string_view to_string(Family family) noexcept;
/// Throws std::invalid_argument on an unknown name.
Family parse_family(std::string_view name);

/// How a symbol is fed into a recurrent network.
enum class InputEncoding { zero_one, plus_minus_one };

std::string_view to_string(InputEncoding encoding) noexcept;
InputEncoding parse_input_encoding(std::string_view name);

inline double encode_symbol(Symbol x, InputEncoding encoding) noexcept {
    return encoding == InputEncoding::zero_one ? static_cast<double>(x) : (x ? 1.0 : -1.0);
}

enum class Optimizer { adam, gradient_ascent };

/// LSTM hidden output: h = o * c (identity) or h = o * tanh(c).
enum class CellOutput { identity, tanh };

std::string_view to_string(CellOutput cell) noexcept;
CellOutput parse_cell_output(std::string_view name);

std::string_view to_string(Optimizer optimizer) noexcept;
Optimizer parse_optimizer(std::string_view name);

struct ReservoirOptions {
    double spectral_radius = 0.95;
    InputEncoding encoding = InputEncoding::zero_one;
};

struct LstmOptions {
    Optimizer optimizer = Optimizer::adam;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 50;
    std::size_t window = 64;
    double init_stddev = 0.1;
    int max_restarts = 5;
    CellOutput cell_output = CellOutput::tanh;
    /// Rescales each window gradient to at most this L2 norm; 0 disables.
    double clip_norm = 0.0;
};

struct PredictorSpec {
    Family family = Family::glm;
    /// GLM order k, or node count N for the recurrent families.
    int size = 1;
    std::uint64_t seed = 0;
    LogisticOptions logistic;
    ReservoirOptions reservoir;
    LstmOptions lstm;
};

/// Common contract of every trainable next-symbol predictor.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual Family family() const noexcept = 0;

    /// Fits the model to a training prefix.
    virtual void train(std::span<Symbol const> symbols) = 0;

    /// p(x_t = 1 | x_0..x_{t-1}) for every t. Recurrent models run over the
    /// whole stream without resetting. Positions where the model has too
    /// little history hold 0.5.
    virtual std::vector<double> predict_proba(std::span<Symbol const> symbols) const = 0;

    /// Parameter dump for diagnostics; doubles use 17 significant digits.
    virtual void dump(std::ostream& out) const = 0;
};

/// `machine` is needed only by the oracle family.
std::unique_ptr<Predictor> make_predictor(PredictorSpec const& spec, Pdfa const* machine = nullptr);

/// Argmax of a probability of symbol 1; exact ties go to 0.
inline Symbol argmax_prediction(double p_one) noexcept { return p_one > 0.5 ? Symbol{1} : Symbol{0}; }

struct StreamEvaluation {
    double accuracy = 0.0;
    double rate_nats = 0.0;
    /// Predictions for the test positions train_len..end.
    std::vector<Symbol> predictions;
};

/// Scores a trained model on symbols[train_len..). Rate is the entropy of
/// the empirical prediction marginal over those positions.
StreamEvaluation evaluate_stream(Predictor const& model, std::span<Symbol const> symbols,
                                 std::size_t train_len);

/// Same scoring from precomputed probabilities.
StreamEvaluation score_predictions(std::span<double const> p_one, std::span<Symbol const> symbols,
                                   std::size_t train_len);

/// Causal-state filter followed by argmax. Nothing to train.
class OraclePredictor final : public Predictor {
public:
    explicit OraclePredictor(Pdfa machine);

    Family family() const noexcept override { return Family::oracle; }
    void train(std::span<Symbol const>) override {}
    std::vector<double> predict_proba(std::span<Symbol const> symbols) const override;
    void dump(std::ostream& out) const override;

private:
    Pdfa machine_;
    std::vector<double> pi_;
};

}  // namespace pdfabench
