#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pdfabench/predictor.hpp"

namespace pdfabench {

enum class Gate { forget = 0, input = 1, output = 2, cell = 3 };

/// LSTM parameters for scalar input and N hidden units, stored in one flat
/// vector so optimizers and gradient checks can treat them uniformly.
///
/// Layout: input weights W (4N) | recurrent weights U (4N x N, column-major)
/// | biases b (4N) | readout weights w (N) | readout bias w0. The 4N blocks
/// are ordered forget, input, output, cell.
class LstmParams {
public:
    explicit LstmParams(int hidden);

    int hidden() const noexcept { return hidden_; }
    static Eigen::Index parameter_count(int hidden) noexcept;

    Eigen::VectorXd& flat() noexcept { return theta_; }
    Eigen::VectorXd const& flat() const noexcept { return theta_; }

    Eigen::Map<Eigen::VectorXd> input_weights();
    Eigen::Map<Eigen::MatrixXd> recurrent();
    Eigen::Map<Eigen::VectorXd> bias();
    Eigen::Map<Eigen::VectorXd> readout_weights();
    double& readout_bias();

    Eigen::Map<Eigen::VectorXd const> input_weights() const;
    Eigen::Map<Eigen::MatrixXd const> recurrent() const;
    Eigen::Map<Eigen::VectorXd const> bias() const;
    Eigen::Map<Eigen::VectorXd const> readout_weights() const;
    double readout_bias() const;

    /// Per-gate views: W_g (N), U_g (N x N), b_g (N).
    auto input_weights(Gate g) { return input_weights().segment(offset(g), hidden_); }
    auto recurrent(Gate g) { return recurrent().middleRows(offset(g), hidden_); }
    auto bias(Gate g) { return bias().segment(offset(g), hidden_); }

    bool all_finite() const { return theta_.allFinite(); }

    CellOutput cell_output() const noexcept { return cell_; }
    void set_cell_output(CellOutput cell) noexcept { cell_ = cell; }

private:
    Eigen::Index offset(Gate g) const noexcept { return static_cast<Eigen::Index>(g) * hidden_; }

    int hidden_;
    Eigen::VectorXd theta_;
    CellOutput cell_ = CellOutput::identity;
};

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zeros(int hidden);
};

struct LstmForward {
    /// Row t is h_t, the state used to predict x_t; h_0 = 0.
    Eigen::MatrixXd hidden;
    std::vector<double> p_one;
    double log_likelihood = 0.0;
};

/// Runs the network over the whole stream from zero state.
LstmForward lstm_forward(LstmParams const& params, std::span<Symbol const> symbols,
                         InputEncoding encoding = InputEncoding::zero_one);

/// Negative log-likelihood of `symbols` (a sum, not a mean) starting from
/// `state`, which is advanced past the window. When `gradient` is non-null
/// the exact BPTT gradient within the window is added to it.
double lstm_window_loss(LstmParams const& params, std::span<Symbol const> symbols, LstmState& state,
                        Eigen::VectorXd* gradient, InputEncoding encoding = InputEncoding::zero_one);

struct LstmTrainResult {
    LstmParams params;
    /// Training-stream log-likelihood accumulated during each epoch.
    std::vector<double> epoch_log_likelihood;
    int restarts = 0;
    double final_learning_rate = 0.0;
};

/// Truncated BPTT with state carried across windows, one optimizer step per
/// window on the mean window loss. Parameters start i.i.d.
/// Normal(0, init_stddev). A non-finite loss rolls the epoch back and halves
/// the step; after options.max_restarts such rollbacks throws TrainingFailure.
LstmTrainResult lstm_train(int hidden, LstmOptions const& options, std::uint64_t seed,
                           std::span<Symbol const> symbols,
                           InputEncoding encoding = InputEncoding::zero_one);

/// Draws the initial parameters lstm_train starts from.
LstmParams lstm_init(int hidden, std::uint64_t seed, double stddev);

class LstmPredictor final : public Predictor {
public:
    LstmPredictor(int hidden, LstmOptions options, std::uint64_t seed,
                  InputEncoding encoding = InputEncoding::zero_one);
    /// Wraps fixed parameters; train() replaces them.
    explicit LstmPredictor(LstmParams params, InputEncoding encoding = InputEncoding::zero_one);

    Family family() const noexcept override { return Family::lstm; }
    void train(std::span<Symbol const> symbols) override;
    std::vector<double> predict_proba(std::span<Symbol const> symbols) const override;
    void dump(std::ostream& out) const override;

    LstmParams const& params() const noexcept { return params_; }
    std::vector<double> const& epoch_log_likelihood() const noexcept { return epoch_ll_; }

private:
    LstmParams params_;
    LstmOptions options_;
    std::uint64_t seed_ = 0;
    InputEncoding encoding_;
    std::vector<double> epoch_ll_;
};

}  // namespace pdfabench
