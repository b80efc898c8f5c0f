#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "pdfabench/predictor.hpp"

namespace pdfabench {

/// Fixed tanh reservoir h_{t+1} = tanh(W h_t + v x_t + b).
struct ReservoirParams {
    Eigen::MatrixXd recurrence;  // W, N x N
    Eigen::VectorXd input;       // v
    Eigen::VectorXd bias;        // b
    double spectral_radius_target = 0.95;

    Eigen::Index size() const noexcept { return input.size(); }
};

/// Largest eigenvalue modulus.
double spectral_radius(Eigen::Ref<Eigen::MatrixXd const> matrix);

/// i.i.d. Normal(0,1) entries, W rescaled to the target spectral radius.
/// A draw with zero spectral radius is replaced by a fresh one.
ReservoirParams reservoir_init(int n_nodes, std::uint64_t seed, double spectral_radius_target = 0.95);

/// Row t is h_t, the state that precedes the emission of x_t; h_0 = 0.
/// Rows cover t = 0..symbols.size() - 1.
Eigen::MatrixXd reservoir_states(ReservoirParams const& params, std::span<Symbol const> symbols,
                                 InputEncoding encoding = InputEncoding::zero_one,
                                 Eigen::VectorXd const* initial_state = nullptr);

/// Reservoir with a trained logistic readout on h_t.
class ReservoirPredictor final : public Predictor {
public:
    ReservoirPredictor(ReservoirParams params, LogisticOptions logistic = {},
                       InputEncoding encoding = InputEncoding::zero_one);

    Family family() const noexcept override { return Family::reservoir; }
    void train(std::span<Symbol const> symbols) override;
    std::vector<double> predict_proba(std::span<Symbol const> symbols) const override;
    void dump(std::ostream& out) const override;

    ReservoirParams const& params() const noexcept { return params_; }
    LogisticReadout const& readout() const noexcept { return readout_; }
    void set_readout(LogisticReadout readout) { readout_ = std::move(readout); }

private:
    ReservoirParams params_;
    LogisticOptions logistic_;
    InputEncoding encoding_;
    LogisticReadout readout_;
};

}  // namespace pdfabench
