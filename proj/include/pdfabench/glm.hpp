#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pdfabench/predictor.hpp"

namespace pdfabench {

struct GlmDataset {
    /// Row i holds x_{t-k}..x_{t-1} (oldest first) for t = k + i.
    Eigen::MatrixXd features;
    std::vector<Symbol> labels;
};

/// Sliding windows of the k previous symbols. Throws InsufficientData when
/// the sequence is not longer than k.
GlmDataset glm_features(std::span<Symbol const> symbols, int k);

/// Order-k logistic model on the last k symbols.
class GlmPredictor final : public Predictor {
public:
    GlmPredictor(int order, LogisticOptions options = {});

    Family family() const noexcept override { return Family::glm; }
    void train(std::span<Symbol const> symbols) override;
    std::vector<double> predict_proba(std::span<Symbol const> symbols) const override;
    void dump(std::ostream& out) const override;

    int order() const noexcept { return order_; }
    LogisticReadout const& readout() const noexcept { return readout_; }
    void set_readout(LogisticReadout readout) { readout_ = std::move(readout); }

private:
    int order_;
    LogisticOptions options_;
    LogisticReadout readout_;
};

}  // namespace pdfabench
