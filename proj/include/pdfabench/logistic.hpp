#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pdfabench/pdfa.hpp"

namespace pdfabench {

/// p(x = 1 | f) = sigmoid(w . f + w0).
struct LogisticReadout {
    Eigen::VectorXd weights;
    double bias = 0.0;

    double probability_one(Eigen::Ref<Eigen::VectorXd const> features) const;
    /// One probability per row of `features`.
    Eigen::VectorXd probabilities_one(Eigen::Ref<Eigen::MatrixXd const> features) const;
};

struct LogisticOptions {
    /// Coefficient of the (1/2)||w||^2 penalty; the bias is not penalized.
    double l2_strength = 1.0;
    std::size_t max_iterations = 100;
    double gradient_tolerance = 1e-8;
};

struct LogisticFit {
    LogisticReadout readout;
    /// Penalized negative log-likelihood after each accepted step, starting
    /// with the value at zero weights.
    std::vector<double> loss_history;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Damped Newton ascent on the L2-penalized log-likelihood. Deterministic.
/// Throws InsufficientData with zero rows and TrainingFailure on a
/// non-finite loss.
LogisticFit train_logistic(Eigen::Ref<Eigen::MatrixXd const> features, std::span<Symbol const> labels,
                           LogisticOptions const& options = {});

double sigmoid(double z) noexcept;
/// Sigmoid kept strictly inside (0, 1) for reported probabilities.
double readout_probability(double z) noexcept;

/// ln(1 + e^z) without overflow.
double softplus(double z) noexcept;

}  // namespace pdfabench
