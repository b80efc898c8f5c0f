#include "pdfabench/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdfabench/error.hpp"

namespace pdfabench {

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double const e = std::exp(z);
    return e / (1.0 + e);
}

double readout_probability(double z) noexcept {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    return std::clamp(sigmoid(z), eps, 1.0 - eps);
}

double softplus(double z) noexcept {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double LogisticReadout::probability_one(Eigen::Ref<Eigen::VectorXd const> features) const {
    return readout_probability(weights.dot(features) + bias);
}

Eigen::VectorXd LogisticReadout::probabilities_one(Eigen::Ref<Eigen::MatrixXd const> features) const {
    Eigen::VectorXd z = features * weights;
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = readout_probability(z[i] + bias);
    return z;
}

namespace {

struct Objective {
    Eigen::Ref<Eigen::MatrixXd const> x;
    Eigen::VectorXd y;
    double l2;

    // theta = (w, w0)
    double loss(Eigen::VectorXd const& theta) const {
        auto const d = x.cols();
        Eigen::VectorXd z = x * theta.head(d);
        double total = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            double const zi = z[i] + theta[d];
            total += softplus(zi) - y[i] * zi;
        }
        return total + 0.5 * l2 * theta.head(d).squaredNorm();
    }
};

}  // namespace

LogisticFit train_logistic(Eigen::Ref<Eigen::MatrixXd const> features, std::span<Symbol const> labels,
                           LogisticOptions const& options) {
    auto const rows = features.rows();
    auto const d = features.cols();
    if (rows == 0) throw InsufficientData("logistic regression needs at least one row");
    if (static_cast<std::size_t>(rows) != labels.size()) {
        throw InsufficientData("feature rows and labels differ in length");
    }

    Objective objective{features, Eigen::VectorXd(rows), options.l2_strength};
    for (Eigen::Index i = 0; i < rows; ++i) objective.y[i] = labels[static_cast<std::size_t>(i)];

    LogisticFit fit;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    double current = objective.loss(theta);
    if (!std::isfinite(current)) throw TrainingFailure("logistic loss is not finite");
    fit.loss_history.push_back(current);

    Eigen::VectorXd p(rows);
    Eigen::VectorXd gradient(d + 1);
    Eigen::MatrixXd hessian(d + 1, d + 1);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::VectorXd z = features * theta.head(d);
        for (Eigen::Index i = 0; i < rows; ++i) p[i] = sigmoid(z[i] + theta[d]);
        Eigen::VectorXd const residual = p - objective.y;
        gradient.head(d) = features.transpose() * residual + options.l2_strength * theta.head(d);
        gradient[d] = residual.sum();
        if (gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
            fit.converged = true;
            break;
        }

        Eigen::VectorXd const w = (p.array() * (1.0 - p.array())).matrix();
        hessian.topLeftCorner(d, d).noalias() = features.transpose() * w.asDiagonal() * features;
        hessian.topLeftCorner(d, d).diagonal().array() += options.l2_strength;
        hessian.block(0, d, d, 1) = features.transpose() * w;
        hessian.block(d, 0, 1, d) = hessian.block(0, d, d, 1).transpose();
        hessian(d, d) = w.sum();
        hessian.diagonal().array() += 1e-10;

        Eigen::VectorXd step = hessian.ldlt().solve(gradient);
        if (!step.allFinite()) step = gradient;

        // Backtracking keeps the penalized loss monotone.
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            Eigen::VectorXd const candidate = theta - scale * step;
            double const value = objective.loss(candidate);
            if (!std::isfinite(value)) throw TrainingFailure("logistic loss is not finite");
            if (value <= current) {
                theta = candidate;
                current = value;
                accepted = true;
                break;
            }
        }
        fit.iterations = iter + 1;
        if (!accepted) {
            fit.converged = true;  // no descent direction left at double precision
            break;
        }
        fit.loss_history.push_back(current);
    }

    fit.readout.weights = theta.head(d);
    fit.readout.bias = theta[d];
    return fit;
}

}  // namespace pdfabench
