#include "pdfabench/glm.hpp"

#include <ostream>

#include "pdfabench/error.hpp"
#include "pdfabench/machine_io.hpp"

namespace pdfabench {

GlmDataset glm_features(std::span<Symbol const> symbols, int k) {
    if (k < 0) throw InsufficientData("GLM order must be nonnegative");
    auto const order = static_cast<std::size_t>(k);
    if (symbols.size() <= order) {
        throw InsufficientData("GLM of order " + std::to_string(k) + " needs more than " +
                               std::to_string(k) + " symbols, got " + std::to_string(symbols.size()));
    }
    std::size_t const rows = symbols.size() - order;
    GlmDataset data;
    data.features.resize(static_cast<Eigen::Index>(rows), k);
    data.labels.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < order; ++j) {
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = symbols[i + j];
        }
        data.labels.push_back(symbols[i + order]);
    }
    return data;
}

GlmPredictor::GlmPredictor(int order, LogisticOptions options)
    : order_(order), options_(options) {
    if (order < 1) throw std::invalid_argument("GLM order must be at least 1");
    readout_.weights = Eigen::VectorXd::Zero(order);
}

void GlmPredictor::train(std::span<Symbol const> symbols) {
    auto const data = glm_features(symbols, order_);
    readout_ = train_logistic(data.features, data.labels, options_).readout;
}

std::vector<double> GlmPredictor::predict_proba(std::span<Symbol const> symbols) const {
    std::vector<double> p(symbols.size(), 0.5);
    if (symbols.size() <= static_cast<std::size_t>(order_)) return p;
    auto const data = glm_features(symbols, order_);
    Eigen::VectorXd const probs = readout_.probabilities_one(data.features);
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        p[static_cast<std::size_t>(i) + static_cast<std::size_t>(order_)] = probs[i];
    }
    return p;
}

void GlmPredictor::dump(std::ostream& out) const {
    out << "family = glm\norder = " << order_ << "\nbias = " << format_double(readout_.bias)
        << "\nweights =";
    for (double w : readout_.weights) out << ' ' << format_double(w);
    out << '\n';
}

}  // namespace pdfabench
