#include "pdfabench/reservoir.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>

#include "pdfabench/machine_io.hpp"

namespace pdfabench {

double spectral_radius(Eigen::Ref<Eigen::MatrixXd const> matrix) {
    if (matrix.rows() == 1) return std::abs(matrix(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

ReservoirParams reservoir_init(int n_nodes, std::uint64_t seed, double spectral_radius_target) {
    if (n_nodes < 1) throw std::invalid_argument("reservoir needs at least one node");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
        return m;
    };

    ReservoirParams params;
    params.spectral_radius_target = spectral_radius_target;
    double radius = 0.0;
    while (!(radius > 1e-12)) {
        params.recurrence = draw(n_nodes, n_nodes);
        radius = spectral_radius(params.recurrence);
    }
    params.recurrence *= spectral_radius_target / radius;
    params.input = draw(n_nodes, 1).col(0);
    params.bias = draw(n_nodes, 1).col(0);
    return params;
}

Eigen::MatrixXd reservoir_states(ReservoirParams const& params, std::span<Symbol const> symbols,
                                 InputEncoding encoding, Eigen::VectorXd const* initial_state) {
    auto const n = params.size();
    auto const steps = static_cast<Eigen::Index>(symbols.size());
    // Column-major N x T while stepping, transposed at the end.
    Eigen::MatrixXd states(n, steps);
    Eigen::VectorXd h = initial_state ? *initial_state : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd pre(n);
    for (Eigen::Index t = 0; t < steps; ++t) {
        states.col(t) = h;
        double const x = encode_symbol(symbols[static_cast<std::size_t>(t)], encoding);
        pre.noalias() = params.recurrence * h;
        pre += params.input * x + params.bias;
        h = pre.array().tanh().matrix();
    }
    return states.transpose();
}

ReservoirPredictor::ReservoirPredictor(ReservoirParams params, LogisticOptions logistic,
                                       InputEncoding encoding)
    : params_(std::move(params)), logistic_(logistic), encoding_(encoding) {
    readout_.weights = Eigen::VectorXd::Zero(params_.size());
}

void ReservoirPredictor::train(std::span<Symbol const> symbols) {
    Eigen::MatrixXd const states = reservoir_states(params_, symbols, encoding_);
    readout_ = train_logistic(states, symbols, logistic_).readout;
}

std::vector<double> ReservoirPredictor::predict_proba(std::span<Symbol const> symbols) const {
    Eigen::MatrixXd const states = reservoir_states(params_, symbols, encoding_);
    Eigen::VectorXd const p = readout_.probabilities_one(states);
    return {p.data(), p.data() + p.size()};
}

void ReservoirPredictor::dump(std::ostream& out) const {
    auto write = [&](char const* key, auto const& values) {
        out << key << " =";
        for (Eigen::Index i = 0; i < values.size(); ++i) out << ' ' << format_double(values(i));
        out << '\n';
    };
    out << "family = reservoir\nnodes = " << params_.size()
        << "\nspectral_radius_target = " << format_double(params_.spectral_radius_target)
        << "\nencoding = " << to_string(encoding_) << '\n';
    write("W", params_.recurrence.reshaped());
    write("v", params_.input);
    write("b", params_.bias);
    write("w", readout_.weights);
    out << "w0 = " << format_double(readout_.bias) << '\n';
}

}  // namespace pdfabench
