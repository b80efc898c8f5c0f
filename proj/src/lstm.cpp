#include "pdfabench/lstm.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "pdfabench/error.hpp"
#include "pdfabench/logistic.hpp"
#include "pdfabench/machine_io.hpp"

namespace pdfabench {

namespace {

struct Offsets {
    Eigen::Index n, input, recurrent, bias, readout, readout_bias, total;

    explicit Offsets(int hidden) : n(hidden) {
        input = 0;
        recurrent = input + 4 * n;
        bias = recurrent + 4 * n * n;
        readout = bias + 4 * n;
        readout_bias = readout + n;
        total = readout_bias + 1;
    }
};

}  // namespace

LstmParams::LstmParams(int hidden) : hidden_(hidden) {
    if (hidden < 1) throw std::invalid_argument("LSTM needs at least one hidden unit");
    theta_ = Eigen::VectorXd::Zero(parameter_count(hidden));
}

Eigen::Index LstmParams::parameter_count(int hidden) noexcept { return Offsets(hidden).total; }

Eigen::Map<Eigen::VectorXd> LstmParams::input_weights() {
    Offsets o(hidden_);
    return {theta_.data() + o.input, 4 * o.n};
}
Eigen::Map<Eigen::MatrixXd> LstmParams::recurrent() {
    Offsets o(hidden_);
    return {theta_.data() + o.recurrent, 4 * o.n, o.n};
}
Eigen::Map<Eigen::VectorXd> LstmParams::bias() {
    Offsets o(hidden_);
    return {theta_.data() + o.bias, 4 * o.n};
}
Eigen::Map<Eigen::VectorXd> LstmParams::readout_weights() {
    Offsets o(hidden_);
    return {theta_.data() + o.readout, o.n};
}
double& LstmParams::readout_bias() { return theta_[Offsets(hidden_).readout_bias]; }

Eigen::Map<Eigen::VectorXd const> LstmParams::input_weights() const {
    Offsets o(hidden_);
    return {theta_.data() + o.input, 4 * o.n};
}
Eigen::Map<Eigen::MatrixXd const> LstmParams::recurrent() const {
    Offsets o(hidden_);
    return {theta_.data() + o.recurrent, 4 * o.n, o.n};
}
Eigen::Map<Eigen::VectorXd const> LstmParams::bias() const {
    Offsets o(hidden_);
    return {theta_.data() + o.bias, 4 * o.n};
}
Eigen::Map<Eigen::VectorXd const> LstmParams::readout_weights() const {
    Offsets o(hidden_);
    return {theta_.data() + o.readout, o.n};
}
double LstmParams::readout_bias() const { return theta_[Offsets(hidden_).readout_bias]; }

LstmState LstmState::zeros(int hidden) {
    return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)};
}

namespace {

// Gate nonlinearities applied in place to the stacked pre-activation.
void activate(Eigen::Ref<Eigen::VectorXd> z, Eigen::Index n) {
    for (Eigen::Index k = 0; k < 3 * n; ++k) z[k] = sigmoid(z[k]);
    z.tail(n) = z.tail(n).array().tanh().matrix();
}

}  // namespace

LstmForward lstm_forward(LstmParams const& params, std::span<Symbol const> symbols,
                         InputEncoding encoding) {
    Eigen::Index const n = params.hidden();
    auto const steps = static_cast<Eigen::Index>(symbols.size());
    auto const wx = params.input_weights();
    auto const u = params.recurrent();
    auto const b = params.bias();
    auto const w = params.readout_weights();
    double const w0 = params.readout_bias();

    bool const squash = params.cell_output() == CellOutput::tanh;
    LstmForward out;
    Eigen::MatrixXd hidden(n, steps);
    out.p_one.reserve(symbols.size());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z(4 * n);
    for (Eigen::Index t = 0; t < steps; ++t) {
        Symbol const y = symbols[static_cast<std::size_t>(t)];
        hidden.col(t) = h;
        double const logit = w.dot(h) + w0;
        out.p_one.push_back(readout_probability(logit));
        out.log_likelihood -= softplus(logit) - static_cast<double>(y) * logit;

        double const x = encode_symbol(y, encoding);
        z.noalias() = u * h;
        z += wx * x + b;
        activate(z, n);
        c = z.segment(0, n).cwiseProduct(c) + z.segment(n, n).cwiseProduct(z.tail(n));
        if (squash) h = z.segment(2 * n, n).cwiseProduct(c.array().tanh().matrix());
        else h = z.segment(2 * n, n).cwiseProduct(c);
    }
    out.hidden = hidden.transpose();
    return out;
}

double lstm_window_loss(LstmParams const& params, std::span<Symbol const> symbols, LstmState& state,
                        Eigen::VectorXd* gradient, InputEncoding encoding) {
    Eigen::Index const n = params.hidden();
    auto const steps = static_cast<Eigen::Index>(symbols.size());
    auto const wx = params.input_weights();
    auto const u = params.recurrent();
    auto const b = params.bias();
    auto const w = params.readout_weights();
    double const w0 = params.readout_bias();

    bool const squash = params.cell_output() == CellOutput::tanh;
    Eigen::MatrixXd hs(n, steps + 1);
    Eigen::MatrixXd cs(n, steps + 1);
    Eigen::MatrixXd gates(4 * n, steps);
    Eigen::VectorXd xs(steps);
    Eigen::VectorXd err(steps);  // p(1|h_t) - x_t
    hs.col(0) = state.h;
    cs.col(0) = state.c;

    double loss = 0.0;
    for (Eigen::Index t = 0; t < steps; ++t) {
        Symbol const y = symbols[static_cast<std::size_t>(t)];
        double const logit = w.dot(hs.col(t)) + w0;
        loss += softplus(logit) - static_cast<double>(y) * logit;
        err[t] = sigmoid(logit) - static_cast<double>(y);

        xs[t] = encode_symbol(y, encoding);
        auto z = gates.col(t);
        z.noalias() = u * hs.col(t);
        z += wx * xs[t] + b;
        activate(z, n);
        cs.col(t + 1) = z.segment(0, n).cwiseProduct(cs.col(t)) +
                        z.segment(n, n).cwiseProduct(z.tail(n));
        if (squash) hs.col(t + 1) = z.segment(2 * n, n).cwiseProduct(cs.col(t + 1).array().tanh().matrix());
        else hs.col(t + 1) = z.segment(2 * n, n).cwiseProduct(cs.col(t + 1));
    }
    state.h = hs.col(steps);
    state.c = cs.col(steps);
    if (!gradient) return loss;

    Offsets const o(params.hidden());
    Eigen::VectorXd& g = *gradient;
    Eigen::MatrixXd dz_all(4 * n, steps);
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(n);  // dL/dh_{t+1}
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(n);  // dL/dc_{t+1}
    Eigen::VectorXd dcs(n);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        auto const z = gates.col(t);
        auto const f = z.segment(0, n).array();
        auto const i = z.segment(n, n).array();
        auto const og = z.segment(2 * n, n).array();
        auto const cand = z.tail(n).array();
        auto dz = dz_all.col(t);

        // Cell as seen by the output gate, and d(that)/dc.
        Eigen::ArrayXd const co = squash ? cs.col(t + 1).array().tanh().eval() : cs.col(t + 1).array().eval();
        Eigen::ArrayXd const dco = squash ? (1.0 - co * co).eval() : Eigen::ArrayXd::Ones(n).eval();
        dcs = dc + (dh.array() * og * dco).matrix();
        dz.segment(0, n) = (dcs.array() * cs.col(t).array() * f * (1.0 - f)).matrix();
        dz.segment(n, n) = (dcs.array() * cand * i * (1.0 - i)).matrix();
        dz.segment(2 * n, n) = (dh.array() * co * og * (1.0 - og)).matrix();
        dz.tail(n) = (dcs.array() * i * (1.0 - cand * cand)).matrix();

        dc = dcs.cwiseProduct(z.segment(0, n));
        dh.noalias() = u.transpose() * dz;
        dh += err[t] * w;
    }

    auto const h_in = hs.leftCols(steps);
    g.segment(o.input, 4 * n) += dz_all * xs;
    Eigen::Map<Eigen::MatrixXd>(g.data() + o.recurrent, 4 * n, n).noalias() += dz_all * h_in.transpose();
    g.segment(o.bias, 4 * n) += dz_all.rowwise().sum();
    g.segment(o.readout, n) += h_in * err;
    g[o.readout_bias] += err.sum();
    return loss;
}

LstmParams lstm_init(int hidden, std::uint64_t seed, double stddev) {
    LstmParams params(hidden);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    for (auto& v : params.flat()) v = normal(rng);
    return params;
}

LstmTrainResult lstm_train(int hidden, LstmOptions const& options, std::uint64_t seed,
                           std::span<Symbol const> symbols, InputEncoding encoding) {
    if (options.window < 1) throw std::invalid_argument("truncation window must be positive");
    if (symbols.size() < options.window) {
        throw InsufficientData("LSTM training needs at least one full window of " +
                               std::to_string(options.window) + " symbols");
    }
    LstmTrainResult result{lstm_init(hidden, seed, options.init_stddev), {}, 0, options.learning_rate};
    result.params.set_cell_output(options.cell_output);
    Eigen::VectorXd& theta = result.params.flat();
    auto const dim = theta.size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd grad(dim);
    long step = 0;
    double lr = options.learning_rate;

    for (int epoch = 0; epoch < options.epochs;) {
        Eigen::VectorXd const theta0 = theta;
        Eigen::VectorXd const m0 = m;
        Eigen::VectorXd const v0 = v;
        long const step0 = step;

        LstmState state = LstmState::zeros(hidden);
        double epoch_loss = 0.0;
        bool diverged = false;
        for (std::size_t start = 0; start < symbols.size(); start += options.window) {
            auto const window = symbols.subspan(start, std::min(options.window, symbols.size() - start));
            grad.setZero();
            double const loss = lstm_window_loss(result.params, window, state, &grad, encoding);
            if (!std::isfinite(loss) || !grad.allFinite()) {
                diverged = true;
                break;
            }
            epoch_loss += loss;
            grad /= static_cast<double>(window.size());
            if (options.clip_norm > 0) {
                double const norm = grad.norm();
                if (norm > options.clip_norm) grad *= options.clip_norm / norm;
            }
            ++step;
            if (options.optimizer == Optimizer::adam) {
                m = options.beta1 * m + (1.0 - options.beta1) * grad;
                v = options.beta2 * v + (1.0 - options.beta2) * grad.cwiseAbs2();
                double const bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
                double const bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
                theta.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + options.epsilon);
            } else {
                theta -= lr * grad;
            }
            if (!theta.allFinite()) {
                diverged = true;
                break;
            }
        }
        if (diverged) {
            if (++result.restarts > options.max_restarts) {
                throw TrainingFailure("LSTM training diverged after " +
                                      std::to_string(options.max_restarts) + " step halvings");
            }
            theta = theta0;
            m = m0;
            v = v0;
            step = step0;
            lr *= 0.5;
            continue;
        }
        result.epoch_log_likelihood.push_back(-epoch_loss);
        ++epoch;
    }
    result.final_learning_rate = lr;
    return result;
}

LstmPredictor::LstmPredictor(int hidden, LstmOptions options, std::uint64_t seed,
                             InputEncoding encoding)
    : params_(lstm_init(hidden, seed, options.init_stddev)),
      options_(options),
      seed_(seed),
      encoding_(encoding) {
    params_.set_cell_output(options.cell_output);
}

LstmPredictor::LstmPredictor(LstmParams params, InputEncoding encoding)
    : params_(std::move(params)), encoding_(encoding) {}

void LstmPredictor::train(std::span<Symbol const> symbols) {
    auto result = lstm_train(params_.hidden(), options_, seed_, symbols, encoding_);
    params_ = std::move(result.params);
    epoch_ll_ = std::move(result.epoch_log_likelihood);
}

std::vector<double> LstmPredictor::predict_proba(std::span<Symbol const> symbols) const {
    return lstm_forward(params_, symbols, encoding_).p_one;
}

void LstmPredictor::dump(std::ostream& out) const {
    auto write = [&](char const* key, auto const& values) {
        out << key << " =";
        for (Eigen::Index i = 0; i < values.size(); ++i) out << ' ' << format_double(values(i));
        out << '\n';
    };
    out << "family = lstm\nhidden = " << params_.hidden() << "\nencoding = " << to_string(encoding_)
        << "\ncell_output = " << to_string(params_.cell_output())
        << "\ngate_order = forget input output cell\n";
    write("W", params_.input_weights());
    write("U", params_.recurrent().reshaped());
    write("b", params_.bias());
    write("w", params_.readout_weights());
    out << "w0 = " << format_double(params_.readout_bias()) << '\n';
}

}  // namespace pdfabench
