#include "pdfabench/predictor.hpp"

#include <ostream>
#include <stdexcept>

#include "pdfabench/glm.hpp"
#include "pdfabench/information.hpp"
#include "pdfabench/lstm.hpp"
#include "pdfabench/reservoir.hpp"

namespace pdfabench {

std::string_view to_string(Family family) noexcept {
    switch (family) {
        case Family::glm: return "glm";
        case Family::reservoir: return "reservoir";
        case Family::lstm: return "lstm";
        case Family::oracle: return "oracle";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::glm, Family::reservoir, Family::lstm, Family::oracle}) {
        if (to_string(f) == name) return f;
    }
    throw std::invalid_argument("unknown predictor family '" + std::string(name) + "'");
}

std::string_view to_string(InputEncoding encoding) noexcept {
    return encoding == InputEncoding::zero_one ? "zero_one" : "plus_minus_one";
}

InputEncoding parse_input_encoding(std::string_view name) {
    if (name == "zero_one") return InputEncoding::zero_one;
    if (name == "plus_minus_one") return InputEncoding::plus_minus_one;
    throw std::invalid_argument("unknown input encoding '" + std::string(name) + "'");
}

std::string_view to_string(Optimizer optimizer) noexcept {
    return optimizer == Optimizer::adam ? "adam" : "gradient_ascent";
}

Optimizer parse_optimizer(std::string_view name) {
    if (name == "adam") return Optimizer::adam;
    if (name == "gradient_ascent" || name == "sgd") return Optimizer::gradient_ascent;
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(CellOutput cell) noexcept { return cell == CellOutput::identity ? "identity" : "tanh"; }

CellOutput parse_cell_output(std::string_view name) {
    if (name == "identity") return CellOutput::identity;
    if (name == "tanh") return CellOutput::tanh;
    throw std::invalid_argument("unknown cell output '" + std::string(name) + "'");
}

std::unique_ptr<Predictor> make_predictor(PredictorSpec const& spec, Pdfa const* machine) {
    if (spec.size < 1) throw std::invalid_argument("predictor size must be at least 1");
    switch (spec.family) {
        case Family::glm:
            return std::make_unique<GlmPredictor>(spec.size, spec.logistic);
        case Family::reservoir:
            return std::make_unique<ReservoirPredictor>(
                reservoir_init(spec.size, spec.seed, spec.reservoir.spectral_radius), spec.logistic,
                spec.reservoir.encoding);
        case Family::lstm:
            return std::make_unique<LstmPredictor>(spec.size, spec.lstm, spec.seed);
        case Family::oracle:
            if (!machine) throw std::invalid_argument("the oracle predictor needs its machine");
            return std::make_unique<OraclePredictor>(*machine);
    }
    throw std::invalid_argument("unknown predictor family");
}

StreamEvaluation score_predictions(std::span<double const> p_one, std::span<Symbol const> symbols,
                                   std::size_t train_len) {
    if (train_len >= symbols.size()) throw std::invalid_argument("no test positions to score");
    StreamEvaluation eval;
    eval.predictions.reserve(symbols.size() - train_len);
    std::size_t correct = 0;
    std::size_t ones = 0;
    for (std::size_t t = train_len; t < symbols.size(); ++t) {
        Symbol const r = argmax_prediction(p_one[t]);
        eval.predictions.push_back(r);
        correct += r == symbols[t];
        ones += r;
    }
    auto const total = static_cast<double>(eval.predictions.size());
    eval.accuracy = static_cast<double>(correct) / total;
    double const marginal[2] = {static_cast<double>(eval.predictions.size() - ones) / total,
                                static_cast<double>(ones) / total};
    eval.rate_nats = entropy_nats(marginal);
    return eval;
}

StreamEvaluation evaluate_stream(Predictor const& model, std::span<Symbol const> symbols,
                                 std::size_t train_len) {
    auto const p = model.predict_proba(symbols);
    return score_predictions(p, symbols, train_len);
}

OraclePredictor::OraclePredictor(Pdfa machine)
    : machine_(std::move(machine)), pi_(stationary_distribution(machine_)) {}

std::vector<double> OraclePredictor::predict_proba(std::span<Symbol const> symbols) const {
    std::vector<double> p;
    p.reserve(symbols.size());
    StateFilter filter(machine_, pi_);
    for (Symbol x : symbols) {
        double const p1 = filter.next_symbol_probability(1);
        double const p0 = filter.next_symbol_probability(0);
        // Keep the argmax tie rule exact: p0 == p1 must map to 0.5.
        p.push_back(p1 > p0 ? std::max(p1, std::nextafter(0.5, 1.0)) : std::min(p1, 0.5));
        filter.observe(x);
    }
    return p;
}

void OraclePredictor::dump(std::ostream& out) const {
    out << "family = oracle\nmachine_id = " << machine_.machine_id() << '\n';
}

}  // namespace pdfabench
