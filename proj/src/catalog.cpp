#include "pdfabench/catalog.hpp"

#include <cstdio>
#include <string>

namespace pdfabench::catalog {

namespace {

std::string tag(char const* name, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(q=%g)", name, value);
    return buf;
}

TransitionRow row(std::optional<Transition> on_zero, std::optional<Transition> on_one) {
    return TransitionRow{on_zero, on_one};
}

std::optional<Transition> edge(StateIndex next, double p) {
    if (p <= 0.0) return std::nullopt;
    return Transition{next, p};
}

}  // namespace

Pdfa even_process(double q) {
    return Pdfa(tag("even", q), {row(edge(0, 1.0 - q), edge(1, q)), row(std::nullopt, edge(0, 1.0))});
}

Pdfa biased_coin(double p_one) {
    return Pdfa(tag("coin", p_one), {row(edge(0, 1.0 - p_one), edge(0, p_one))});
}

Pdfa period_two() {
    return Pdfa("period2", {row(std::nullopt, edge(1, 1.0)), row(edge(0, 1.0), std::nullopt)});
}

Pdfa neven_process(double q, double p_b_one) {
    return Pdfa(tag("neven", q), {row(edge(2, 1.0 - q), edge(1, q)),
                                  row(edge(0, 1.0 - p_b_one), edge(0, p_b_one)),
                                  row(edge(0, 1.0), std::nullopt)});
}

}  // namespace pdfabench::catalog
