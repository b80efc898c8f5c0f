#pragma once

#include <cmath>
#include <span>

namespace pdfabench {

/// Shannon entropy in nats, with 0 ln 0 = 0.
inline double entropy_nats(std::span<double const> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

/// Binary entropy in nats.
inline double binary_entropy_nats(double p) {
    double const probs[2] = {p, 1.0 - p};
    return entropy_nats(probs);
}

}  // namespace pdfabench
