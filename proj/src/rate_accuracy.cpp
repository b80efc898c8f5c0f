#include "pdfabench/rate_accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pdfabench/error.hpp"
#include "pdfabench/machine_io.hpp"

namespace pdfabench {

AccuracyMatrix accuracy_matrix(Pdfa const& pdfa) {
    AccuracyMatrix a(pdfa.n_states());
    for (std::size_t s = 0; s < a.size(); ++s) {
        for (Symbol r = 0; r < kAlphabetSize; ++r) a[s][r] = pdfa.emission(static_cast<StateIndex>(s), r);
    }
    return a;
}

RateAccuracyPoint channel_rate_accuracy(std::span<double const> pi, AccuracyMatrix const& a,
                                        Channel const& channel) {
    std::array<double, kAlphabetSize> q{0.0, 0.0};
    double accuracy = 0.0;
    for (std::size_t s = 0; s < channel.size(); ++s) {
        for (std::size_t r = 0; r < kAlphabetSize; ++r) {
            q[r] += pi[s] * channel[s][r];
            accuracy += pi[s] * channel[s][r] * a[s][r];
        }
    }
    double rate = 0.0;
    for (std::size_t s = 0; s < channel.size(); ++s) {
        for (std::size_t r = 0; r < kAlphabetSize; ++r) {
            double const p = channel[s][r];
            if (p > 0.0 && pi[s] > 0.0) rate += pi[s] * p * std::log(p / q[r]);
        }
    }
    return {std::max(rate, 0.0), accuracy};
}

BaResult ba_solve(std::span<double const> pi, AccuracyMatrix const& a, double beta,
                  BaOptions const& options) {
    auto const n = a.size();
    BaResult result;
    result.beta = beta;
    std::array<double, kAlphabetSize> q{0.5, 0.5};
    result.channel.assign(n, q);

    Channel next(n);
    for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            // Log-domain softmax over r of ln q(r) + beta a(s,r).
            std::array<double, kAlphabetSize> logit{};
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < kAlphabetSize; ++r) {
                logit[r] = q[r] > 0.0 ? std::log(q[r]) + beta * a[s][r]
                                      : -std::numeric_limits<double>::infinity();
                top = std::max(top, logit[r]);
            }
            double z = 0.0;
            for (std::size_t r = 0; r < kAlphabetSize; ++r) {
                next[s][r] = std::exp(logit[r] - top);
                z += next[s][r];
            }
            for (std::size_t r = 0; r < kAlphabetSize; ++r) {
                next[s][r] /= z;
                change = std::max(change, std::abs(next[s][r] - result.channel[s][r]));
            }
        }
        result.channel.swap(next);
        q = {0.0, 0.0};
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t r = 0; r < kAlphabetSize; ++r) q[r] += pi[s] * result.channel[s][r];
        }
        result.iterations = iter;
        if (change < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    auto const point = channel_rate_accuracy(pi, a, result.channel);
    result.rate_nats = point.rate_nats;
    result.accuracy = point.accuracy;
    return result;
}

double zero_rate_accuracy(std::span<double const> pi, AccuracyMatrix const& a) {
    std::array<double, kAlphabetSize> by_symbol{0.0, 0.0};
    for (std::size_t s = 0; s < a.size(); ++s) {
        for (std::size_t r = 0; r < kAlphabetSize; ++r) by_symbol[r] += pi[s] * a[s][r];
    }
    return std::max(by_symbol[0], by_symbol[1]);
}

std::vector<double> default_beta_grid(std::size_t count, double lo, double hi) {
    std::vector<double> grid{0.0};
    if (count <= 1) return grid;
    std::size_t const m = count - 1;
    double const log_lo = std::log10(lo);
    double const log_hi = std::log10(hi);
    for (std::size_t i = 0; i < m; ++i) {
        double const frac = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
        grid.push_back(std::pow(10.0, log_lo + frac * (log_hi - log_lo)));
    }
    return grid;
}

RateAccuracyCurve trace_curve(Pdfa const& pdfa, std::span<double const> pi,
                              std::span<double const> betas, BaOptions const& options) {
    auto const a = accuracy_matrix(pdfa);
    RateAccuracyCurve curve;
    std::vector<CurvePoint> raw;
    for (double beta : betas) {
        if (beta == 0.0) {
            std::array<double, kAlphabetSize> by_symbol{0.0, 0.0};
            for (std::size_t s = 0; s < a.size(); ++s)
                for (std::size_t r = 0; r < kAlphabetSize; ++r) by_symbol[r] += pi[s] * a[s][r];
            std::size_t const best = by_symbol[1] > by_symbol[0] ? 1 : 0;
            std::array<double, kAlphabetSize> constant{0.0, 0.0};
            constant[best] = 1.0;
            raw.push_back({0.0, 0.0, by_symbol[best], Channel(a.size(), constant)});
            continue;
        }
        auto solved = ba_solve(pi, a, beta, options);
        if (!solved.converged) {
            curve.unconverged_betas.push_back(beta);
            continue;
        }
        raw.push_back({beta, solved.rate_nats, solved.accuracy, std::move(solved.channel)});
    }

    // Keep only points not dominated by another with >= accuracy and <= rate.
    std::sort(raw.begin(), raw.end(), [](CurvePoint const& l, CurvePoint const& r) {
        if (l.accuracy != r.accuracy) return l.accuracy > r.accuracy;
        return l.rate_nats < r.rate_nats;
    });
    double min_rate = std::numeric_limits<double>::infinity();
    for (auto& p : raw) {
        if (p.rate_nats < min_rate) {
            min_rate = p.rate_nats;
            curve.points.push_back(std::move(p));
        }
    }
    std::reverse(curve.points.begin(), curve.points.end());
    curve.augmented_point = optimal_predictor_point(pdfa, pi);
    return curve;
}

RateAccuracyCurve trace_curve(Pdfa const& pdfa) {
    auto const pi = stationary_distribution(pdfa);
    auto const betas = default_beta_grid();
    return trace_curve(pdfa, pi, betas);
}

std::vector<std::array<double, 2>> normalized_polyline(RateAccuracyCurve const& curve,
                                                       RateAccuracyPoint optimum) {
    std::vector<std::array<double, 2>> vertices;
    vertices.reserve(curve.points.size() + 1);
    for (auto const& p : curve.points) {
        vertices.push_back({p.rate_nats / optimum.rate_nats, p.accuracy / optimum.accuracy});
    }
    vertices.push_back({curve.augmented_point.rate_nats / optimum.rate_nats,
                        curve.augmented_point.accuracy / optimum.accuracy});
    std::stable_sort(vertices.begin(), vertices.end(), [](auto const& l, auto const& r) {
        if (l[1] != r[1]) return l[1] < r[1];
        return l[0] < r[0];
    });
    return vertices;
}

double normalized_distance(RateAccuracyPoint point, RateAccuracyCurve const& curve,
                           RateAccuracyPoint optimum) {
    if (!(optimum.rate_nats > 0.0)) {
        throw ExcludedMachine("normalized distance is undefined when the optimal rate is zero");
    }
    auto const vertices = normalized_polyline(curve, optimum);
    double const px = point.rate_nats / optimum.rate_nats;
    double const py = point.accuracy / optimum.accuracy;

    auto dist_to = [&](std::array<double, 2> const& v) { return std::hypot(px - v[0], py - v[1]); };
    double best = dist_to(vertices.front());
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        auto const& u = vertices[i - 1];
        auto const& v = vertices[i];
        double const dx = v[0] - u[0];
        double const dy = v[1] - u[1];
        double const len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((px - u[0]) * dx + (py - u[1]) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(px - (u[0] + t * dx), py - (u[1] + t * dy)));
    }
    return best;
}

double normalized_distortion(double accuracy, double optimal_accuracy) {
    return std::max(-100.0, 100.0 * (optimal_accuracy - accuracy) / optimal_accuracy);
}

void write_curve_csv(std::ostream& out, RateAccuracyCurve const& curve) {
    out << "beta,rate_nats,accuracy,kind\n";
    for (auto const& p : curve.points) {
        out << format_double(p.beta) << ',' << format_double(p.rate_nats) << ','
            << format_double(p.accuracy) << ",curve\n";
    }
    out << "inf," << format_double(curve.augmented_point.rate_nats) << ','
        << format_double(curve.augmented_point.accuracy) << ",optimal\n";
}

}  // namespace pdfabench
