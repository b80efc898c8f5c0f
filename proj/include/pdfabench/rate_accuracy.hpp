#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "pdfabench/pdfa.hpp"

namespace pdfabench {

/// a(s, r) = p(next symbol = r | s). Rows are states.
using AccuracyMatrix = std::vector<std::array<double, kAlphabetSize>>;

/// Channel p(r | s) from causal state to the binary prediction.
using Channel = std::vector<std::array<double, kAlphabetSize>>;

AccuracyMatrix accuracy_matrix(Pdfa const& pdfa);

struct BaOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10'000;
};

struct BaResult {
    double beta = 0.0;
    double rate_nats = 0.0;
    double accuracy = 0.0;
    Channel channel;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Blahut-Arimoto for min I[S;R] - beta * E[accuracy] with a binary
/// representation, started from q = (1/2, 1/2). Stops once the largest
/// channel entry moves less than options.tolerance.
BaResult ba_solve(std::span<double const> pi, AccuracyMatrix const& a, double beta,
                  BaOptions const& options = {});

/// Mutual information I[S;R] in nats and expected accuracy of any channel.
RateAccuracyPoint channel_rate_accuracy(std::span<double const> pi, AccuracyMatrix const& a,
                                        Channel const& channel);

/// Best accuracy reachable without looking at the state: max_r sum_s pi(s) a(s,r).
double zero_rate_accuracy(std::span<double const> pi, AccuracyMatrix const& a);

/// 0 followed by `count - 1` log-spaced values in [lo, hi].
std::vector<double> default_beta_grid(std::size_t count = 101, double lo = 1e-2, double hi = 1e3);

struct CurvePoint {
    double beta = 0.0;
    double rate_nats = 0.0;
    double accuracy = 0.0;
    Channel channel;
};

struct RateAccuracyCurve {
    /// Sorted by accuracy; no point is dominated by another.
    std::vector<CurvePoint> points;
    RateAccuracyPoint augmented_point;
    /// Betas whose solve hit the iteration cap; they are left out of `points`.
    std::vector<double> unconverged_betas;
};

/// Sweeps the beta grid. The beta = 0 entry is the zero-rate endpoint: a
/// constant prediction of the best symbol, which is the beta -> 0+ limit.
RateAccuracyCurve trace_curve(Pdfa const& pdfa, std::span<double const> pi,
                              std::span<double const> betas, BaOptions const& options = {});
RateAccuracyCurve trace_curve(Pdfa const& pdfa);

/// Euclidean distance from `point` to the polyline through the curve
/// vertices and the augmented optimum, after dividing rate by R_opt and
/// accuracy by A_opt. Throws ExcludedMachine when R_opt is zero.
double normalized_distance(RateAccuracyPoint point, RateAccuracyCurve const& curve,
                           RateAccuracyPoint optimum);

/// Normalized polyline vertices (rate / R_opt, accuracy / A_opt), in order.
std::vector<std::array<double, 2>> normalized_polyline(RateAccuracyCurve const& curve,
                                                       RateAccuracyPoint optimum);

/// 100 (A_opt - A) / A_opt, clamped below at -100.
double normalized_distortion(double accuracy, double optimal_accuracy);

/// Columns beta,rate_nats,accuracy,kind; the last row is kind=optimal.
void write_curve_csv(std::ostream& out, RateAccuracyCurve const& curve);

}  // namespace pdfabench
