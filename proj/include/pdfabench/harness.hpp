#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "pdfabench/pdfa.hpp"
#include "pdfabench/predictor.hpp"
#include "pdfabench/rate_accuracy.hpp"

namespace pdfabench {

/// Evaluation protocol: one stream per (machine, seed), the first part
/// trains, the rest is scored.
struct ProtocolConfig {
    std::size_t sequence_length = 5000;
    double train_fraction = 0.5;
    int seeds_per_machine = 1;
    std::uint64_t global_seed = 0;
    std::vector<Family> families{Family::glm, Family::reservoir, Family::lstm};
    std::map<Family, std::vector<int>> grids = default_grids();
    std::vector<double> betas = default_beta_grid();
    bool exclude_zero_rate = true;
    LogisticOptions logistic;
    ReservoirOptions reservoir;
    LstmOptions lstm;

    std::size_t train_length() const noexcept;
    /// Throws std::invalid_argument when an invariant is broken.
    void check() const;

    /// GLM 1..10, reservoir 1,6,..,61, LSTM 1,13,..,121, oracle {1}.
    static std::map<Family, std::vector<int>> default_grids();
};

/// Per-machine quantities shared by every run on that machine.
struct MachineContext {
    Pdfa pdfa;
    ProcessSummary summary;
    RateAccuracyCurve curve;

    bool zero_rate() const noexcept { return !(summary.optimal_rate_nats > 0.0); }
};

MachineContext prepare_machine(Pdfa pdfa, ProtocolConfig const& protocol);

inline constexpr int kRecordSchemaVersion = 1;

struct EvalRecord {
    std::string machine_id;
    Family family = Family::glm;
    int size = 0;
    int seed = 0;
    double rate_nats = 0.0;
    double accuracy = 0.0;
    std::optional<double> normalized_rate;
    std::optional<double> normalized_accuracy;
    std::optional<double> normalized_distance;
    double normalized_distortion_pct = 0.0;
    double h_mu = 0.0;
    double c_mu = 0.0;
    double a_opt = 0.0;
    double r_opt = 0.0;
    bool failed = false;
    std::string failure;

    using Key = std::tuple<std::string, Family, int, int>;
    Key key() const { return {machine_id, family, size, seed}; }
};

/// One JSON object, fixed field order, doubles with 17 significant digits.
std::string record_to_json_line(EvalRecord const& record);
EvalRecord record_from_json_line(std::string const& text, std::string const& source = "<string>",
                                 std::size_t line = 1);

std::uint64_t sequence_seed(ProtocolConfig const& protocol, std::string const& machine_id, int seed);
std::uint64_t model_seed(ProtocolConfig const& protocol, std::string const& machine_id, Family family,
                         int size, int seed);

PredictorSpec make_spec(ProtocolConfig const& protocol, Family family, int size, std::uint64_t seed);

/// Sample, train on the prefix, score the suffix and attach curve metrics.
/// A TrainingFailure yields a record with failed = true.
EvalRecord run_single(MachineContext const& machine, Family family, int size,
                      ProtocolConfig const& protocol, int seed);

struct SweepResult {
    std::vector<EvalRecord> records;
    /// Index into records; empty when every grid point failed.
    std::optional<std::size_t> best;
    bool family_failed() const noexcept { return !best.has_value(); }
};

/// Lowest normalized distortion wins; ties go to the smaller size, then
/// the smaller rate. Failed records never win.
std::optional<std::size_t> select_best(std::vector<EvalRecord> const& records);

SweepResult sweep_family(MachineContext const& machine, Family family, std::vector<int> const& grid,
                         ProtocolConfig const& protocol, int seed);

/// Append-only JSON-lines store keyed by (machine, family, size, seed).
class RecordStore {
public:
    /// Loads existing records. A torn final line (no newline) left by an
    /// interrupted run is dropped from the file.
    explicit RecordStore(std::filesystem::path path);

    std::filesystem::path const& path() const noexcept { return path_; }
    std::vector<EvalRecord> const& records() const noexcept { return records_; }
    bool contains(EvalRecord::Key const& key) const { return keys_.contains(key); }

    /// Writes and flushes one line. Throws Error on I/O failure.
    void append(EvalRecord const& record);

private:
    std::filesystem::path path_;
    std::vector<EvalRecord> records_;
    std::set<EvalRecord::Key> keys_;
};

std::vector<EvalRecord> read_records(std::filesystem::path const& path);

struct SuiteOptions {
    int jobs = 1;
    /// Called after each machine with (machines done, machine count, id).
    std::function<void(std::size_t, std::size_t, std::string const&)> progress;
    /// Stop after this many newly computed records (simulated interrupt).
    std::optional<std::size_t> max_new_records;
};

struct SuiteRunReport {
    std::size_t computed = 0;
    std::size_t reused = 0;
    std::vector<std::string> skipped_machines;
    bool interrupted = false;
};

/// Runs every family sweep on every machine that passes the exclusion
/// rule, skipping keys already present in the store. Excluded machines are
/// listed in "<store>.skipped". Output order is fixed, so a resumed run ends
/// with the same bytes as an uninterrupted one.
SuiteRunReport run_suite(std::vector<Pdfa> const& library, ProtocolConfig const& protocol,
                         RecordStore& store, SuiteOptions const& options = {});

std::filesystem::path skip_log_path(std::filesystem::path const& store_path);

struct FamilyStats {
    Family family = Family::glm;
    std::size_t records = 0;
    std::size_t failed = 0;
    std::size_t machines = 0;
    double mean_distortion = 0.0;
    double median_distortion = 0.0;
    double p90_distortion = 0.0;
    double max_distortion = 0.0;
    std::size_t distance_records = 0;
    double mean_distance = 0.0;
    double median_distance = 0.0;
    double max_distance = 0.0;
    /// Over the best record of each (machine, seed).
    double optimized_mean_distortion = 0.0;
    double optimized_max_distortion = 0.0;
    double optimized_mean_distance = 0.0;
};

struct HistogramOptions {
    double lo = 0.0;
    double hi = 0.5;
    std::size_t bins = 25;
};

struct DistanceHistogram {
    HistogramOptions range;
    /// counts[f][i] for bin i; the last extra entry counts values >= hi.
    std::map<Family, std::vector<std::size_t>> counts;
};

struct RegressionResult {
    Family family = Family::glm;
    std::string target;  // "min_distortion" or "min_distance"
    std::size_t machines = 0;
    double coef_h_mu = 0.0;
    double coef_c_mu = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct SuiteSummary {
    std::vector<FamilyStats> families;
    DistanceHistogram histogram;
    std::vector<RegressionResult> regressions;
    /// Families with fewer than three machines or a degenerate design.
    std::vector<std::string> regression_notes;
};

SuiteSummary aggregate(std::vector<EvalRecord> const& records, HistogramOptions const& histogram = {});

struct LinearFit {
    std::vector<double> coefficients;  // one per regressor, then the intercept
    double r_squared = 0.0;
};

/// Ordinary least squares with intercept through the normal equations.
/// Throws DegenerateRegression on a rank-deficient design.
LinearFit fit_linear(std::vector<std::vector<double>> const& regressors, std::vector<double> const& target);

/// Per-family regression of the per-machine minimum distortion and minimum
/// distance on (h_mu, C_mu). Needs three machines per family.
std::vector<RegressionResult> complexity_regression(std::vector<EvalRecord> const& records,
                                                    std::vector<std::string>* notes = nullptr);

/// family_stats.csv, distance_histogram.csv, regression.csv and
/// rate_accuracy_points.csv in `dir`.
void write_summary_csvs(std::filesystem::path const& dir, SuiteSummary const& summary,
                        std::vector<EvalRecord> const& records);

}  // namespace pdfabench
