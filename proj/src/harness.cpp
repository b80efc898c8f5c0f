#include "pdfabench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "pdfabench/error.hpp"
#include "pdfabench/machine_io.hpp"
#include "pdfabench/seeds.hpp"

namespace pdfabench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Protocol

std::map<Family, std::vector<int>> ProtocolConfig::default_grids() {
    std::map<Family, std::vector<int>> grids;
    for (int k = 1; k <= 10; ++k) grids[Family::glm].push_back(k);
    for (int n = 1; n <= 61; n += 5) grids[Family::reservoir].push_back(n);
    for (int n = 1; n <= 121; n += 12) grids[Family::lstm].push_back(n);
    grids[Family::oracle] = {1};
    return grids;
}

std::size_t ProtocolConfig::train_length() const noexcept {
    return static_cast<std::size_t>(std::floor(static_cast<double>(sequence_length) * train_fraction));
}

void ProtocolConfig::check() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    }
    if (static_cast<double>(sequence_length) * (1.0 - train_fraction) < 2.0 - 1e-9 || train_length() < 1) {
        throw std::invalid_argument("sequence_length too short for train_fraction");
    }
    if (seeds_per_machine < 1) throw std::invalid_argument("seeds per machine must be at least 1");
    if (!(lstm.clip_norm >= 0.0)) throw std::invalid_argument("lstm clip_norm must be non-negative");
    for (Family f : families) {
        auto it = grids.find(f);
        if (it == grids.end() || it->second.empty()) {
            throw std::invalid_argument("empty grid for family " + std::string(to_string(f)));
        }
        for (int size : it->second) {
            if (size < 1) throw std::invalid_argument("grid sizes must be at least 1");
        }
    }
}

MachineContext prepare_machine(Pdfa pdfa, ProtocolConfig const& protocol) {
    auto summary = summarize(pdfa);
    auto curve = trace_curve(pdfa, summary.pi, protocol.betas);
    return {std::move(pdfa), std::move(summary), std::move(curve)};
}

// ---------------------------------------------------------------------------
// Records

std::string record_to_json_line(EvalRecord const& r) {
    auto opt = [](std::optional<double> const& v) { return v ? format_double(*v) : std::string("null"); };
    std::string out;
    out += "{\"schema_version\":" + std::to_string(kRecordSchemaVersion);
    out += ",\"machine_id\":" + json(r.machine_id).dump();
    out += ",\"family\":\"" + std::string(to_string(r.family)) + "\"";
    out += ",\"size\":" + std::to_string(r.size);
    out += ",\"seed\":" + std::to_string(r.seed);
    out += ",\"failed\":" + std::string(r.failed ? "true" : "false");
    out += ",\"rate_nats\":" + format_double(r.rate_nats);
    out += ",\"accuracy\":" + format_double(r.accuracy);
    out += ",\"normalized_rate\":" + opt(r.normalized_rate);
    out += ",\"normalized_accuracy\":" + opt(r.normalized_accuracy);
    out += ",\"normalized_distance\":" + opt(r.normalized_distance);
    out += ",\"normalized_distortion_pct\":" + format_double(r.normalized_distortion_pct);
    out += ",\"h_mu\":" + format_double(r.h_mu);
    out += ",\"C_mu\":" + format_double(r.c_mu);
    out += ",\"A_opt\":" + format_double(r.a_opt);
    out += ",\"R_opt\":" + format_double(r.r_opt);
    if (r.failed) out += ",\"failure\":" + json(r.failure).dump();
    out += "}";
    return out;
}

EvalRecord record_from_json_line(std::string const& text, std::string const& source, std::size_t line) {
    EvalRecord r;
    try {
        auto const doc = json::parse(text);
        int const version = doc.at("schema_version").get<int>();
        if (version != kRecordSchemaVersion) {
            throw ParseError(source, line, "unsupported schema_version " + std::to_string(version));
        }
        auto opt = [&](char const* key) -> std::optional<double> {
            auto const& v = doc.at(key);
            if (v.is_null()) return std::nullopt;
            return v.get<double>();
        };
        r.machine_id = doc.at("machine_id").get<std::string>();
        r.family = parse_family(doc.at("family").get<std::string>());
        r.size = doc.at("size").get<int>();
        r.seed = doc.at("seed").get<int>();
        r.failed = doc.at("failed").get<bool>();
        r.rate_nats = doc.at("rate_nats").get<double>();
        r.accuracy = doc.at("accuracy").get<double>();
        r.normalized_rate = opt("normalized_rate");
        r.normalized_accuracy = opt("normalized_accuracy");
        r.normalized_distance = opt("normalized_distance");
        r.normalized_distortion_pct = doc.at("normalized_distortion_pct").get<double>();
        r.h_mu = doc.at("h_mu").get<double>();
        r.c_mu = doc.at("C_mu").get<double>();
        r.a_opt = doc.at("A_opt").get<double>();
        r.r_opt = doc.at("R_opt").get<double>();
        if (r.failed) r.failure = doc.value("failure", std::string{});
    } catch (json::exception const& e) {
        throw ParseError(source, line, e.what());
    } catch (std::invalid_argument const& e) {
        throw ParseError(source, line, e.what());
    }
    return r;
}

std::uint64_t sequence_seed(ProtocolConfig const& protocol, std::string const& machine_id, int seed) {
    return derive_seed(protocol.global_seed, machine_id + "/sequence/" + std::to_string(seed));
}

std::uint64_t model_seed(ProtocolConfig const& protocol, std::string const& machine_id, Family family,
                         int size, int seed) {
    return derive_seed(protocol.global_seed, machine_id + "/" + std::string(to_string(family)) + "/" +
                                                 std::to_string(size) + "/" + std::to_string(seed));
}

PredictorSpec make_spec(ProtocolConfig const& protocol, Family family, int size, std::uint64_t seed) {
    PredictorSpec spec;
    spec.family = family;
    spec.size = size;
    spec.seed = seed;
    spec.logistic = protocol.logistic;
    spec.reservoir = protocol.reservoir;
    spec.lstm = protocol.lstm;
    return spec;
}

// ---------------------------------------------------------------------------
// Single runs and sweeps

EvalRecord run_single(MachineContext const& machine, Family family, int size,
                      ProtocolConfig const& protocol, int seed) {
    auto const& pdfa = machine.pdfa;
    auto const& summary = machine.summary;
    EvalRecord record;
    record.machine_id = pdfa.machine_id();
    record.family = family;
    record.size = size;
    record.seed = seed;
    record.h_mu = summary.entropy_rate_nats;
    record.c_mu = summary.statistical_complexity_nats;
    record.a_opt = summary.optimal_accuracy;
    record.r_opt = summary.optimal_rate_nats;

    auto const sample = sample_sequence(pdfa, summary.pi, protocol.sequence_length,
                                        sequence_seed(protocol, pdfa.machine_id(), seed));
    std::span<Symbol const> const symbols(sample.symbols);
    std::size_t const train_len = protocol.train_length();

    try {
        auto const spec = make_spec(protocol, family, size,
                                    model_seed(protocol, pdfa.machine_id(), family, size, seed));
        auto model = make_predictor(spec, &pdfa);
        model->train(symbols.first(train_len));
        auto const p = model->predict_proba(symbols);
        if (!std::all_of(p.begin() + static_cast<std::ptrdiff_t>(train_len), p.end(),
                         [](double v) { return std::isfinite(v); })) {
            throw TrainingFailure("non-finite predicted probability");
        }
        auto const eval = score_predictions(p, symbols, train_len);
        record.rate_nats = eval.rate_nats;
        record.accuracy = eval.accuracy;
    } catch (TrainingFailure const& e) {
        record.failed = true;
        record.failure = e.what();
    }

    record.normalized_distortion_pct = normalized_distortion(record.accuracy, record.a_opt);
    if (!record.failed && record.r_opt > 0.0) {
        record.normalized_rate = record.rate_nats / record.r_opt;
        record.normalized_accuracy = record.accuracy / record.a_opt;
        record.normalized_distance =
            normalized_distance({record.rate_nats, record.accuracy}, machine.curve,
                                {summary.optimal_rate_nats, summary.optimal_accuracy});
    }
    return record;
}

std::optional<std::size_t> select_best(std::vector<EvalRecord> const& records) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto const& r = records[i];
        if (r.failed) continue;
        if (!best) {
            best = i;
            continue;
        }
        auto const& b = records[*best];
        if (std::tie(r.normalized_distortion_pct, r.size, r.rate_nats) <
            std::tie(b.normalized_distortion_pct, b.size, b.rate_nats)) {
            best = i;
        }
    }
    return best;
}

SweepResult sweep_family(MachineContext const& machine, Family family, std::vector<int> const& grid,
                         ProtocolConfig const& protocol, int seed) {
    if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
    SweepResult result;
    for (int size : grid) result.records.push_back(run_single(machine, family, size, protocol, seed));
    result.best = select_best(result.records);
    return result;
}

// ---------------------------------------------------------------------------
// Store

RecordStore::RecordStore(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    std::string content;
    {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw Error("cannot open record store '" + path_.string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        content = buf.str();
    }
    std::size_t const complete = content.rfind('\n') == std::string::npos ? 0 : content.rfind('\n') + 1;
    if (complete != content.size()) std::filesystem::resize_file(path_, complete);

    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos < complete) {
        std::size_t const end = content.find('\n', pos);
        std::string const text = content.substr(pos, end - pos);
        pos = end + 1;
        ++line;
        if (text.empty()) continue;
        auto record = record_from_json_line(text, path_.string(), line);
        keys_.insert(record.key());
        records_.push_back(std::move(record));
    }
}

void RecordStore::append(EvalRecord const& record) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << record_to_json_line(record) << '\n';
    out.flush();
    if (!out) throw Error("failed to append to record store '" + path_.string() + "'");
    keys_.insert(record.key());
    records_.push_back(record);
}

std::vector<EvalRecord> read_records(std::filesystem::path const& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open record store '" + path.string() + "'");
    std::vector<EvalRecord> records;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty()) records.push_back(record_from_json_line(text, path.string(), line));
    }
    return records;
}

std::filesystem::path skip_log_path(std::filesystem::path const& store_path) {
    auto p = store_path;
    p += ".skipped";
    return p;
}

// ---------------------------------------------------------------------------
// Suite

namespace {

struct Task {
    Family family;
    int size;
    int seed;
};

std::vector<EvalRecord> run_tasks(MachineContext const& machine, std::vector<Task> const& tasks,
                                  ProtocolConfig const& protocol, int jobs) {
    std::vector<EvalRecord> results(tasks.size());
    auto work = [&](std::size_t i) {
        results[i] = run_single(machine, tasks[i].family, tasks[i].size, protocol, tasks[i].seed);
    };
    auto const workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
        return results;
    }
    // Largest tasks tend to come last in each grid; hand them out first.
    std::vector<std::size_t> order(tasks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return tasks[a].size > tasks[b].size;
    });
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, tasks.size()); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k; (k = next.fetch_add(1)) < order.size();) {
                try {
                    work(order[k]);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

void write_skip_log(std::filesystem::path const& store_path, std::vector<std::string> const& skipped) {
    std::ofstream out(skip_log_path(store_path), std::ios::binary | std::ios::trunc);
    for (auto const& id : skipped) out << id << "\tzero-rate optimal predictor\n";
    if (!out) throw Error("cannot write skip log next to '" + store_path.string() + "'");
}

}  // namespace

SuiteRunReport run_suite(std::vector<Pdfa> const& library, ProtocolConfig const& protocol,
                         RecordStore& store, SuiteOptions const& options) {
    protocol.check();
    if (library.empty()) throw std::invalid_argument("machine library is empty");
    SuiteRunReport report;
    std::size_t done = 0;
    for (auto const& pdfa : library) {
        auto const summary = summarize(pdfa);
        if (protocol.exclude_zero_rate && !(summary.optimal_rate_nats > 0.0)) {
            report.skipped_machines.push_back(pdfa.machine_id());
            ++done;
            if (options.progress) options.progress(done, library.size(), pdfa.machine_id());
            continue;
        }
        std::vector<Task> tasks;
        for (Family family : protocol.families) {
            for (int size : protocol.grids.at(family)) {
                for (int seed = 0; seed < protocol.seeds_per_machine; ++seed) {
                    if (store.contains({pdfa.machine_id(), family, size, seed})) {
                        ++report.reused;
                    } else {
                        tasks.push_back({family, size, seed});
                    }
                }
            }
        }
        if (!tasks.empty()) {
            auto const context = prepare_machine(pdfa, protocol);
            auto const results = run_tasks(context, tasks, protocol, options.jobs);
            for (auto const& record : results) {
                if (options.max_new_records && report.computed >= *options.max_new_records) {
                    report.interrupted = true;
                    write_skip_log(store.path(), report.skipped_machines);
                    return report;
                }
                store.append(record);
                ++report.computed;
            }
        }
        ++done;
        if (options.progress) options.progress(done, library.size(), pdfa.machine_id());
    }
    write_skip_log(store.path(), report.skipped_machines);
    return report;
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

double mean(std::vector<double> const& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto const n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Nearest-rank percentile.
double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

double max_of(std::vector<double> const& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::vector<Family> families_present(std::vector<EvalRecord> const& records) {
    std::set<Family> present;
    for (auto const& r : records) present.insert(r.family);
    return {present.begin(), present.end()};
}

}  // namespace

SuiteSummary aggregate(std::vector<EvalRecord> const& records, HistogramOptions const& histogram) {
    SuiteSummary summary;
    summary.histogram.range = histogram;
    double const width = (histogram.hi - histogram.lo) / static_cast<double>(histogram.bins);

    for (Family family : families_present(records)) {
        FamilyStats stats;
        stats.family = family;
        std::vector<double> distortion, distance;
        std::map<std::pair<std::string, int>, std::vector<EvalRecord>> groups;
        auto& counts = summary.histogram.counts[family];
        counts.assign(histogram.bins + 1, 0);
        for (auto const& r : records) {
            if (r.family != family) continue;
            ++stats.records;
            if (r.failed) {
                ++stats.failed;
                continue;
            }
            distortion.push_back(r.normalized_distortion_pct);
            if (r.normalized_distance) {
                double const d = *r.normalized_distance;
                distance.push_back(d);
                if (d >= histogram.hi) {
                    ++counts.back();
                } else if (d >= histogram.lo) {
                    auto bin = static_cast<std::size_t>((d - histogram.lo) / width);
                    ++counts[std::min(bin, histogram.bins - 1)];
                }
            }
            groups[{r.machine_id, r.seed}].push_back(r);
        }
        std::set<std::string> machines;
        std::vector<double> best_distortion, best_distance;
        for (auto const& [key, group] : groups) {
            machines.insert(key.first);
            auto const best = select_best(group);
            if (!best) continue;
            best_distortion.push_back(group[*best].normalized_distortion_pct);
            if (group[*best].normalized_distance) best_distance.push_back(*group[*best].normalized_distance);
        }
        stats.machines = machines.size();
        stats.mean_distortion = mean(distortion);
        stats.median_distortion = median(distortion);
        stats.p90_distortion = percentile(distortion, 0.9);
        stats.max_distortion = max_of(distortion);
        stats.distance_records = distance.size();
        stats.mean_distance = mean(distance);
        stats.median_distance = median(distance);
        stats.max_distance = max_of(distance);
        stats.optimized_mean_distortion = mean(best_distortion);
        stats.optimized_max_distortion = max_of(best_distortion);
        stats.optimized_mean_distance = mean(best_distance);
        summary.families.push_back(stats);
    }
    summary.regressions = complexity_regression(records, &summary.regression_notes);
    return summary;
}

LinearFit fit_linear(std::vector<std::vector<double>> const& regressors, std::vector<double> const& target) {
    auto const n = static_cast<Eigen::Index>(target.size());
    if (regressors.size() != target.size()) throw std::invalid_argument("regressor/target length mismatch");
    auto const k = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(regressors.front().size());
    Eigen::MatrixXd x(n, k + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) x(i, j) = regressors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        x(i, k) = 1.0;
        y[i] = target[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd const gram = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    auto const ev = eig.eigenvalues();
    if (n <= k || !(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
        throw DegenerateRegression("regression design matrix is rank deficient");
    }
    Eigen::VectorXd const beta = gram.ldlt().solve(x.transpose() * y);

    LinearFit fit;
    fit.coefficients.assign(beta.data(), beta.data() + beta.size());
    double const y_mean = y.mean();
    double const ss_tot = (y.array() - y_mean).square().sum();
    double const ss_res = (y - x * beta).squaredNorm();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

std::vector<RegressionResult> complexity_regression(std::vector<EvalRecord> const& records,
                                                    std::vector<std::string>* notes) {
    std::vector<RegressionResult> results;
    for (Family family : families_present(records)) {
        struct PerMachine {
            double h = 0.0, c = 0.0;
            double min_distortion = INFINITY;
            double min_distance = INFINITY;
        };
        std::map<std::string, PerMachine> machines;
        for (auto const& r : records) {
            if (r.family != family || r.failed) continue;
            auto& m = machines[r.machine_id];
            m.h = r.h_mu;
            m.c = r.c_mu;
            m.min_distortion = std::min(m.min_distortion, r.normalized_distortion_pct);
            if (r.normalized_distance) m.min_distance = std::min(m.min_distance, *r.normalized_distance);
        }
        for (std::string target : {"min_distortion", "min_distance"}) {
            std::vector<std::vector<double>> x;
            std::vector<double> y;
            for (auto const& [id, m] : machines) {
                double const v = target == "min_distortion" ? m.min_distortion : m.min_distance;
                if (!std::isfinite(v)) continue;
                x.push_back({m.h, m.c});
                y.push_back(v);
            }
            std::string const label = std::string(to_string(family)) + "/" + target;
            if (y.size() < 3) {
                if (notes) notes->push_back(label + ": fewer than 3 machines");
                continue;
            }
            try {
                auto const fit = fit_linear(x, y);
                results.push_back({family, target, y.size(), fit.coefficients[0], fit.coefficients[1],
                                   fit.coefficients[2], fit.r_squared});
            } catch (DegenerateRegression const& e) {
                if (notes) notes->push_back(label + ": " + e.what());
            }
        }
    }
    return results;
}

void write_summary_csvs(std::filesystem::path const& dir, SuiteSummary const& summary,
                        std::vector<EvalRecord> const& records) {
    std::filesystem::create_directories(dir);
    auto open = [&](char const* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
        return out;
    };
    auto f = format_double;
    {
        auto out = open("family_stats.csv");
        out << "family,records,failed,machines,mean_distortion_pct,median_distortion_pct,"
               "p90_distortion_pct,max_distortion_pct,distance_records,mean_distance,median_distance,"
               "max_distance,optimized_mean_distortion_pct,optimized_max_distortion_pct,"
               "optimized_mean_distance\n";
        for (auto const& s : summary.families) {
            out << to_string(s.family) << ',' << s.records << ',' << s.failed << ',' << s.machines << ','
                << f(s.mean_distortion) << ',' << f(s.median_distortion) << ',' << f(s.p90_distortion)
                << ',' << f(s.max_distortion) << ',' << s.distance_records << ',' << f(s.mean_distance)
                << ',' << f(s.median_distance) << ',' << f(s.max_distance) << ','
                << f(s.optimized_mean_distortion) << ',' << f(s.optimized_max_distortion) << ','
                << f(s.optimized_mean_distance) << '\n';
        }
    }
    {
        auto out = open("distance_histogram.csv");
        auto const& h = summary.histogram;
        out << "bin_lo,bin_hi";
        for (auto const& [family, counts] : h.counts) out << ',' << to_string(family);
        out << '\n';
        double const width = (h.range.hi - h.range.lo) / static_cast<double>(h.range.bins);
        for (std::size_t i = 0; i <= h.range.bins; ++i) {
            double const lo = h.range.lo + width * static_cast<double>(i);
            out << f(lo) << ',' << (i == h.range.bins ? std::string("inf") : f(lo + width));
            for (auto const& [family, counts] : h.counts) out << ',' << counts[i];
            out << '\n';
        }
    }
    {
        auto out = open("regression.csv");
        out << "family,target,machines,coef_h_mu,coef_c_mu,intercept,r_squared\n";
        for (auto const& r : summary.regressions) {
            out << to_string(r.family) << ',' << r.target << ',' << r.machines << ',' << f(r.coef_h_mu)
                << ',' << f(r.coef_c_mu) << ',' << f(r.intercept) << ',' << f(r.r_squared) << '\n';
        }
    }
    {
        auto out = open("rate_accuracy_points.csv");
        out << "machine_id,family,size,seed,rate_nats,accuracy,normalized_rate,normalized_accuracy,"
               "normalized_distance,normalized_distortion_pct\n";
        auto opt = [&](std::optional<double> const& v) { return v ? f(*v) : std::string(); };
        for (auto const& r : records) {
            if (r.failed) continue;
            out << r.machine_id << ',' << to_string(r.family) << ',' << r.size << ',' << r.seed << ','
                << f(r.rate_nats) << ',' << f(r.accuracy) << ',' << opt(r.normalized_rate) << ','
                << opt(r.normalized_accuracy) << ',' << opt(r.normalized_distance) << ','
                << f(r.normalized_distortion_pct) << '\n';
        }
    }
}

}  // namespace pdfabench
