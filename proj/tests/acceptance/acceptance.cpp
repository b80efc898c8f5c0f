// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.
//   acceptance --group fast   criteria 1-7
//   acceptance --group slow   criteria 8-10 (two full n<=3 suite runs)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pdfabench/catalog.hpp"
#include "pdfabench/enumeration.hpp"
#include "pdfabench/glm.hpp"
#include "pdfabench/harness.hpp"
#include "pdfabench/information.hpp"
#include "pdfabench/lstm.hpp"
#include "pdfabench/reservoir.hpp"

#include "../oracles/curve_oracle.hpp"
#include "../oracles/enumeration_oracle.hpp"

using namespace pdfabench;
namespace cat = pdfabench::catalog;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool ok, std::string const& name, std::string const& detail, double seconds) {
    std::printf("%s %d %s: %s [%.2fs]\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(std::string const& line) {
    std::printf("  info: %s\n", line.c_str());
    std::fflush(stdout);
}

template <typename F>
void criterion(int id, std::string const& name, double budget_s, F&& body) {
    auto const t0 = Clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (std::exception const& e) {
        detail = std::string("exception: ") + e.what();
    }
    double const secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (ok && secs > budget_s) {
        ok = false;
        detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + "s budget)";
    }
    report(id, ok, name, detail, secs);
}

std::string fmt(char const* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(fs::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Pdfa two_state(std::string id, double a_one, int a_on_one, int a_on_zero, double b_one, int b_on_one, int b_on_zero) {
    std::vector<TransitionRow> rows(2);
    rows[0][0] = Transition{a_on_zero, 1.0 - a_one};
    rows[0][1] = Transition{a_on_one, a_one};
    rows[1][0] = Transition{b_on_zero, 1.0 - b_one};
    rows[1][1] = Transition{b_on_one, b_one};
    return Pdfa(std::move(id), rows);
}

// ---------------------------------------------------------------------------

bool closed_form(std::string& detail) {
    auto const s = summarize(cat::even_process(0.5));
    double const h = 2.0 / 3 * std::log(2.0);
    double const c = std::log(3.0) - 2.0 / 3 * std::log(2.0);
    double err = std::max({std::abs(s.pi[0] - 2.0 / 3), std::abs(s.pi[1] - 1.0 / 3), std::abs(s.entropy_rate_nats - h),
                           std::abs(s.statistical_complexity_nats - c), std::abs(s.optimal_accuracy - 2.0 / 3)});
    detail = fmt("pi=(%.12f, %.12f) h=%.9f C=%.9f A_opt=%.12f max err %.1e", s.pi[0], s.pi[1], s.entropy_rate_nats,
                 s.statistical_complexity_nats, s.optimal_accuracy, err);
    return err < 1e-9 && std::abs(h - 0.462098) < 5e-7 && std::abs(c - 0.636514) < 5e-7;
}

bool ba_oracle(std::string& detail) {
    std::vector<Pdfa> machines{cat::even_process(0.3), cat::even_process(0.4), cat::even_process(0.5),
                               two_state("markov(0.3,0.8)", 0.3, 1, 0, 0.8, 1, 0),
                               two_state("swap(0.65,0.1)", 0.65, 0, 1, 0.1, 1, 0)};
    double worst_gap = 0.0;
    double worst_staircase = 0.0;
    double worst_zero = 0.0;
    bool monotone = true;
    bool convex = true;
    std::size_t points = 0;
    for (auto const& m : machines) {
        if (!validate(m).ok()) throw std::runtime_error(m.machine_id() + " is not a valid minimal machine");
        auto const pi = stationary_distribution(m);
        auto const a = accuracy_matrix(m);
        auto const betas = default_beta_grid();
        auto const curve = trace_curve(m, pi, betas);
        oracle::ChannelGrid grid({pi[0], pi[1]}, {{{a[0][0], a[0][1]}, {a[1][0], a[1][1]}}}, 2000);
        for (auto const& p : curve.points) {
            double const ref = grid.envelope_rate_at(p.accuracy);
            worst_gap = std::max(worst_gap, std::abs(p.rate_nats - ref));
            worst_staircase = std::max(worst_staircase, std::abs(p.rate_nats - grid.min_rate_at(p.accuracy - 1e-12)));
            ++points;
            if (p.beta == 0.0) worst_zero = std::max(worst_zero, p.rate_nats);
        }
        double prev_acc = -1, prev_rate = -1;
        for (double beta : betas) {
            auto const r = ba_solve(pi, a, beta);
            if (!r.converged) continue;
            if (r.accuracy < prev_acc - 1e-9 || r.rate_nats < prev_rate - 1e-9) monotone = false;
            prev_acc = r.accuracy;
            prev_rate = r.rate_nats;
        }
        auto const& p = curve.points;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i].accuracy < p[i - 1].accuracy || p[i].rate_nats < p[i - 1].rate_nats - 1e-9) monotone = false;
        for (std::size_t i = 2; i < p.size(); ++i) {
            double const cross = (p[i - 1].accuracy - p[i - 2].accuracy) * (p[i].rate_nats - p[i - 1].rate_nats) -
                                 (p[i].accuracy - p[i - 1].accuracy) * (p[i - 1].rate_nats - p[i - 2].rate_nats);
            if (cross < -1e-9) convex = false;
        }
        if (p.back().accuracy > curve.augmented_point.accuracy + 1e-9) monotone = false;
    }
    info(fmt("grid staircase without time-sharing: max |R_BA - R_grid| = %.2e nats", worst_staircase));
    detail = fmt("%zu points on 5 machines, max |R_BA - R_grid| = %.2e nats, beta=0 rate %.1e, monotone %s, "
                 "convex %s",
                 points, worst_gap, worst_zero, monotone ? "yes" : "no", convex ? "yes" : "no");
    return worst_gap < 2e-3 && worst_zero < 1e-9 && monotone && convex;
}

bool degeneracy(std::string& detail) {
    auto const c = trace_curve(cat::even_process(0.5));
    double max_rate = 0.0;
    for (auto const& p : c.points) max_rate = std::max(max_rate, p.rate_nats);
    double const top = c.points.back().accuracy;
    double const r_opt = std::log(3.0) - 2.0 / 3 * std::log(2.0);
    detail = fmt("curve max rate %.1e up to accuracy %.9f; optimal point (%.9f, %.9f)", max_rate, top,
                 c.augmented_point.rate_nats, c.augmented_point.accuracy);
    return max_rate < 1e-6 && std::abs(top - 2.0 / 3) < 1e-6 && std::abs(c.augmented_point.rate_nats - r_opt) < 1e-6 &&
           std::abs(c.augmented_point.rate_nats - 0.6365) < 1e-4 && std::abs(c.augmented_point.accuracy - 2.0 / 3) < 1e-6;
}

bool enumeration_counts(std::string& detail) {
    std::size_t counts[5] = {};
    std::size_t burnside[5] = {};
    bool agree = true;
    for (int n = 1; n <= 4; ++n) {
        counts[n] = enumerate_topologies(n).size();
        burnside[n] = oracle::burnside_count(n);
        agree = agree && counts[n] == burnside[n];
    }
    detail = fmt("n=1..4: %zu, %zu, %zu, %zu (orbit-count oracle %zu, %zu, %zu, %zu); n=4 vs 1,338: %+ld, vs 1,388: %+ld",
                 counts[1], counts[2], counts[3], counts[4], burnside[1], burnside[2], burnside[3], burnside[4],
                 static_cast<long>(counts[4]) - 1338, static_cast<long>(counts[4]) - 1388);
    if (counts[4] == 1388) info("n=4 count equals the published 1,388 figure and not the 1,338 one");
    return counts[1] == 3 && agree;
}

bool gradient_check(std::string& detail) {
    auto const xs = sample_sequence(cat::neven_process(0.4, 0.7), 20, 5).symbols;
    double const h = 1e-5;
    double worst = 0.0;
    auto params = lstm_init(3, 2024, 0.5);
    for (CellOutput cell : {CellOutput::identity, CellOutput::tanh}) {
        params.set_cell_output(cell);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.flat().size());
        auto state = LstmState::zeros(3);
        lstm_window_loss(params, xs, state, &grad);
        for (Eigen::Index i = 0; i < params.flat().size(); ++i) {
            LstmParams plus = params, minus = params;
            plus.flat()(i) += h;
            minus.flat()(i) -= h;
            auto s1 = LstmState::zeros(3), s2 = LstmState::zeros(3);
            double const num =
                (lstm_window_loss(plus, xs, s1, nullptr) - lstm_window_loss(minus, xs, s2, nullptr)) / (2 * h);
            double const scale = std::max({std::abs(num), std::abs(grad(i)), 1e-6});
            worst = std::max(worst, std::abs(num - grad(i)) / scale);
        }
    }
    detail = fmt("%ld parameters, both cell outputs, max relative error %.2e", static_cast<long>(params.flat().size()),
                 worst);
    return worst < 1e-4;
}

bool capacity(std::string& detail) {
    double const s = 20.0;
    LstmParams p(1);
    p.bias(Gate::forget)(0) = -s;
    p.input_weights(Gate::input)(0) = s;
    p.recurrent(Gate::input)(0, 0) = -s;
    p.bias(Gate::input)(0) = -0.5 * s;
    p.bias(Gate::cell)(0) = s;
    p.bias(Gate::output)(0) = s;
    p.readout_weights()(0) = s;
    p.readout_bias() = std::log(0.4 / 0.6);
    auto const even = cat::even_process(0.4);
    auto const seq = sample_sequence(even, 200'000, 31);
    LstmPredictor lstm(p);
    auto const ev = evaluate_stream(lstm, seq.symbols, 100'000);
    double const a_opt = 5.0 / 7;
    double const gap = 100.0 * std::abs(ev.accuracy - a_opt) / a_opt;
    p.set_cell_output(CellOutput::tanh);
    auto const ev_tanh = evaluate_stream(LstmPredictor(p), seq.symbols, 100'000);
    info(fmt("same weights with h = o * tanh(c): accuracy %.5f (%.3f%% off)", ev_tanh.accuracy,
             100.0 * std::abs(ev_tanh.accuracy - a_opt) / a_opt));

    auto const m = cat::neven_process(0.3, 0.7);
    auto const xs = sample_sequence(m, 3000, 12).symbols;
    int const k = 6;
    GlmPredictor glm(k);
    glm.train(std::span<Symbol const>(xs).first(1500));
    double const a = 1.0, c = std::tanh(a);
    ReservoirParams rp{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(k), 0.0};
    rp.input(0) = a;
    for (int j = 1; j < k; ++j) rp.recurrence(j, j - 1) = a / c;
    ReservoirPredictor rc(rp);
    LogisticReadout readout;
    readout.weights.resize(k);
    for (int j = 0; j < k; ++j) readout.weights(j) = glm.readout().weights(k - 1 - j) / c;
    readout.bias = glm.readout().bias;
    rc.set_readout(readout);
    auto const test = std::span<Symbol const>(xs).subspan(1500, 1000);
    auto const pg = glm.predict_proba(test);
    auto const pr = rc.predict_proba(test);
    double worst = 0.0;
    for (std::size_t t = k; t < test.size(); ++t) worst = std::max(worst, std::abs(pg[t] - pr[t]));
    detail = fmt("one-node LSTM accuracy %.5f vs A_opt %.5f (%.3f%% off); shift-register reservoir max |dp| %.1e",
                 ev.accuracy, a_opt, gap, worst);
    return gap < 1.0 && worst < 1e-9;
}

std::vector<Pdfa> suite_library() { return build_library(3, 1, 0); }

ProtocolConfig suite_protocol() {
    ProtocolConfig p;
    p.families = {Family::glm, Family::reservoir, Family::lstm, Family::oracle};
    return p;
}

bool check_oracle_floor(std::vector<EvalRecord> const& records, std::string& detail) {
    double const n_test = 2500.0;
    double worst_z = 0.0, worst_dist = 0.0;
    std::size_t n = 0, over_se = 0, over_dist = 0;
    bool ok = true;
    for (auto const& r : records) {
        if (r.family != Family::oracle) continue;
        ++n;
        // Binomial standard error of test accuracy, in distortion percent.
        double const se = 100.0 * std::sqrt(r.a_opt * (1.0 - r.a_opt) / n_test) / r.a_opt;
        double const z = se > 0 ? std::abs(r.normalized_distortion_pct) / se : std::abs(r.normalized_distortion_pct) * INFINITY;
        double const dist = r.normalized_distance.value_or(INFINITY);
        worst_z = std::max(worst_z, std::isnan(z) ? 0.0 : z);
        worst_dist = std::max(worst_dist, dist);
        bool const bad_se = r.failed || z > 2.0;
        bool const bad_dist = !(dist < 0.05);
        over_se += bad_se;
        over_dist += bad_dist;
        if (bad_se || bad_dist) {
            ok = false;
            info(fmt("%s: distortion %.3f%% (%.2f SE) distance %.4f R_opt %.4f nats, predicted-symbol rate %.4f nats",
                     r.machine_id.c_str(), r.normalized_distortion_pct, z, dist, r.r_opt, r.rate_nats));
        }
    }
    detail = fmt("%zu machines, max |distortion| %.2f SE (%zu over 2), max distance %.4f (%zu over 0.05)", n, worst_z,
                 over_se, worst_dist, over_dist);
    return ok && n > 0;
}

bool oracle_floor(fs::path const& work, std::string& detail) {
    auto p = suite_protocol();
    p.families = {Family::oracle};
    auto const store_path = work / "oracle_records.jsonl";
    fs::remove(store_path);
    RecordStore store(store_path);
    auto const rep = run_suite(suite_library(), p, store, {});
    info(fmt("%zu zero-rate machines excluded (listed in %s)", rep.skipped_machines.size(),
             skip_log_path(store_path).string().c_str()));
    return check_oracle_floor(store.records(), detail);
}

// ---------------------------------------------------------------------------

struct SuiteRun {
    std::vector<EvalRecord> records;
    double seconds = 0.0;
    std::string bytes;
};

SuiteRun full_suite(fs::path const& store_path, int jobs) {
    fs::remove(store_path);
    fs::remove(skip_log_path(store_path));
    RecordStore store(store_path);
    SuiteOptions opts;
    opts.jobs = jobs;
    opts.progress = [](std::size_t done, std::size_t total, std::string const& id) {
        if (done % 10 == 0 || done == total) std::fprintf(stderr, "  suite: %zu/%zu machines (%s)\n", done, total, id.c_str());
    };
    auto const t0 = Clock::now();
    run_suite(suite_library(), suite_protocol(), store, opts);
    SuiteRun run;
    run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    run.records = store.records();
    run.bytes = slurp(store_path);
    return run;
}

void slow_group(fs::path const& work, int jobs) {
    auto const first = full_suite(work / "suite_records.jsonl", jobs);
    auto const summary = aggregate(first.records);
    write_summary_csvs(work / "summary", summary, first.records);

    std::map<Family, FamilyStats> stats;
    for (auto const& s : summary.families) stats[s.family] = s;
    for (auto const& [f, s] : stats) {
        info(fmt("%-9s records %zu failed %zu machines %zu | pooled mean %.2f%% | optimized mean %.2f%% max %.2f%% | "
                 "mean distance %.4f",
                 std::string(to_string(f)).c_str(), s.records, s.failed, s.machines, s.mean_distortion,
                 s.optimized_mean_distortion, s.optimized_max_distortion, s.mean_distance));
    }
    for (auto const& r : summary.regressions)
        info(fmt("regression %s %s: R^2 %.3f (h_mu %.3f, C_mu %.3f, intercept %.3f)", std::string(to_string(r.family)).c_str(),
                 r.target.c_str(), r.r_squared, r.coef_h_mu, r.coef_c_mu, r.intercept));
    for (Family f : {Family::glm, Family::reservoir, Family::lstm}) {
        auto const grid = ProtocolConfig::default_grids().at(f);
        double lo = 0, hi = 0;
        std::size_t nlo = 0, nhi = 0;
        for (auto const& r : first.records) {
            if (r.family != f || r.failed) continue;
            if (r.size == grid.front()) lo += r.normalized_distortion_pct, ++nlo;
            if (r.size == grid.back()) hi += r.normalized_distortion_pct, ++nhi;
        }
        info(fmt("%s mean distortion at size %d: %.2f%%, at size %d: %.2f%%", std::string(to_string(f)).c_str(),
                 grid.front(), nlo ? lo / nlo : 0.0, grid.back(), nhi ? hi / nhi : 0.0));
    }

    // Reference averages cover every trained model; the per-machine best
    // sizes are reported separately as worst cases, so pooled means are judged.
    double const g = stats[Family::glm].mean_distortion;
    double const rc = stats[Family::reservoir].mean_distortion;
    double const l = stats[Family::lstm].mean_distortion;
    auto within = [](double v, double ref) { return v >= ref / 3 && v <= ref * 3; };
    bool const no_nan = std::all_of(first.records.begin(), first.records.end(), [](EvalRecord const& r) {
        return std::isfinite(r.accuracy) && std::isfinite(r.rate_nats);
    });
    report(8,
           l <= rc && rc <= g && within(l, 3.9) && within(rc, 4.0) && within(g, 6.5) && no_nan &&
               first.seconds < 2 * 3600.0,
           "protocol reproduction",
           fmt("%zu records in %.0fs; pooled mean distortion LSTM %.2f%% <= RC %.2f%% <= GLM %.2f%% (reference "
               "3.9/4.0/6.5, factor-3 band), finite %s",
               first.records.size(), first.seconds, l, rc, g, no_nan ? "yes" : "no"),
           first.seconds);

    {
        std::map<std::string, std::map<Family, std::vector<EvalRecord>>> by_machine;
        for (auto const& r : first.records) by_machine[r.machine_id][r.family].push_back(r);
        double best_gap = -INFINITY;
        std::string where;
        for (auto& [id, fam] : by_machine) {
            auto g = select_best(fam[Family::glm]);
            auto l = select_best(fam[Family::lstm]);
            if (!g || !l) continue;
            double const gap = fam[Family::glm][*g].normalized_distortion_pct - fam[Family::lstm][*l].normalized_distortion_pct;
            if (gap > best_gap) best_gap = gap, where = id;
        }
        report(9, best_gap >= 5.0, "hard instances",
               fmt("largest best-GLM minus best-LSTM distortion %.2f points on %s", best_gap, where.c_str()), 0.0);
    }

    std::string oracle_detail;
    bool const oracle_ok = check_oracle_floor(first.records, oracle_detail);
    info("oracle floor inside the full suite: " + oracle_detail + (oracle_ok ? "" : " (violated)"));

    auto const second = full_suite(work / "suite_records_rerun.jsonl", jobs);
    bool const same = !first.bytes.empty() && first.bytes == second.bytes;
    report(10, same, "determinism",
           fmt("two suite runs (%zu bytes each, %.0fs and %.0fs) are %s", first.bytes.size(), first.seconds,
               second.seconds, same ? "byte-identical" : "different"),
           second.seconds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string group = "fast";
    std::string work = "acceptance_work";
    int jobs = 1;
    app.add_option("--group", group, "fast | slow | all")->check(CLI::IsMember({"fast", "slow", "all"}));
    app.add_option("--work", work, "scratch directory for record stores");
    app.add_option("--jobs", jobs, "worker threads for suite runs");
    CLI11_PARSE(app, argc, argv);

    fs::path const dir(work);
    fs::create_directories(dir);
    if (group == "fast" || group == "all") {
        criterion(1, "closed-form statistics", 1.0, closed_form);
        criterion(2, "blahut-arimoto oracle equivalence", 60.0, ba_oracle);
        criterion(3, "even q=0.5 degeneracy", 1.0, degeneracy);
        criterion(4, "enumeration counts", 300.0, enumeration_counts);
        criterion(5, "lstm gradient check", 10.0, gradient_check);
        criterion(6, "capacity constructions", 60.0, capacity);
        criterion(7, "oracle predictor floor", 600.0, [&](std::string& d) { return oracle_floor(dir, d); });
    }
    if (group == "slow" || group == "all") slow_group(dir, jobs);
    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
