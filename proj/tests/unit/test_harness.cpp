#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdfabench/catalog.hpp"
#include "pdfabench/error.hpp"
#include "pdfabench/harness.hpp"

using namespace pdfabench;
namespace cat = pdfabench::catalog;
namespace fs = std::filesystem;

namespace {

fs::path scratch(std::string const& name) {
    auto dir = fs::temp_directory_path() / ("pdfabench_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(fs::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ProtocolConfig tiny_protocol() {
    ProtocolConfig p;
    p.sequence_length = 600;
    p.grids[Family::glm] = {1, 2};
    p.grids[Family::reservoir] = {1, 3};
    p.grids[Family::lstm] = {1};
    p.lstm.epochs = 2;
    return p;
}

EvalRecord with_distortion(std::string id, Family f, int size, double d) {
    EvalRecord r;
    r.machine_id = std::move(id);
    r.family = f;
    r.size = size;
    r.normalized_distortion_pct = d;
    return r;
}

}  // namespace

TEST_CASE("protocol defaults and checks") {
    ProtocolConfig p;
    CHECK(p.sequence_length == 5000);
    CHECK(p.train_fraction == 0.5);
    CHECK(p.train_length() == 2500);
    CHECK(p.grids.at(Family::glm).size() == 10);
    CHECK(p.grids.at(Family::reservoir).back() == 61);
    CHECK(p.grids.at(Family::lstm).back() == 121);
    CHECK_NOTHROW(p.check());

    p.train_fraction = 1.0;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
    p.train_fraction = 0.9;
    p.sequence_length = 19;
    CHECK_THROWS_AS(p.check(), std::invalid_argument);
    p.sequence_length = 20;
    CHECK_NOTHROW(p.check());
}

TEST_CASE("record lines round trip") {
    auto ctx = prepare_machine(cat::even_process(0.4), ProtocolConfig{});
    ProtocolConfig p;
    auto r = run_single(ctx, Family::glm, 3, p, 0);
    auto line = record_to_json_line(r);
    CHECK(line.rfind("{\"schema_version\":1,", 0) == 0);
    auto back = record_from_json_line(line);
    CHECK(record_to_json_line(back) == line);
    CHECK(back.key() == r.key());
    CHECK(back.accuracy == r.accuracy);
    CHECK(normalized_distortion(back.accuracy, back.a_opt) == back.normalized_distortion_pct);

    CHECK_THROWS_AS(record_from_json_line("{\"schema_version\":2}"), ParseError);
    CHECK_THROWS_AS(record_from_json_line("nope"), ParseError);
}

TEST_CASE("single runs") {
    ProtocolConfig p;
    auto even = prepare_machine(cat::even_process(0.4), p);
    auto oracle = run_single(even, Family::oracle, 1, p, 0);
    CHECK(std::abs(oracle.normalized_distortion_pct) <= 2.0);
    REQUIRE(oracle.normalized_distance);
    CHECK(*oracle.normalized_distance < 0.05);

    auto p2 = prepare_machine(cat::period_two(), p);
    auto glm = run_single(p2, Family::glm, 1, p, 0);
    CHECK(glm.accuracy >= 0.99);
    CHECK(glm.normalized_distortion_pct <= 1.0);

    auto coin = prepare_machine(cat::biased_coin(0.3), p);
    CHECK(coin.zero_rate());
    auto c = run_single(coin, Family::glm, 1, p, 0);
    CHECK_FALSE(c.normalized_distance);
    CHECK_FALSE(c.normalized_rate);

    CHECK(record_to_json_line(run_single(even, Family::reservoir, 6, p, 1)) ==
          record_to_json_line(run_single(even, Family::reservoir, 6, p, 1)));
}

TEST_CASE("sweeps") {
    ProtocolConfig p;
    auto even = prepare_machine(cat::even_process(0.4), p);
    std::vector<int> grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    auto sweep = sweep_family(even, Family::glm, grid, p, 0);
    REQUIRE(sweep.records.size() == 10);
    REQUIRE(sweep.best);
    double lowest = sweep.records.front().normalized_distortion_pct;
    for (auto const& r : sweep.records) {
        CHECK(r.normalized_distortion_pct <= lowest + 2.0);
        lowest = std::min(lowest, r.normalized_distortion_pct);
    }

    auto one = sweep_family(even, Family::glm, {4}, p, 0);
    CHECK(one.best == std::optional<std::size_t>{0});

    auto p2 = prepare_machine(cat::period_two(), p);
    auto best = sweep_family(p2, Family::glm, {1}, p, 0);
    CHECK(best.records[*best.best].normalized_distortion_pct <= 1.0);

    CHECK_THROWS_AS(sweep_family(even, Family::glm, {}, p, 0), std::invalid_argument);
}

TEST_CASE("best-record selection") {
    std::vector<EvalRecord> rs{with_distortion("m", Family::glm, 3, 5.0), with_distortion("m", Family::glm, 1, 5.0),
                               with_distortion("m", Family::glm, 2, 7.0)};
    CHECK(select_best(rs) == std::optional<std::size_t>{1});
    rs[1].failed = true;
    CHECK(select_best(rs) == std::optional<std::size_t>{0});
    for (auto& r : rs) r.failed = true;
    CHECK_FALSE(select_best(rs));

    std::vector<EvalRecord> tie{with_distortion("m", Family::glm, 1, 5.0), with_distortion("m", Family::glm, 1, 5.0)};
    tie[0].rate_nats = 0.3;
    tie[1].rate_nats = 0.1;
    CHECK(select_best(tie) == std::optional<std::size_t>{1});
}

TEST_CASE("suite bookkeeping") {
    auto dir = scratch("suite");
    auto p = tiny_protocol();
    std::vector<Pdfa> lib{cat::even_process(0.4), cat::neven_process(0.3, 0.7)};
    RecordStore store(dir / "records.jsonl");
    auto first = run_suite(lib, p, store, {});
    CHECK(first.computed == 2 * (2 + 2 + 1));
    CHECK(first.reused == 0);
    std::set<std::pair<std::string, Family>> sweeps;
    for (auto const& r : store.records()) sweeps.insert({r.machine_id, r.family});
    CHECK(sweeps.size() == 2 * 3);

    auto const bytes = slurp(store.path());
    RecordStore again(dir / "records.jsonl");
    auto second = run_suite(lib, p, again, {});
    CHECK(second.computed == 0);
    CHECK(second.reused == first.computed);
    CHECK(slurp(store.path()) == bytes);

    SUBCASE("parallel run writes the same bytes") {
        RecordStore par(dir / "parallel.jsonl");
        SuiteOptions o;
        o.jobs = 4;
        run_suite(lib, p, par, o);
        CHECK(slurp(par.path()) == bytes);
    }

    SUBCASE("interrupted runs resume to the same bytes") {
        for (std::size_t cut : {1u, 4u, 7u}) {
            auto path = dir / ("resumed_" + std::to_string(cut) + ".jsonl");
            {
                RecordStore s(path);
                SuiteOptions o;
                o.max_new_records = cut;
                auto rep = run_suite(lib, p, s, o);
                CHECK(rep.interrupted);
                CHECK(rep.computed == cut);
            }
            // A torn trailing line from a crash mid-write is dropped on reload.
            std::ofstream(path, std::ios::binary | std::ios::app) << "{\"schema_version\":1,\"machi";
            RecordStore s(path);
            CHECK(s.records().size() == cut);
            run_suite(lib, p, s, {});
            CHECK(slurp(path) == bytes);
        }
    }
}

TEST_CASE("zero-rate machines are skipped and logged") {
    auto dir = scratch("skip");
    auto p = tiny_protocol();
    p.families = {Family::glm};
    std::vector<Pdfa> lib{cat::biased_coin(0.3), cat::even_process(0.4)};
    RecordStore store(dir / "records.jsonl");
    auto rep = run_suite(lib, p, store, {});
    CHECK(rep.skipped_machines == std::vector<std::string>{cat::biased_coin(0.3).machine_id()});
    for (auto const& r : store.records()) CHECK(r.machine_id != cat::biased_coin(0.3).machine_id());
    auto log = slurp(skip_log_path(store.path()));
    CHECK(log.find(cat::biased_coin(0.3).machine_id()) != std::string::npos);
}

TEST_CASE("aggregation") {
    auto one = aggregate({with_distortion("m", Family::glm, 1, 5.0)});
    REQUIRE(one.families.size() == 1);
    CHECK(one.families[0].mean_distortion == doctest::Approx(5.0));

    auto two = aggregate({with_distortion("a", Family::glm, 1, 0.0), with_distortion("b", Family::glm, 1, 10.0)});
    CHECK(two.families[0].mean_distortion == doctest::Approx(5.0));
    CHECK(two.families[0].machines == 2);

    std::vector<EvalRecord> rs{with_distortion("a", Family::lstm, 1, 8.0), with_distortion("a", Family::lstm, 2, 2.0),
                               with_distortion("b", Family::lstm, 1, 4.0), with_distortion("b", Family::lstm, 2, 6.0),
                               with_distortion("b", Family::lstm, 3, 50.0)};
    rs[0].normalized_distance = 0.01;
    rs[1].normalized_distance = 0.2;
    rs[2].normalized_distance = 0.7;
    rs[4].failed = true;
    auto s = aggregate(rs, {0.0, 0.5, 5});
    auto const& st = s.families[0];
    CHECK(st.records == 5);
    CHECK(st.failed == 1);
    CHECK(st.mean_distortion == doctest::Approx(5.0));
    CHECK(st.optimized_mean_distortion == doctest::Approx(3.0));
    CHECK(st.optimized_max_distortion == doctest::Approx(4.0));
    auto const& counts = s.histogram.counts.at(Family::lstm);
    REQUIRE(counts.size() == 6);
    CHECK(counts[0] == 1);
    CHECK(counts[2] == 1);
    CHECK(counts[5] == 1);
    std::size_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == st.distance_records);
}

TEST_CASE("linear regression") {
    std::vector<std::vector<double>> x{{0.1, 0.5}, {0.3, 0.2}, {0.6, 0.9}, {0.2, 0.7}, {0.5, 0.1}};
    std::vector<double> y;
    for (auto const& row : x) y.push_back(2 * row[0] + 3 * row[1] + 1);
    auto fit = fit_linear(x, y);
    CHECK(std::abs(fit.coefficients[0] - 2) < 1e-9);
    CHECK(std::abs(fit.coefficients[1] - 3) < 1e-9);
    CHECK(std::abs(fit.coefficients[2] - 1) < 1e-9);
    CHECK(std::abs(fit.r_squared - 1) < 1e-9);

    std::vector<double> flat(5, 4.0);
    CHECK(fit_linear(x, flat).r_squared == 0.0);

    std::vector<std::vector<double>> same(5, {0.3, 0.3});
    CHECK_THROWS_AS(fit_linear(same, y), DegenerateRegression);

    std::vector<EvalRecord> rs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto r = with_distortion("m" + std::to_string(i), Family::glm, 1, y[i]);
        r.h_mu = x[i][0];
        r.c_mu = x[i][1];
        rs.push_back(r);
    }
    std::vector<std::string> notes;
    auto regs = complexity_regression(rs, &notes);
    REQUIRE(regs.size() == 1);
    CHECK(regs[0].target == "min_distortion");
    CHECK(regs[0].r_squared == doctest::Approx(1.0));
    CHECK(notes.size() == 1);  // no distances recorded
}

TEST_CASE("summary csvs") {
    auto dir = scratch("csv");
    std::vector<EvalRecord> rs{with_distortion("a", Family::glm, 1, 3.0)};
    auto s = aggregate(rs);
    write_summary_csvs(dir, s, rs);
    for (auto name : {"family_stats.csv", "distance_histogram.csv", "regression.csv", "rate_accuracy_points.csv"})
        CHECK(fs::exists(dir / name));
    CHECK(slurp(dir / "family_stats.csv").find("glm,1,0,1,3,") != std::string::npos);
}
