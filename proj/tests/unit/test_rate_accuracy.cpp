#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pdfabench/catalog.hpp"
#include "pdfabench/error.hpp"
#include "pdfabench/information.hpp"
#include "pdfabench/rate_accuracy.hpp"

#include "../oracles/curve_oracle.hpp"

using namespace pdfabench;
namespace cat = pdfabench::catalog;

namespace {

oracle::ChannelGrid grid_for(Pdfa const& m, int g = 2000) {
    auto pi = stationary_distribution(m);
    auto a = accuracy_matrix(m);
    return oracle::ChannelGrid({pi[0], pi[1]}, {{{a[0][0], a[0][1]}, {a[1][0], a[1][1]}}}, g);
}

}  // namespace

TEST_CASE("accuracy matrix") {
    auto a = accuracy_matrix(cat::even_process(0.5));
    CHECK(a[0] == std::array<double, 2>{0.5, 0.5});
    CHECK(a[1] == std::array<double, 2>{0.0, 1.0});

    auto p = accuracy_matrix(cat::period_two());
    CHECK(p[0] == std::array<double, 2>{0.0, 1.0});
    CHECK(p[1] == std::array<double, 2>{1.0, 0.0});

    auto e = accuracy_matrix(cat::even_process(0.4));
    CHECK(e[0][0] == doctest::Approx(0.6));
    CHECK(e[0][1] == doctest::Approx(0.4));
    CHECK(e[1] == std::array<double, 2>{0.0, 1.0});
}

TEST_CASE("blahut-arimoto") {
    auto m = cat::even_process(0.4);
    auto pi = stationary_distribution(m);
    auto a = accuracy_matrix(m);

    auto zero = ba_solve(pi, a, 0.0);
    CHECK(zero.converged);
    CHECK(zero.rate_nats < 1e-12);
    CHECK(zero.channel[0] == zero.channel[1]);

    auto hot = ba_solve(pi, a, 200.0);
    CHECK(hot.converged);
    CHECK(std::abs(hot.accuracy - 5.0 / 7) < 1e-3);
    CHECK(std::abs(hot.rate_nats - binary_entropy_nats(5.0 / 7)) < 1e-3);

    auto one = ba_solve(pi, a, 1.0);
    REQUIRE(one.converged);
    auto g = grid_for(m);
    CHECK(std::abs(one.rate_nats - g.min_rate_at(one.accuracy)) < 2e-3);

    BaOptions tight{1e-10, 1};
    CHECK_FALSE(ba_solve(pi, a, 5.0, tight).converged);
}

TEST_CASE("monotone in beta") {
    for (auto const& m : {cat::even_process(0.3), cat::even_process(0.4), cat::neven_process(0.3, 0.7)}) {
        auto pi = stationary_distribution(m);
        auto a = accuracy_matrix(m);
        double prev_rate = -1.0;
        double prev_acc = -1.0;
        for (double beta : default_beta_grid()) {
            auto r = ba_solve(pi, a, beta);
            if (!r.converged) continue;
            CHECK(r.accuracy >= prev_acc - 1e-9);
            CHECK(r.rate_nats >= prev_rate - 1e-9);
            prev_acc = r.accuracy;
            prev_rate = r.rate_nats;
        }
    }
}

TEST_CASE("traced curves") {
    SUBCASE("fair coin") {
        auto c = trace_curve(cat::biased_coin(0.5));
        for (auto const& p : c.points) {
            CHECK(p.rate_nats < 1e-9);
            CHECK(p.accuracy == doctest::Approx(0.5));
        }
    }
    SUBCASE("even q=0.5 is flat") {
        auto c = trace_curve(cat::even_process(0.5));
        for (auto const& p : c.points) {
            CHECK(p.rate_nats < 1e-9);
            CHECK(p.accuracy <= 2.0 / 3 + 1e-9);
        }
        CHECK(c.points.back().accuracy == doctest::Approx(2.0 / 3).epsilon(1e-9));
        CHECK(c.augmented_point.accuracy == doctest::Approx(2.0 / 3).epsilon(1e-9));
        CHECK(c.augmented_point.rate_nats == doctest::Approx(0.636514).epsilon(1e-6));
    }
    SUBCASE("even q=0.4 rises between its endpoints") {
        auto c = trace_curve(cat::even_process(0.4));
        REQUIRE(c.points.size() > 3);
        CHECK(c.points.front().rate_nats < 1e-9);
        CHECK(c.points.front().accuracy == doctest::Approx(4.0 / 7).epsilon(1e-12));
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            CHECK(c.points[i].rate_nats > c.points[i - 1].rate_nats);
            CHECK(c.points[i].accuracy > c.points[i - 1].accuracy);
        }
        CHECK(c.points.back().accuracy <= 5.0 / 7 + 1e-9);
        CHECK(c.points.back().accuracy > 5.0 / 7 - 1e-3);
        CHECK(std::abs(c.points.back().rate_nats - 0.598270) < 2e-3);
    }
    SUBCASE("convex rate against accuracy") {
        for (auto const& m : {cat::even_process(0.3), cat::neven_process(0.3, 0.7)}) {
            auto c = trace_curve(m);
            auto const& p = c.points;
            for (std::size_t i = 2; i < p.size(); ++i) {
                double const cross = (p[i - 1].accuracy - p[i - 2].accuracy) * (p[i].rate_nats - p[i - 1].rate_nats) -
                                     (p[i].accuracy - p[i - 1].accuracy) * (p[i - 1].rate_nats - p[i - 2].rate_nats);
                CHECK(cross >= -1e-9);
            }
            CHECK(p.back().accuracy <= summarize(m).optimal_accuracy + 1e-9);
        }
    }
}

TEST_CASE("normalized distance") {
    auto m = cat::even_process(0.4);
    auto c = trace_curve(m);
    auto opt = c.augmented_point;
    auto const& v = c.points[c.points.size() / 2];
    CHECK(normalized_distance({v.rate_nats, v.accuracy}, c, opt) < 1e-12);
    CHECK(normalized_distance(opt, c, opt) < 1e-12);

    RateAccuracyPoint probe{opt.rate_nats, 0.65};
    double const d = normalized_distance(probe, c, opt);
    double const ref = oracle::dense_polyline_distance({1.0, 0.65 / opt.accuracy}, normalized_polyline(c, opt));
    CHECK(d <= ref + 1e-12);
    CHECK(std::abs(d - ref) < 1e-5);

    auto coin = trace_curve(cat::biased_coin(0.3));
    CHECK_THROWS_AS(normalized_distance({0.0, 0.7}, coin, coin.augmented_point), ExcludedMachine);
}

TEST_CASE("normalized distortion") {
    CHECK(normalized_distortion(0.8, 0.8) == 0.0);
    CHECK(normalized_distortion(0.6, 0.8) == doctest::Approx(25.0));
    CHECK(normalized_distortion(4.0 / 7, 5.0 / 7) == doctest::Approx(20.0));
    CHECK(normalized_distortion(1.0, 0.4) == -100.0);
}

TEST_CASE("curve csv") {
    auto c = trace_curve(cat::even_process(0.5));
    std::ostringstream out;
    write_curve_csv(out, c);
    std::string const text = out.str();
    CHECK(text.rfind("beta,rate_nats,accuracy,kind\n", 0) == 0);
    CHECK(text.find(",optimal\n") == text.size() - std::string(",optimal\n").size());
}
