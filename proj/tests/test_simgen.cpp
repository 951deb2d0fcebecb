#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "sfda/errors.hpp"
#include "sfda/simgen.hpp"

using namespace sfda;

TEST_CASE("time grids hit their endpoints exactly")
{
    const auto t1 = case1_times();
    REQUIRE(t1.size() == 50);
    CHECK(t1.front() == 0.0);
    CHECK(t1.back() == 2.0);
    const auto t2 = case2_times();
    REQUIRE(t2.size() == 101);
    CHECK(t2.front() == 1.0);
    CHECK(t2.back() == 21.0);
}

TEST_CASE("signal functions")
{
    CHECK(case2_triangle(11.0) == 6.0);
    CHECK(case2_triangle(5.0) == 0.0);
    CHECK(case2_triangle(17.0) == 0.0);
    CHECK(case2_triangle(9.5) == 4.5);
    CHECK(case2_signal(1, 0.0, 11.0) == 2.0);
    CHECK(case2_signal(2, 0.0, 11.0) == 10.0);
    CHECK(case2_signal(1, 1.0, 11.0) == 6.0);
    CHECK(case1_signal(1, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(case1_signal(2, 0.5, 1.0) == doctest::Approx(0.5 * std::sin(1.02 * std::numbers::pi)));
}

TEST_CASE("noiseless generation with a fixed amplitude")
{
    SimConfig cfg;
    cfg.case_kind = CaseKind::Case1;
    cfg.n = 4;
    cfg.noise_variance = 0.0;
    cfg.fixed_u = 1.0;
    const auto d = generate(cfg);
    const auto& t = d.curves[0].times;
    const auto it = std::find_if(t.begin(), t.end(), [](double x) { return std::abs(x - 0.5) < 0.03; });
    REQUIRE(it != t.end());
    const auto i = static_cast<std::size_t>(it - t.begin());
    CHECK(d.curves[0].values[i] == doctest::Approx(std::sin(t[i] * std::numbers::pi)));
    CHECK(case1_signal(1, 1.0, 0.5) == doctest::Approx(1.0));

    SimConfig c2;
    c2.case_kind = CaseKind::Case2;
    c2.n = 2;
    c2.noise_variance = 0.0;
    c2.fixed_u = 0.0;
    const auto d2 = generate(c2);
    CHECK(d2.curves[0].values[50] == 2.0);  // t = 11
    CHECK(d2.curves[1].values[50] == 10.0);
}

TEST_CASE("noiseless curves respect their envelopes")
{
    SimConfig cfg;
    cfg.n = 200;
    cfg.seed = 3;
    cfg.noise_variance = 0.0;
    cfg.case_kind = CaseKind::Case1;
    const auto d = generate(cfg);
    for (std::size_t a = 0; a < d.curves.size(); ++a) {
        for (double x : d.curves[a].values) {
            CHECK(std::abs(x) <= d.amplitudes[a] + 1e-15);
        }
    }
    cfg.case_kind = CaseKind::Case2;
    const auto d2 = generate(cfg);
    for (const auto& c : d2.curves) {
        CHECK(*std::min_element(c.values.begin(), c.values.end()) >= -4.0);
        CHECK(*std::max_element(c.values.begin(), c.values.end()) <= 10.0);
    }
}

TEST_CASE("amplitude draws follow their uniform laws")
{
    SimConfig cfg;
    cfg.case_kind = CaseKind::Case1;
    cfg.n = 20000;
    cfg.seed = 12;
    const auto d = generate(cfg);
    double g1 = 0.0;
    double g2 = 0.0;
    for (int a = 0; a < 10000; ++a) {
        CHECK(d.true_labels[a] == 1);
        g1 += d.amplitudes[a];
        g2 += d.amplitudes[10000 + a];
        CHECK(d.amplitudes[a] >= 0.3);
        CHECK(d.amplitudes[a] <= 1.3);
    }
    CHECK(std::abs(g1 / 1e4 - 0.8) <= 0.01);
    CHECK(std::abs(g2 / 1e4 - 0.35) <= 0.01);
}

TEST_CASE("Case 1 noise has variance 0.1")
{
    SimConfig cfg;
    cfg.case_kind = CaseKind::Case1;
    cfg.n = 400;
    cfg.seed = 5;
    const auto d = generate(cfg);
    double ss = 0.0;
    double count = 0.0;
    for (std::size_t a = 0; a < d.curves.size(); ++a) {
        const int g = d.true_labels[a];
        for (std::size_t i = 0; i < d.curves[a].times.size(); ++i) {
            const double r = d.curves[a].values[i] - case1_signal(g, d.amplitudes[a], d.curves[a].times[i]);
            ss += r * r;
            count += 1.0;
        }
    }
    CHECK(ss / count == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("generation is a pure function of the config")
{
    SimConfig cfg;
    cfg.case_kind = CaseKind::Case2;
    cfg.n = 20;
    cfg.seed = 99;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    for (std::size_t i = 0; i < a.curves.size(); ++i) {
        CHECK(a.curves[i].values == b.curves[i].values);
        CHECK(a.curves[i].id == b.curves[i].id);
    }
    cfg.seed = 100;
    CHECK(generate(cfg).curves[0].values != a.curves[0].values);
}

TEST_CASE("partition protocol")
{
    SimConfig cfg;
    cfg.seed = 7;
    const auto base = generate(cfg);
    CHECK(std::count(base.true_labels.begin(), base.true_labels.end(), 1) == 300);

    const auto p10 = partition(base, 0.10, 7).partition;
    CHECK(p10.train_labeled.size() == 30);
    CHECK(p10.train_unlabeled.size() == 270);
    CHECK(p10.test.size() == 300);

    std::set<std::size_t> all;
    for (const auto* s : {&p10.train_labeled, &p10.train_unlabeled, &p10.test}) {
        for (auto i : *s) {
            CHECK(all.insert(i).second);
        }
    }
    CHECK(all.size() == 600);

    auto count_class = [&](const std::vector<std::size_t>& idx, int g) {
        return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return base.true_labels[i] == g; });
    };
    CHECK(count_class(p10.test, 1) == 150);
    CHECK(count_class(p10.test, 2) == 150);
    CHECK(count_class(p10.train_labeled, 1) + count_class(p10.train_unlabeled, 1) == 150);

    const auto full = partition(base, 1.0, 7).partition;
    CHECK(full.train_unlabeled.empty());
    CHECK(full.train_labeled.size() == 300);

    const auto again = partition(base, 0.10, 7).partition;
    CHECK(again.train_labeled == p10.train_labeled);
    CHECK(again.test == p10.test);

    // the split does not depend on the fraction, and labeled sets are nested
    const auto p20 = partition(base, 0.20, 7).partition;
    CHECK(p20.test == p10.test);
    for (auto i : p10.train_labeled) {
        CHECK(std::binary_search(p20.train_labeled.begin(), p20.train_labeled.end(), i));
    }

    CHECK_THROWS_AS(partition(base, 0.001, 7), InvalidArgument);
    CHECK_THROWS_AS(partition(base, 0.0, 7), InvalidArgument);
}

TEST_CASE("every class is labeled even at small fractions")
{
    SimConfig cfg;
    const auto base = generate(cfg);
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = partition(base, 0.005, s).partition;
        REQUIRE(p.train_labeled.size() == 2);
        CHECK(base.true_labels[p.train_labeled[0]] != base.true_labels[p.train_labeled[1]]);
    }
}

TEST_CASE("labeled counts use the ceiling")
{
    CHECK(labeled_count(0.05, 300) == 15);
    CHECK(labeled_count(0.10, 300) == 30);
    CHECK(labeled_count(0.30, 300) == 90);
    CHECK(labeled_count(0.60, 300) == 180);
    CHECK(labeled_count(0.70, 300) == 210);
    CHECK(labeled_count(0.101, 300) == 31);
    CHECK(labeled_count(1.0, 300) == 300);
}

TEST_CASE("derived seeds")
{
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(1, i));
    }
    CHECK(seen.size() == 1000);
}
