#include <cmath>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "tension_lab/error.hpp"
#include "tension_lab/superadditive.hpp"
#include "tension_lab/surface_tension.hpp"

using namespace tension_lab;

namespace {

const Field kZero{FieldSpec::zero()};

double ln_binomial(int n, int k) { return std::log(oracle::binomial(n, k).convert_to<double>()); }

}  // namespace

TEST_CASE("process_F") {
    CHECK(process_F(Box({0}, {9}), kZero, Slope::zero(1)) == doctest::Approx(ln_binomial(8, 4)));
    const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, 3});
    CHECK(process_F(Box({2, 5}, {3, 6}), f, Slope({0.3, 0.1})) == 0.0);
    const auto hb = canonical_boundary(Box::cube(2, 3), Slope({0.5, 0.5}));
    CHECK(process_F(Box::cube(2, 3), f, Slope({0.5, 0.5})) ==
          doctest::Approx(oracle::log_sum_exp(oracle::brute_force_fixed(hb, f.weights()).energies)));
}

TEST_CASE("translation compatibility") {
    CHECK_FALSE(translation_compatible(std::vector<int>{2, 0}, Slope({0.5, 0.25})));  // s.u = 1, |u| = 2
    CHECK(translation_compatible(std::vector<int>{4, 0}, Slope({0.5, 0.25})));
    CHECK(translation_compatible(std::vector<int>{1, 2}, Slope({0.5, 0.25})));
    CHECK_FALSE(translation_compatible(std::vector<int>{1, 0}, Slope({0.5, 0.25})));
    CHECK(translation_compatible(std::vector<int>{1, 1}, Slope::zero(2)));
    CHECK_FALSE(translation_compatible(std::vector<int>{1, 0}, Slope::zero(2)));

    std::mt19937_64 rng(17);
    const std::vector<Slope> slopes{Slope({0.5, 0.25}), Slope({0.0, 0.0}), Slope({-0.75, 0.5}), Slope({0.25, 0.5})};
    int checked = 0;
    while (checked < 20) {
        const Slope& s = slopes[rng() % slopes.size()];
        const std::vector<int> u{static_cast<int>(rng() % 9) - 4, static_cast<int>(rng() % 9) - 4};
        if (!translation_compatible(u, s)) continue;
        const std::vector<int> lo{static_cast<int>(rng() % 5) - 2, static_cast<int>(rng() % 5) - 2};
        const Box b(lo, {lo[0] + 2 + static_cast<int>(rng() % 4), lo[1] + 2 + static_cast<int>(rng() % 4)});
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.8, 2, 1, rng()});
        const auto c = translation_check(b, u, f, s);
        CHECK(c.applicable);
        CHECK(c.shifted_box == doctest::Approx(c.shifted_field).epsilon(1e-13));
        ++checked;
    }
}

TEST_CASE("partitions") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Box parent = Box::cube(1 + trial % 3, 4);
        const auto p = random_partition(parent, rng, 4);
        CHECK_NOTHROW(p.validate());
    }
    BoxPartition bad{Box({0}, {4}), {Box({0}, {2}), Box({1}, {4})}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    BoxPartition gap{Box({0}, {4}), {Box({0}, {2})}};
    CHECK_THROWS_AS(gap.validate(), ValidationError);
}

TEST_CASE("superadditivity defect") {
    SUBCASE("1D zero field: binomial counts on both sides") {
        for (int cut = 1; cut < 9; ++cut) {
            const BoxPartition p{Box({0}, {9}), {Box({0}, {cut}), Box({cut}, {9})}};
            const auto r = superadditivity_defect(p, kZero, Slope::zero(1));
            // Canonical data at s = 0 is the parity pattern.
            auto ln_count = [](int len, int a, int b) {
                const int steps = len - 1, diff = std::abs(b - a);
                if (steps == 0) return 0.0;
                return std::log(oracle::binomial(steps, (steps + diff) / 2).convert_to<double>());
            };
            const double expected = ln_count(9, 0, 0) - ln_count(cut, 0, (cut - 1) % 2) - ln_count(9 - cut, cut % 2, 0);
            CHECK(r.defect == doctest::Approx(expected).epsilon(1e-12));
            CHECK(r.defect >= 0.0);
        }
    }
    SUBCASE("trivial partition") {
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.6, 2, 1, 5});
        const BoxPartition p{Box::cube(2, 4), {Box::cube(2, 4)}};
        const auto r = superadditivity_defect(p, f, Slope({0.2, 0.1}));
        CHECK(r.defect == doctest::Approx(2 * 0.6 * 12));
    }
    SUBCASE("S_4 into four S_2 blocks, seeded field; strict mode") {
        const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, 99});
        const BoxPartition p{Box::cube(2, 4),
                             {Box({0, 0}, {2, 2}), Box({0, 2}, {2, 4}), Box({2, 0}, {4, 2}), Box({2, 2}, {4, 4})}};
        const auto r = superadditivity_defect(p, f, Slope::zero(2));
        CHECK(r.defect >= 0.0);
        CHECK(r.boundary_sites == 16);
        const auto strict = superadditivity_defect(p, f, Slope::zero(2), true);
        CHECK(strict.A <= r.A);
        CHECK(strict.defect >= 0.0);
    }
    SUBCASE("random partitions") {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(-0.9, 0.9);
        for (int trial = 0; trial < 30; ++trial) {
            const int m = 1 + trial % 2;
            const Box parent = Box::cube(m, m == 1 ? 10 : 5);
            std::vector<double> sv(m);
            for (auto& x : sv) x = u(rng);
            const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, rng()});
            const auto r = superadditivity_defect(random_partition(parent, rng), f, Slope(sv));
            CHECK(r.defect >= 0.0);
        }
    }
}

TEST_CASE("wiener cover") {
    SUBCASE("unit boxes select everything") {
        CoverInstance inst;
        for (int i = 0; i < 10; ++i) {
            inst.W.push_back({i});
            inst.n.push_back(1);
        }
        const auto r = wiener_cover(inst, 1);
        CHECK(r.selected.size() == 10);
        CHECK(r.bound == 30);
        CHECK(r.pass());
    }
    SUBCASE("n = 2 picks the even sites") {
        CoverInstance inst;
        for (int i = 0; i < 10; ++i) {
            inst.W.push_back({i});
            inst.n.push_back(2);
        }
        const auto r = wiener_cover(inst, 1);
        std::set<int> picked;
        for (auto i : r.selected) picked.insert(inst.W[i][0]);
        CHECK(picked == std::set<int>{0, 2, 4, 6, 8});
        CHECK(r.bound == 30);
    }
    SUBCASE("random instances") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 300; ++trial) {
            const int m = 1 + trial % 3;
            CoverInstance inst;
            std::set<Site> seen;
            const int count = 1 + static_cast<int>(rng() % 200);
            while (static_cast<int>(inst.W.size()) < count) {
                Site x(m);
                for (auto& c : x) c = static_cast<int>(rng() % (m == 1 ? 400 : 20));
                if (!seen.insert(x).second) continue;
                inst.W.push_back(x);
                inst.n.push_back(1 + static_cast<int>(rng() % 4));
            }
            const auto r = wiener_cover(inst, m);
            CHECK(boxes_disjoint(inst, r.selected));
            CHECK(r.bound >= static_cast<long long>(inst.W.size()));
        }
    }
    CoverInstance bad{{{0}}, {0}};
    CHECK_THROWS_AS(wiener_cover(bad, 1), ValidationError);
}

TEST_CASE("empirical gamma") {
    const auto flat = empirical_gamma(FieldSpec::zero(), Slope::zero(1), {5, 9}, 3);
    CHECK(flat[1].mean == doctest::Approx(ln_binomial(8, 4) / 9));
    CHECK(flat[1].stderr_ == 0.0);
    const FieldSpec spec{FieldKind::iid_uniform, 0.5, 2, 1, 10};
    const auto g = empirical_gamma(spec, Slope::zero(2), {4, 6}, 20);
    const auto e = ent_annealed(Slope::zero(2), 6, spec, 20);
    CHECK(std::abs(g[1].mean + e.mean) <= 1e-12);
}

TEST_CASE("maximal inequality probe") {
    const FieldSpec spec{FieldKind::iid_uniform, 0.5, 2, 1, 3};
    const auto huge = maximal_inequality_probe(spec, Slope::zero(2), 1e6, 4, 20);
    CHECK(huge.empirical_prob == 0.0);
    CHECK(huge.pass());
    const auto flat = maximal_inequality_probe(FieldSpec::zero(), Slope::zero(2), 0.3, 5, 5);
    CHECK((flat.empirical_prob == 0.0 || flat.empirical_prob == 1.0));
    CHECK(flat.pass());
    for (double alpha : {1.0, 1.5, 2.0}) {
        const auto mid = maximal_inequality_probe(spec, Slope::zero(2), alpha, 5, 200);
        CHECK(mid.pass());
    }
}

TEST_CASE("report lines") {
    CHECK(instance_hash("abc") == instance_hash("abc"));
    CHECK(instance_hash("abc") != instance_hash("abd"));
    CHECK(instance_hash("").size() == 16);
    const auto j = report_line("defect", "00ff", "defect", 0.5, true);
    CHECK(j["pass"] == true);
    CHECK(j["defect"] == 0.5);
}
