#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tension_lab/error.hpp"
#include "tension_lab/gibbs.hpp"

using namespace tension_lab;

namespace {

EdgeWeights two_level(double beta) {
    // w_{e_{0,1}} = beta, every other height edge 0.
    return [beta](long long k) { return k == 0 ? beta : 0.0; };
}

EdgeWeights zero_weights() {
    return [](long long) { return 0.0; };
}

}  // namespace

TEST_CASE("hamiltonian") {
    const Box b({0}, {3});
    const HeightFunction h{b, {0, 1, 0}};
    CHECK(hamiltonian(h, [](long long k) { return k == 0 ? 0.5 : 0.0; }) == doctest::Approx(1.0));
    CHECK(hamiltonian(h, zero_weights()) == 0.0);

    std::mt19937_64 rng(5);
    const Box b2 = Box::cube(2, 4);
    const HeightFunction g{b2, oracle::random_height_function(b2, rng)};
    const Field f(FieldSpec{FieldKind::iid_uniform, 0.7, 2, 1, 99});
    const double c = 0.25;
    const double shifted = hamiltonian(g, [&](long long k) { return f.at(k) + c; });
    CHECK(shifted == doctest::Approx(hamiltonian(g, f) + c * static_cast<double>(b2.edge_count())));
    CHECK(std::abs(hamiltonian(g, f)) <= f.bound() * static_cast<double>(b2.edge_count()));
}

TEST_CASE("count_extensions") {
    SUBCASE("1D {0..4} zero endpoints: C(4,2)") {
        CHECK(count_extensions(make_boundary(Box({0}, {5}), {0, 0})) == 6);
        const auto brute = oracle::brute_force_fixed(make_boundary(Box({0}, {5}), {0, 0}), zero_weights());
        CHECK(brute.configs.size() == 6);
    }
    SUBCASE("S_3 canonical flat boundary: 2") {
        const auto hb = canonical_boundary(Box::cube(2, 3), Slope::zero(2));
        CHECK(count_extensions(hb) == 2);
        CHECK(oracle::brute_force_fixed(hb, zero_weights()).configs.size() == 2);
    }
    SUBCASE("S_2 has no interior: 1") {
        CHECK(count_extensions(canonical_boundary(Box::cube(2, 2), Slope({0.4, -0.3}))) == 1);
    }
    SUBCASE("non-extendable data counts zero") { CHECK(count_extensions(make_boundary(Box({0}, {3}), {0, 4})) == 0); }
    SUBCASE("large 1D counts are exact big integers") {
        CHECK(count_extensions(make_boundary(Box({0}, {201}), {0, 0})) == oracle::binomial(200, 100));
    }
    SUBCASE("frozen slope has a single extension") {
        CHECK(count_extensions(canonical_boundary(Box::cube(2, 5), Slope({1.0, 0.0}))) == 1);
        CHECK(count_extensions(canonical_boundary(Box::cube(2, 4), Slope({1.0, 1.0}))) == 1);
    }
}

TEST_CASE("log_partition") {
    SUBCASE("S_3 two-level field") {
        const double beta = 0.8;
        const auto hb = canonical_boundary(Box::cube(2, 3), Slope::zero(2));
        // The eight ring edges all cross height edge {0,1}; the centre adds
        // four more at height 0 or none at height 2.
        const double expected = 8 * beta + std::log(std::exp(4 * beta) + 1.0);
        CHECK(log_partition(hb, two_level(beta)) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("zero field equals ln count") {
        CHECK(log_partition(make_boundary(Box({0}, {5}), {0, 0}), zero_weights()) ==
              doctest::Approx(std::log(6.0)).epsilon(1e-14));
    }
    SUBCASE("non-extendable data throws") {
        CHECK_THROWS_AS(log_partition(make_boundary(Box({0}, {3}), {0, 4}), zero_weights()), NotExtendableError);
    }
    SUBCASE("large fields do not overflow") {
        const auto hb = canonical_boundary(Box::cube(2, 8), Slope({0.25, 0.0}));
        const double v = log_partition(hb, [](long long) { return 300.0; });
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(300.0 * 112 + log_partition(hb, zero_weights())).epsilon(1e-12));
    }
    SUBCASE("field overload carries metadata") {
        const Field f(FieldSpec{FieldKind::iid_rademacher, 1.0, 2, 1, 4});
        const auto lp = log_partition(canonical_boundary(Box::cube(2, 4), Slope::zero(2)), f);
        CHECK(lp.boundary == "fixed");
        CHECK(lp.field == f.fingerprint());
        CHECK(lp.box == Box::cube(2, 4));
    }
}

TEST_CASE("frontier DP agrees with brute force on random small instances") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 1 + trial % 3;
        std::vector<int> lo(m), hi(m);
        std::size_t sites = 1;
        for (int i = 0; i < m; ++i) {
            lo[i] = static_cast<int>(rng() % 5) - 2;
            const int ext = 1 + static_cast<int>(rng() % (m == 1 ? 12 : (m == 2 ? 4 : 2)));
            hi[i] = lo[i] + ext;
            sites *= static_cast<std::size_t>(ext);
        }
        if (sites > 12) continue;
        const Box b(lo, hi);
        const HeightFunction h{b, oracle::random_height_function(b, rng)};
        const auto hb = restrict_to_boundary(h);
        const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, rng()});
        const auto brute = oracle::brute_force_fixed(hb, f.weights());
        CHECK(count_extensions(hb) == brute.configs.size());
        CHECK(log_partition(hb, f.weights()) == doctest::Approx(oracle::log_sum_exp(brute.energies)).epsilon(1e-10));
    }
}

TEST_CASE("exact distribution") {
    SUBCASE("zero field is uniform") {
        const auto hb = make_boundary(Box({0}, {7}), {0, 2});
        const auto d = exact_distribution(hb, zero_weights());
        CHECK(d.configurations.size() == 15);
        for (const auto& c : d.configurations) CHECK(c.probability == doctest::Approx(1.0 / 15));
    }
    SUBCASE("S_3 two-point table") {
        const double beta = 0.6;
        const auto hb = canonical_boundary(Box::cube(2, 3), Slope::zero(2));
        const auto d = exact_distribution(hb, two_level(beta));
        REQUIRE(d.configurations.size() == 2);
        double p0 = 0.0, total = 0.0;
        for (const auto& c : d.configurations) {
            total += c.probability;
            if (c.values[4] == 0) p0 = c.probability;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p0 == doctest::Approx(std::exp(4 * beta) / (std::exp(4 * beta) + 1)).epsilon(1e-12));
        const auto flat = exact_distribution(hb, two_level(0.0));
        CHECK(flat.configurations[0].probability == doctest::Approx(0.5));
        CHECK(flat.configurations[1].probability == doctest::Approx(0.5));
    }
    SUBCASE("cap") {
        CHECK_THROWS_AS(exact_distribution(canonical_boundary(Box::cube(2, 8), Slope::zero(2)), zero_weights(), 100),
                        InfeasibleError);
    }
}

TEST_CASE("free boundary partition function") {
    const Slope flat = Slope::zero(2);
    SUBCASE("radius rule") {
        CHECK(free_window_radius(6, 0.1) == 1);
        CHECK(free_window_radius(6, 0.2) == 1);
        CHECK(free_window_radius(10, 0.35) == 3);
        CHECK_THROWS_AS(free_window_radius(6, -0.1), ValidationError);
    }
    SUBCASE("S_3 against brute force with boundary windows") {
        for (double delta : {0.1, 0.7, 3.0}) {
            const Box b = Box::cube(2, 3);
            const int r = free_window_radius(3, delta);
            // Brute force: every height function with |h| <= r on the ring.
            std::vector<std::optional<int>> none(b.size());
            const auto all = oracle::brute_force(b, none, -r - 2, r + 2, zero_weights());
            std::size_t admissible = 0;
            for (const auto& cfg : all.configs) {
                bool ok = true;
                for (std::size_t k : inner_boundary_indices(b))
                    if (std::abs(cfg[k]) > r) ok = false;
                admissible += ok;
            }
            CHECK(free_log_partition(b, flat, delta, zero_weights()) ==
                  doctest::Approx(std::log(static_cast<double>(admissible))).epsilon(1e-12));
        }
    }
    SUBCASE("point windows reproduce the fixed partition function") {
        const auto hb = canonical_boundary(Box::cube(2, 4), Slope({0.3, 0.6}));
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 17});
        SiteWindows w = fixed_windows(hb);
        CHECK(log_partition_windows(hb.box, w, f.weights()) == doctest::Approx(log_partition(hb, f.weights())));
    }
    SUBCASE("monotone in delta and dominates the fixed value") {
        const Box b = Box::cube(2, 6);
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 3});
        const double fixed = log_partition(canonical_boundary(b, flat), f).value;
        double prev = -1e300;
        for (double delta : {0.1, 0.2, 0.4, 0.6}) {
            const double v = free_log_partition(b, flat, delta, f).value;
            CHECK(v >= prev - 1e-12);
            CHECK(v >= fixed);
            prev = v;
        }
    }
    SUBCASE("n = 4, delta = 0.5 matches brute force with a seeded field") {
        const Box b = Box::cube(2, 4);
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 42});
        const int r = free_window_radius(4, 0.5);
        std::vector<std::optional<int>> none(b.size());
        // Interior heights can reach r + 2 (distance to the ring).
        const auto all = oracle::brute_force(b, none, -r - 3, r + 3, f.weights());
        std::vector<double> admissible;
        for (std::size_t i = 0; i < all.configs.size(); ++i) {
            bool ok = true;
            for (std::size_t k : inner_boundary_indices(b))
                if (std::abs(all.configs[i][k]) > r) ok = false;
            if (ok) admissible.push_back(all.energies[i]);
        }
        CHECK(free_log_partition(b, flat, 0.5, f).value ==
              doctest::Approx(oracle::log_sum_exp(admissible)).epsilon(1e-10));
    }
    SUBCASE("n = 6, delta = 0.2 matches a pruned brute force") {
        const int n = 6;
        const Box b = Box::cube(2, n);
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 42});
        const int r = free_window_radius(n, 0.2);
        // |h| <= r on the ring forces |h(x)| <= r + (distance to the ring) inside.
        std::vector<int> lo(b.size()), hi(b.size());
        for (std::size_t k = 0; k < b.size(); ++k) {
            const Site x = b.site(k);
            const int d = std::min({x[0], x[1], n - 1 - x[0], n - 1 - x[1]});
            lo[k] = -r - d;
            hi[k] = r + d;
        }
        const auto all = oracle::brute_force_ranges(b, lo, hi, f.weights());
        CHECK(free_log_partition(b, flat, 0.2, f).value ==
              doctest::Approx(oracle::log_sum_exp(all.energies)).epsilon(1e-10));
    }
    SUBCASE("non-cube boxes are rejected") {
        CHECK_THROWS_AS(free_windows(Box({0, 0}, {3, 4}), flat, 0.5), ValidationError);
    }
}
