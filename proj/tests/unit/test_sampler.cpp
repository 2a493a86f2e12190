#include <cmath>
#include <sstream>

#include "doctest.h"
#include "tension_lab/error.hpp"
#include "tension_lab/sampler.hpp"

using namespace tension_lab;

namespace {

EdgeWeights two_level(double beta) {
    return [beta](long long k) { return k == 0 ? beta : 0.0; };
}

const EdgeWeights kZeroW = [](long long) { return 0.0; };

}  // namespace

TEST_CASE("heat-bath conditional") {
    const Box b = Box::cube(2, 3);
    HeightFunction h{b, {0, 1, 0, 1, 0, 1, 0, 1, 0}};
    SUBCASE("S_3 centre, zero field: fair coin") {
        h.values[4] = 2;
        const auto c = heat_bath_conditional(h, 4, kZeroW);
        CHECK_FALSE(c.forced);
        CHECK(c.low == 0);
        CHECK(c.p_low == doctest::Approx(0.5));
    }
    SUBCASE("two-level field reproduces the exact two-point law") {
        const double beta = 0.7;
        const auto c = heat_bath_conditional(h, 4, two_level(beta));
        CHECK(c.p_low == doctest::Approx(std::exp(4 * beta) / (std::exp(4 * beta) + 1)).epsilon(1e-14));
        const auto d = exact_distribution(canonical_boundary(b, Slope::zero(2)), two_level(beta));
        for (const auto& cfg : d.configurations)
            if (cfg.values[4] == 0) CHECK(c.p_low == doctest::Approx(cfg.probability).epsilon(1e-12));
    }
    SUBCASE("forced site") {
        const Box line({0}, {3});
        const HeightFunction g{line, {0, 1, 2}};
        CHECK(heat_bath_conditional(g, 1, kZeroW).forced);
        ChainState st = make_chain(make_boundary(line, {0, 2}), 3);
        heat_bath_sweep(st, kZeroW);
        CHECK(st.current.values == std::vector<int>{0, 1, 2});
    }
}

TEST_CASE("sampling") {
    const auto hb = canonical_boundary(Box::cube(2, 4), Slope::zero(2));
    SUBCASE("sweeps = 0 returns the maximal extension") {
        SamplerOptions opt;
        opt.sweeps = 0;
        const auto run = sample(hb, kZeroW, opt);
        REQUIRE(run.snapshots.size() == 1);
        CHECK(run.snapshots[0].values == kirszbraun_extend(hb).values);
    }
    SUBCASE("determinism and validity") {
        SamplerOptions opt;
        opt.sweeps = 200;
        opt.thin = 5;
        opt.seed = 42;
        const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, 1});
        const auto a = sample(hb, f, opt);
        const auto b = sample(hb, f, opt);
        REQUIRE(a.snapshots.size() == 40);
        for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
            CHECK(a.snapshots[i].values == b.snapshots[i].values);
            const HeightFunction h{a.box, a.snapshots[i].values};
            CHECK(is_height_function(h));
            CHECK(restrict_to_boundary(h).values == hb.values);
        }
        opt.chains = 3;
        const auto c1 = sample(hb, f, opt, 1);
        const auto c3 = sample(hb, f, opt, 3);
        REQUIRE(c1.snapshots.size() == 120);
        for (std::size_t i = 0; i < c1.snapshots.size(); ++i) CHECK(c1.snapshots[i].values == c3.snapshots[i].values);
    }
    SUBCASE("single interior site: binomial test against the exact marginal") {
        const double beta = 0.4;
        const auto s3 = canonical_boundary(Box::cube(2, 3), Slope::zero(2));
        SamplerOptions opt;
        opt.sweeps = 10000;
        opt.thin = 1;
        opt.seed = 7;
        const auto run = sample(s3, two_level(beta), opt);
        double zeros = 0;
        for (const auto& snap : run.snapshots) zeros += snap.values[4] == 0;
        const double p = std::exp(4 * beta) / (std::exp(4 * beta) + 1);
        const double N = static_cast<double>(run.snapshots.size());
        CHECK(std::abs(zeros / N - p) < 3 * std::sqrt(p * (1 - p) / N));
    }
    SUBCASE("zero field on 4x4: close to uniform; random scan too") {
        const auto exact = exact_distribution(hb, kZeroW);
        SamplerOptions opt;
        opt.sweeps = 200000;
        opt.thin = 10;
        opt.seed = 5;
        CHECK(total_variation(sample(hb, kZeroW, opt), exact) < 0.05);
        opt.random_scan = true;
        CHECK(total_variation(sample(hb, kZeroW, opt), exact) < 0.05);
    }
}

TEST_CASE("exact sweep kernel leaves the Gibbs measure invariant") {
    const Field f(FieldSpec{FieldKind::iid_uniform, 1.0, 2, 1, 21});
    for (auto sv : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.5, 0.25}}) {
        const auto hb = canonical_boundary(Box::cube(2, 4), Slope(sv));
        const auto d = exact_distribution(hb, f.weights());
        const auto next = apply_sweep_kernel(d, f.weights());
        double worst = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i)
            worst = std::max(worst, std::abs(next[i] - d.configurations[i].probability));
        CHECK(worst < 1e-10);
    }
    // A non-stationary start moves.
    const auto hb = canonical_boundary(Box::cube(2, 4), Slope::zero(2));
    auto d = exact_distribution(hb, kZeroW);
    for (auto& c : d.configurations) c.probability = 0.0;
    d.configurations[0].probability = 1.0;
    const auto next = apply_sweep_kernel(d, kZeroW);
    CHECK(next[0] < 1.0);
}

TEST_CASE("HP ball") {
    const int n = 10;
    const Slope s({0.3, -0.2});
    const auto hb = canonical_boundary(Box::cube(2, n), s);
    const auto h = kirszbraun_extend(hb);
    const MacroProfile affine = [&](std::span<const double> y) { return s[0] * y[0] + s[1] * y[1]; };
    CHECK(on_eps_grid(std::vector<int>{5, 3}, 10, 0.5));
    CHECK_FALSE(on_eps_grid(std::vector<int>{4, 3}, 10, 0.5));
    CHECK(on_eps_grid(std::vector<int>{0, 3}, 10, 0.5));
    CHECK(hp_ball_contains(h, HPBallSpec{affine, 2.0, 0.5}, n));
    // Maximal extension of affine data stays within (2 / n) * diameter.
    const double diam = 2.0 * (n - 1);
    CHECK(hp_ball_contains(h, HPBallSpec{affine, 2.0 / n * diam, 0.1}, n));
    const double d = hp_ball_distance(h, HPBallSpec{affine, 1.0, 0.5}, n);
    const MacroProfile shifted = [&](std::span<const double> y) { return affine(y) + 2 * (d + 0.05); };
    CHECK_FALSE(hp_ball_contains(h, HPBallSpec{shifted, d + 0.05, 0.5}, n));
    CHECK_THROWS_AS(hp_ball_distance(HeightFunction{Box({3, 3}, {5, 5}), {0, 1, 1, 0}}, HPBallSpec{affine, 1, 0.7}, n),
                    ValidationError);
    CHECK_THROWS_AS(HPBallSpec({affine, 0.0, 0.5}).validate(), ValidationError);
}

TEST_CASE("concentration experiment") {
    const Field zero{FieldSpec::zero()};
    SamplerOptions opt;
    opt.sweeps = 2000;
    opt.seed = 3;
    SUBCASE("delta = 2 always inside") {
        CHECK(concentration_experiment(8, Slope::zero(2), zero, 2.0, 0.5, opt).fraction == 1.0);
    }
    SUBCASE("frozen slope: unique configuration") {
        // Parity rounding puts the staircase within 1/n of the plane.
        const auto r = concentration_experiment(8, Slope({1.0, 0.0}), zero, 0.2, 0.5, opt);
        CHECK(r.fraction == 1.0);
        CHECK(r.max_distance == r.mean_distance);
    }
    SUBCASE("zero field, n = 10") {
        opt.sweeps = 20000;
        const auto r = concentration_experiment(10, Slope::zero(2), zero, 0.3, 0.5, opt);
        CHECK(r.fraction >= 0.9);
        CHECK(r.samples == 2000);
    }
}

TEST_CASE("sample output formats") {
    const auto hb = canonical_boundary(Box({1, -1}, {4, 2}), Slope({0.5, 0.0}));
    SamplerOptions opt;
    opt.sweeps = 30;
    opt.thin = 10;
    const auto run = sample(hb, kZeroW, opt);
    std::ostringstream csv;
    write_samples_csv(csv, run);
    CHECK(csv.str().rfind("chain,sweep,x1,x2,height\n", 0) == 0);
    std::stringstream bin;
    write_samples_binary(bin, run);
    const std::string bytes = bin.str();
    CHECK(bytes.size() == 4 + 8 + 8 + 8 + 3 * 9 * 4);
    CHECK(bytes[0] == 2);
    CHECK(bytes[4] == 1);
    CHECK(static_cast<unsigned char>(bytes[8]) == 0xFF);  // lo[1] = -1
    const auto back = read_samples_binary(bin);
    CHECK(back.box == run.box);
    REQUIRE(back.snapshots.size() == 3);
    CHECK(back.snapshots[2].values == run.snapshots[2].values);
}
