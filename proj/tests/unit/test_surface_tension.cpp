#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "tension_lab/error.hpp"
#include "tension_lab/surface_tension.hpp"

using namespace tension_lab;

namespace {

const Field kZero{FieldSpec::zero()};

double log_binomial(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

// Lower envelope at grid point p by trying every triangle / segment / point of samples.
double brute_envelope_2d(const SlopeGrid& g, const std::vector<double>& v, std::size_t p) {
    const auto P = g.at(p);
    double best = v[p];
    const std::size_t N = g.size();
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = a + 1; b < N; ++b)
            for (std::size_t c = b + 1; c < N; ++c) {
                const auto A = g.at(a), B = g.at(b), C = g.at(c);
                const double det = (B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]);
                if (std::abs(det) < 1e-12) {
                    // collinear: segments only
                    for (auto [i, j] : {std::pair{a, b}, std::pair{a, c}, std::pair{b, c}}) {
                        const auto I = g.at(i), J = g.at(j);
                        const double cr = (J[0] - I[0]) * (P[1] - I[1]) - (J[1] - I[1]) * (P[0] - I[0]);
                        if (std::abs(cr) > 1e-12) continue;
                        const double len2 = (J[0] - I[0]) * (J[0] - I[0]) + (J[1] - I[1]) * (J[1] - I[1]);
                        const double t = ((P[0] - I[0]) * (J[0] - I[0]) + (P[1] - I[1]) * (J[1] - I[1])) / len2;
                        if (t < -1e-12 || t > 1 + 1e-12) continue;
                        best = std::min(best, (1 - t) * v[i] + t * v[j]);
                    }
                    continue;
                }
                const double l1 = ((B[0] - P[0]) * (C[1] - P[1]) - (C[0] - P[0]) * (B[1] - P[1])) / det;
                const double l2 = ((C[0] - P[0]) * (A[1] - P[1]) - (A[0] - P[0]) * (C[1] - P[1])) / det;
                const double l3 = 1 - l1 - l2;
                if (l1 < -1e-12 || l2 < -1e-12 || l3 < -1e-12) continue;
                best = std::min(best, l1 * v[a] + l2 * v[b] + l3 * v[c]);
            }
    return best;
}

}  // namespace

TEST_CASE("ent_fixed sign convention and closed forms") {
    CHECK(ent_fixed(Slope::zero(1), 201, kZero) ==
          doctest::Approx(-log_binomial(200, 100) / 201).epsilon(1e-12));
    CHECK(std::abs(ent_fixed(Slope::zero(1), 201, kZero) + std::log(2.0)) <= 0.02);
    CHECK(std::abs(ent_fixed(Slope::zero(2), 3, kZero) + std::log(2.0) / 9) <= 1e-12);
    // Along n the 1D zero-field value moves toward -ln 2.
    double prev_gap = 1.0;
    for (int n : {11, 41, 101, 201}) {
        const double gap = std::abs(ent_fixed(Slope::zero(1), n, kZero) + std::log(2.0));
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}

TEST_CASE("frozen slopes") {
    const Field f(FieldSpec{FieldKind::iid_uniform, 0.7, 2, 1, 12});
    for (auto sv : {std::vector<double>{1.0, 0.0}, std::vector<double>{-1.0, 0.3}}) {
        const Slope s(sv);
        const auto hb = canonical_boundary(Box::cube(2, 4), s);
        const auto all = oracle::brute_force_fixed(hb, f.weights());
        REQUIRE(all.configs.size() == 1);
        CHECK(ent_fixed(s, 4, f) == doctest::Approx(-all.energies[0] / 16).epsilon(1e-12));
    }
}

TEST_CASE("ent_free") {
    const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 8});
    for (auto sv : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.4, -0.2}}) {
        const Slope s(sv);
        double prev = 1e300;
        for (double delta : {0.1, 0.25, 0.5, 1.0}) {
            const double fr = ent_free(s, 6, delta, f);
            CHECK(fr <= ent_fixed(s, 6, f) + 1e-12);
            CHECK(fr <= prev + 1e-12);
            prev = fr;
        }
    }
}

TEST_CASE("ent_annealed") {
    SUBCASE("zero amplitude: no spread") {
        const auto e = ent_annealed(Slope::zero(2), 4, FieldSpec::zero(), 5);
        CHECK(e.stderr_ == 0.0);
        CHECK(e.mean == doctest::Approx(ent_fixed(Slope::zero(2), 4, kZero)));
    }
    SUBCASE("1D, three sites, rademacher: exact expectation over the two relevant edges") {
        // h = (0, +-1, 0); H = 2 w(0) for +1 and 2 w(-1) for -1.
        const double c = 0.8;
        double exact = 0.0;
        for (double a : {-c, c})
            for (double b : {-c, c}) exact += -std::log(std::exp(2 * a) + std::exp(2 * b)) / 3.0 / 4.0;
        const FieldSpec spec{FieldKind::iid_rademacher, c, 2, 1, 31};
        const auto e = ent_annealed(Slope::zero(1), 3, spec, 4000);
        CHECK(std::abs(e.mean - exact) < 4 * e.stderr_);
        CHECK(e.stderr_ > 0.0);
    }
    SUBCASE("doubling samples shrinks stderr by about 1/sqrt2") {
        const FieldSpec spec{FieldKind::iid_uniform, 0.5, 2, 1, 5};
        const auto a = ent_annealed(Slope::zero(2), 4, spec, 200);
        const auto b = ent_annealed(Slope::zero(2), 4, spec, 400);
        const double ratio = b.stderr_ / a.stderr_;
        CHECK(ratio > 0.55);
        CHECK(ratio < 0.9);
    }
    SUBCASE("thread count does not change results") {
        const FieldSpec spec{FieldKind::iid_uniform, 0.5, 2, 1, 5};
        const auto a = ent_annealed(Slope({0.2, 0.1}), 5, spec, 16, 1);
        const auto b = ent_annealed(Slope({0.2, 0.1}), 5, spec, 16, 4);
        CHECK(a.values == b.values);
    }
    CHECK_THROWS_AS(ent_annealed(Slope::zero(1), 5, FieldSpec::zero(), 1), ValidationError);
}

TEST_CASE("convergence and cross-realisation studies") {
    const auto series = convergence_study(Slope::zero(1), kZero, {5, 21, 101});
    REQUIRE(series.size() == 3);
    CHECK(series[2].value == doctest::Approx(-log_binomial(100, 50) / 101));
    CHECK_THROWS_AS(convergence_study(Slope::zero(1), kZero, {5, 3}), ValidationError);
    const auto flat = cross_omega_study(Slope::zero(2), FieldSpec::zero(), {3, 4, 6}, 4);
    for (const auto& t : flat) CHECK(t.stderr_ == 0.0);
    const FieldSpec spec{FieldKind::iid_uniform, 0.5, 2, 1, 77};
    const auto spread = cross_omega_study(Slope::zero(2), spec, {4, 10}, 60);
    CHECK(spread[1].stderr_ < spread[0].stderr_);
}

TEST_CASE("sandwich check") {
    SUBCASE("zero field: no error term, both inequalities hold") {
        for (auto sv : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.3, 0.0}}) {
            for (double delta : {0.1, 0.2, 0.5}) {
                const auto r = sandwich_check(Slope(sv), 6, delta, kZero);
                CHECK(r.error_term == 0.0);
                CHECK(r.holds());
            }
        }
    }
    SUBCASE("seeded iid field, n = 6, delta = 0.2") {
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 2025});
        const auto r = sandwich_check(Slope::zero(2), 6, 0.2, f);
        CHECK(r.C == 2.0);
        CHECK(r.n_prime == 6 + 3);
        CHECK(r.edge_difference == 2 * 9 * 8 - 2 * 6 * 5);
        CHECK(r.error_term == doctest::Approx(0.5 * r.edge_difference / 36.0));
        CHECK(r.slack_upper >= 0.0);
        CHECK(r.slack_lower >= 0.0);
        const auto j = sandwich_to_json(r);
        CHECK(j["holds"] == true);
    }
    SUBCASE("large delta: inclusion persists") {
        const Field f(FieldSpec{FieldKind::iid_uniform, 0.5, 2, 1, 1});
        CHECK(ent_free(Slope::zero(2), 4, 3.0, f) <= ent_fixed(Slope::zero(2), 4, f));
        CHECK(ent_free(Slope::zero(2), 4, 10.0, f) <= ent_free(Slope::zero(2), 4, 3.0, f));
    }
    CHECK_THROWS_AS(sandwich_check(Slope({1.0, 0.0}), 4, 0.1, kZero), ValidationError);
}

TEST_CASE("slope grid and interpolation") {
    const SlopeGrid g{2, 5, 0.2};
    CHECK(g.size() == 25);
    CHECK(g.axis().front() == doctest::Approx(-0.8));
    CHECK(g.at(7) == std::vector<double>{-0.4, 0.0});
    SurfaceTensionTable t;
    t.grid = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto s = g.at(i);
        t.raw.push_back(0.3 * s[0] - 1.1 * s[1] + 0.25);
    }
    t.values = t.raw;
    for (auto sv : {std::vector<double>{0.13, -0.71}, std::vector<double>{0.95, 0.99}}) {
        CHECK(t.evaluate(sv) == doctest::Approx(0.3 * sv[0] - 1.1 * sv[1] + 0.25));
        std::vector<double> grad(2);
        t.gradient(sv, grad);
        CHECK(grad[0] == doctest::Approx(0.3));
        CHECK(grad[1] == doctest::Approx(-1.1));
    }
    CHECK_THROWS_AS((SlopeGrid{3, 4, 0.1}.validate()), ValidationError);
}

TEST_CASE("lower convex envelope") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SUBCASE("1D: below the data, convex, touches the hull vertices") {
        const SlopeGrid g{1, 15, 0.05};
        std::vector<double> v(g.size());
        for (auto& x : v) x = u(rng);
        const auto env = lower_convex_envelope(g, v);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(env[i] <= v[i] + 1e-12);
        for (std::size_t i = 1; i + 1 < v.size(); ++i) CHECK(env[i - 1] - 2 * env[i] + env[i + 1] >= -1e-12);
        CHECK(env.front() == v.front());
        CHECK(env.back() == v.back());
    }
    SUBCASE("2D: matches exhaustive triangle search") {
        const SlopeGrid g{2, 4, 0.1};
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> v(g.size());
            for (auto& x : v) x = u(rng);
            const auto env = lower_convex_envelope(g, v);
            for (std::size_t p = 0; p < g.size(); ++p)
                CHECK(env[p] == doctest::Approx(brute_envelope_2d(g, v, p)).epsilon(1e-9));
        }
    }
    SUBCASE("convex data is unchanged") {
        const SlopeGrid g{2, 7, 0.05};
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto s = g.at(i);
            v[i] = s[0] * s[0] + 2 * s[1] * s[1] + 0.3 * s[0] * s[1];
        }
        const auto env = lower_convex_envelope(g, v);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(env[i] == doctest::Approx(v[i]).epsilon(1e-10));
    }
}

TEST_CASE("tabulate_tension") {
    SUBCASE("zero field, 1D: reflection symmetric, convex, below raw") {
        const auto t = tabulate_tension(FieldSpec::zero(), 41, 1, SlopeGrid{1, 11, 0.05});
        const std::size_t P = t.raw.size();
        for (std::size_t i = 0; i < P; ++i) {
            CHECK(t.raw[i] == doctest::Approx(t.raw[P - 1 - i]).epsilon(1e-9));
            CHECK(t.values[i] <= t.raw[i] + 1e-12);
        }
        for (std::size_t i = 1; i + 1 < P; ++i) CHECK(t.values[i - 1] - 2 * t.values[i] + t.values[i + 1] >= -1e-12);
    }
    SUBCASE("2D table: convex along every grid line; JSON round trip") {
        const FieldSpec spec{FieldKind::iid_uniform, 0.3, 2, 1, 4};
        const auto t = tabulate_tension(spec, 4, 3, SlopeGrid{2, 5, 0.1});
        const int P = 5;
        for (int a = 0; a < P; ++a)
            for (int b = 1; b + 1 < P; ++b) {
                CHECK(t.values[a * P + b - 1] - 2 * t.values[a * P + b] + t.values[a * P + b + 1] >= -1e-10);
                CHECK(t.values[(b - 1) * P + a] - 2 * t.values[b * P + a] + t.values[(b + 1) * P + a] >= -1e-10);
            }
        const auto j = table_to_json(t);
        CHECK(j.contains("grid"));
        CHECK(j["meta"]["n"] == 4);
        const auto back = table_from_json(nlohmann::json::parse(j.dump()));
        CHECK(back.convexified);
        CHECK(back.values == t.values);
        CHECK(back.raw == t.raw);
        CHECK(back.spec.seed == 4);
    }
}

TEST_CASE("csv") {
    std::ostringstream os;
    write_tension_csv(os, convergence_study(Slope::zero(2), kZero, {3}));
    const std::string out = os.str();
    CHECK(out.rfind("s1,s2,n,kind,value,stderr\n", 0) == 0);
    CHECK(out.find(",3,fixed,") != std::string::npos);
}
