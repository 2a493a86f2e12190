#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "tension_lab/error.hpp"
#include "tension_lab/random_field.hpp"

using namespace tension_lab;

namespace {

FieldSpec spec(FieldKind kind, double c, std::uint64_t seed, int period = 2, int range = 1) {
    return FieldSpec{kind, c, period, range, seed};
}

}  // namespace

TEST_CASE("counter stream") {
    for (std::int64_t k = -1000; k < 1000; ++k) {
        const double u = counter_uniform(7, k);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(counter_uniform(7, 3) == counter_uniform(7, 3));
    CHECK(counter_uniform(7, 3) != counter_uniform(8, 3));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 5) == derive_seed(1, 5));
}

TEST_CASE("kind names and validation") {
    for (auto k : {FieldKind::iid_uniform, FieldKind::iid_rademacher, FieldKind::random_phase_periodic,
                   FieldKind::finite_range_ma})
        CHECK(field_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(field_kind_from_string("gaussian"), ValidationError);
    CHECK_THROWS_AS(Field(spec(FieldKind::iid_uniform, -1.0, 0)), ValidationError);
    CHECK_THROWS_AS(Field(spec(FieldKind::random_phase_periodic, 1.0, 0, 1)), ValidationError);
    CHECK_THROWS_AS(Field(spec(FieldKind::finite_range_ma, 1.0, 0, 2, 0)), ValidationError);
    CHECK(spec(FieldKind::finite_range_ma, 0.5, 0, 2, 3).bound() == doctest::Approx(1.5));
}

TEST_CASE("rademacher support") {
    const Field f(spec(FieldKind::iid_rademacher, 0.3, 11));
    int plus = 0;
    for (long long k = -5000; k < 5000; ++k) {
        const double w = f.at(k);
        CHECK((w == 0.3 || w == -0.3));
        plus += w > 0;
    }
    CHECK(std::abs(plus - 5000) < 4 * 50);  // 4 sigma
}

TEST_CASE("period-2 pattern alternates") {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const Field f(spec(FieldKind::random_phase_periodic, 0.8, seed));
        for (long long k = -50; k < 50; ++k) {
            CHECK(f.at(k) + f.at(k + 1) == 0.0);
            CHECK(std::abs(f.at(k)) == 0.8);
        }
    }
    const Field p5(spec(FieldKind::random_phase_periodic, 1.0, 3, 5));
    double s = 0.0;
    for (long long k = 0; k < 5; ++k) s += p5.at(k);
    CHECK(std::abs(s) < 1e-12);
    CHECK(p5.at(2) == p5.at(7));
}

TEST_CASE("empirical mean and bound") {
    for (auto kind : {FieldKind::iid_uniform, FieldKind::iid_rademacher, FieldKind::finite_range_ma}) {
        const Field f(spec(kind, 1.0, 1234, 2, 3));
        const double C = f.bound();
        const long long N = 100000;
        double sum = 0.0;
        for (long long k = 0; k < N; ++k) sum += f.at(k);
        CHECK(std::abs(sum / N) < 3.0 * C / std::sqrt(static_cast<double>(N)));
        double mx = 0.0;
        for (long long k = -500000; k < 500000; ++k) mx = std::max(mx, std::abs(f.at(k)));
        CHECK(mx <= C);
    }
}

TEST_CASE("shifts") {
    const Field f(spec(FieldKind::iid_uniform, 1.0, 5));
    const Field g = shift_field(f, 7);
    for (long long k = -20; k < 20; ++k) CHECK(g.at(k) == f.at(k + 7));
    const Field back = shift_field(g, -7);
    const Field comp = shift_field(shift_field(f, 3), 4);
    for (long long k = -20; k < 20; ++k) {
        CHECK(back.at(k) == f.at(k));
        CHECK(comp.at(k) == g.at(k));
    }
    CHECK(comp.fingerprint() == g.fingerprint());

    const Slope s({0.5, 0.25});
    const std::vector<int> u{3, 4};
    const Field t = slope_shift(f, u, s);
    CHECK(t.shift() == 2);
    const std::vector<int> v{-1, 0};
    CHECK(slope_shift(f, v, s).shift() == -1);
}

TEST_CASE("reproducibility and seed sensitivity") {
    const Field a(spec(FieldKind::iid_uniform, 1.0, 77));
    const Field b(spec(FieldKind::iid_uniform, 1.0, 77));
    const Field c(spec(FieldKind::iid_uniform, 1.0, 78));
    int differ = 0;
    for (long long k = 0; k < 100; ++k) {
        CHECK(a.at(k) == b.at(k));
        differ += a.at(k) != c.at(k);
    }
    CHECK(differ == 100);
    std::set<int> phases;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const Field p(spec(FieldKind::random_phase_periodic, 1.0, seed, 4));
        for (int j = 0; j < 4; ++j)
            if (p.at(0) == doctest::Approx(std::cos(2.0 * M_PI * j / 4.0))) phases.insert(j);
    }
    CHECK(phases.size() >= 3);  // cos pattern identifies phases 1 and 3 together
}

TEST_CASE("stationarity: windows far apart have matching moments") {
    const Field f(spec(FieldKind::iid_uniform, 1.0, 2468));
    const long long N = 50000;
    auto moments = [&](long long start) {
        double s1 = 0.0, s2 = 0.0;
        for (long long k = start; k < start + N; ++k) {
            s1 += f.at(k);
            s2 += f.at(k) * f.at(k);
        }
        return std::pair{s1 / N, s2 / N};
    };
    const auto [m1, v1] = moments(0);
    const auto [m2, v2] = moments(1'000'000'000LL);
    // variance 1/3 each; two-sample z-score on the mean
    CHECK(std::abs(m1 - m2) / std::sqrt(2.0 / 3.0 / N) < 4.0);
    CHECK(std::abs(v1 - 1.0 / 3.0) < 0.01);
    CHECK(std::abs(v2 - 1.0 / 3.0) < 0.01);
}

TEST_CASE("json") {
    const FieldSpec s = spec(FieldKind::finite_range_ma, 0.25, 9, 2, 4);
    const nlohmann::json j = s;
    CHECK(j["kind"] == "finite_range_ma");
    const auto back = j.get<FieldSpec>();
    CHECK(back.kind == s.kind);
    CHECK(back.range == 4);
    CHECK(back.seed == 9);
    CHECK_THROWS_AS(nlohmann::json({{"kind", "iid_uniform"}, {"c", -2.0}}).get<FieldSpec>(), ValidationError);
}
