#include "tension_lab/random_field.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"

namespace tension_lab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

double counter_uniform(std::uint64_t seed, std::int64_t counter) noexcept {
    const std::uint64_t state = mix64(seed) + (static_cast<std::uint64_t>(counter) + 1ULL) * kGolden;
    return static_cast<double>(mix64(state) >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::iid_uniform: return "iid_uniform";
        case FieldKind::iid_rademacher: return "iid_rademacher";
        case FieldKind::random_phase_periodic: return "random_phase_periodic";
        case FieldKind::finite_range_ma: return "finite_range_ma";
    }
    return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
    if (name == "iid_uniform") return FieldKind::iid_uniform;
    if (name == "iid_rademacher") return FieldKind::iid_rademacher;
    if (name == "random_phase_periodic") return FieldKind::random_phase_periodic;
    if (name == "finite_range_ma") return FieldKind::finite_range_ma;
    throw ValidationError("field.kind", "unknown field kind '" + name + "'");
}

double FieldSpec::bound() const noexcept {
    return kind == FieldKind::finite_range_ma ? c * range : c;
}

void FieldSpec::validate() const {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("field.c", "amplitude must be finite and >= 0");
    if (kind == FieldKind::random_phase_periodic && period < 2) {
        throw ValidationError("field.period", "period >= 2 required for a mean-zero periodic pattern");
    }
    if (kind == FieldKind::finite_range_ma && range < 1) throw ValidationError("field.range", "range >= 1 required");
}

void to_json(nlohmann::json& j, const FieldSpec& spec) {
    j = nlohmann::json{{"kind", to_string(spec.kind)},
                       {"c", spec.c},
                       {"period", spec.period},
                       {"range", spec.range},
                       {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, FieldSpec& spec) {
    spec = FieldSpec{};
    spec.kind = field_kind_from_string(j.value("kind", std::string("iid_uniform")));
    spec.c = j.value("c", 0.0);
    spec.period = j.value("period", 2);
    spec.range = j.value("range", 1);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
}

Field::Field(FieldSpec spec, long long shift) : spec_(spec), shift_(shift) {
    spec_.validate();
    if (spec_.kind == FieldKind::random_phase_periodic) {
        phase_ = static_cast<int>(mix64(spec_.seed ^ 0xD1B54A32D192ED03ULL) % static_cast<std::uint64_t>(spec_.period));
    }
}

double Field::at(long long k) const {
    const long long idx = k + shift_;
    const double c = spec_.c;
    if (c == 0.0) return 0.0;
    switch (spec_.kind) {
        case FieldKind::iid_uniform:
            return c * (2.0 * counter_uniform(spec_.seed, idx) - 1.0);
        case FieldKind::iid_rademacher:
            return counter_uniform(spec_.seed, idx) < 0.5 ? -c : c;
        case FieldKind::random_phase_periodic: {
            const long long p = spec_.period;
            const long long j = ((idx + phase_) % p + p) % p;
            if (p == 2) return j == 0 ? c : -c;
            return c * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(p));
        }
        case FieldKind::finite_range_ma: {
            double acc = 0.0;
            for (int j = 0; j < spec_.range; ++j) acc += 2.0 * counter_uniform(spec_.seed, idx + j) - 1.0;
            return c * acc;
        }
    }
    return 0.0;
}

EdgeWeights Field::weights() const {
    return [f = *this](long long k) { return f.at(k); };
}

std::string Field::fingerprint() const {
    std::ostringstream os;
    os << to_string(spec_.kind) << ":c=" << spec_.c << ":period=" << spec_.period << ":range=" << spec_.range
       << ":seed=" << spec_.seed << ":shift=" << shift_;
    return os.str();
}

Field shift_field(const Field& f, long long z) { return Field(f.spec(), f.shift() + z); }

Field slope_shift(const Field& f, std::span<const int> u, const Slope& s) {
    return shift_field(f, s.floor_dot(u));
}

}  // namespace tension_lab
