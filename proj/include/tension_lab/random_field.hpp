#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "tension_lab/lattice.hpp"

namespace tension_lab {

/// splitmix64 output function.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Value of the counter-based stream `seed` at position `counter`, uniform on [0, 1).
double counter_uniform(std::uint64_t seed, std::int64_t counter) noexcept;

/// Per-task seed derived from a master seed: mix64(master ^ mix64(index + 0x632BE59BD9B4E019)).
/// Independent of scheduling, so parallel runs reproduce serial ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

enum class FieldKind { iid_uniform, iid_rademacher, random_phase_periodic, finite_range_ma };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// Law of a stationary, ergodic, bounded, mean-zero edge field on E(Z).
///
///  - iid_uniform:           w_k uniform on [-c, c)
///  - iid_rademacher:        w_k = +-c with probability 1/2
///  - random_phase_periodic: w_k = c cos(2 pi (k + phase) / period), one uniform
///                           phase in {0, ..., period-1} drawn from the seed
///  - finite_range_ma:       w_k = c * sum_{j<range} xi_{k+j}, xi iid uniform on [-1, 1)
struct FieldSpec {
    FieldKind kind = FieldKind::iid_uniform;
    double c = 0.0;
    int period = 2;
    int range = 1;
    std::uint64_t seed = 0;

    /// Almost-sure bound C_w on |w_e|.
    double bound() const noexcept;
    void validate() const;

    static FieldSpec zero() { return FieldSpec{}; }
    FieldSpec with_seed(std::uint64_t s) const {
        FieldSpec out = *this;
        out.seed = s;
        return out;
    }
};

void to_json(nlohmann::json& j, const FieldSpec& spec);
void from_json(const nlohmann::json& j, FieldSpec& spec);

/// Edge weights as a function of the lower endpoint k of the height edge {k, k+1}.
using EdgeWeights = std::function<double(long long)>;

/// A realisation of a FieldSpec, viewed through an accumulated shift:
/// at(k) is the weight of the height edge {k, k+1} of the shifted field.
class Field {
public:
    explicit Field(FieldSpec spec, long long shift = 0);

    const FieldSpec& spec() const noexcept { return spec_; }
    long long shift() const noexcept { return shift_; }
    double bound() const noexcept { return spec_.bound(); }

    double at(long long k) const;
    EdgeWeights weights() const;

    /// Stable textual identity of (spec, shift), used in reports.
    std::string fingerprint() const;

private:
    FieldSpec spec_;
    long long shift_;
    int phase_ = 0;
};

Field shift_field(const Field& f, long long z);

/// The shift tau_u, which translates heights by floor(u . s).
Field slope_shift(const Field& f, std::span<const int> u, const Slope& s);

}  // namespace tension_lab
