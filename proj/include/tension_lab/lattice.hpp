#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tension_lab {

using Site = std::vector<int>;

/// Axis-aligned integer box [lo, hi) in Z^m. Sites are addressed by a raster
/// index in which the last coordinate varies fastest (lexicographic order).
class Box {
public:
    /// The single site {0} in Z^1.
    Box() : Box({0}, {1}) {}
    Box(std::vector<int> lo, std::vector<int> hi);

    /// The cube S_n = {0, ..., n-1}^m.
    static Box cube(int m, int n);

    int dim() const noexcept { return static_cast<int>(lo_.size()); }
    const std::vector<int>& lo() const noexcept { return lo_; }
    const std::vector<int>& hi() const noexcept { return hi_; }
    int extent(int axis) const { return hi_[axis] - lo_[axis]; }
    std::size_t size() const noexcept { return size_; }
    std::size_t stride(int axis) const { return strides_[axis]; }

    std::size_t index(std::span<const int> x) const;
    Site site(std::size_t index) const;
    void site_into(std::size_t index, std::span<int> out) const;
    bool contains(std::span<const int> x) const;
    bool on_boundary(std::size_t index) const;

    /// Raster indices of the in-box lattice neighbours of a site.
    std::vector<std::size_t> neighbors(std::size_t index) const;

    /// Number of unordered nearest-neighbour pairs inside the box.
    std::size_t edge_count() const;

    Box translated(std::span<const int> u) const;

    friend bool operator==(const Box&, const Box&) = default;

private:
    std::vector<int> lo_;
    std::vector<int> hi_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

int l1_distance(std::span<const int> x, std::span<const int> y);

/// Raster indices of the inner boundary, in increasing order.
std::vector<std::size_t> inner_boundary_indices(const Box& box);
std::vector<Site> inner_boundary(const Box& box);

/// Macroscopic slope with |s|_inf <= 1.
class Slope {
public:
    explicit Slope(std::vector<double> components);
    static Slope zero(int m) { return Slope(std::vector<double>(static_cast<std::size_t>(m), 0.0)); }

    int dim() const noexcept { return static_cast<int>(s_.size()); }
    const std::vector<double>& components() const noexcept { return s_; }
    double operator[](int i) const { return s_[static_cast<std::size_t>(i)]; }
    double sup_norm() const;
    double dot(std::span<const int> x) const;
    /// floor(s . x), the linear reference height at a lattice site.
    long long floor_dot(std::span<const int> x) const;

private:
    std::vector<double> s_;
};

/// Integer heights on every site of a box, raster order.
struct HeightFunction {
    Box box;
    std::vector<int> values;

    int operator[](std::size_t index) const { return values[index]; }
    int at(std::span<const int> x) const { return values[box.index(x)]; }
};

/// True iff every neighbour pair differs by exactly one.
bool is_height_function(const HeightFunction& h);

/// Heights on the inner boundary of a box. `sites` holds raster indices in
/// increasing order; `values[i]` belongs to `sites[i]`.
struct BoundaryHeightFunction {
    Box box;
    std::vector<std::size_t> sites;
    std::vector<int> values;

    std::optional<int> value_at(std::size_t raster_index) const;
};

BoundaryHeightFunction make_boundary(const Box& box, std::vector<int> values);
BoundaryHeightFunction restrict_to_boundary(const HeightFunction& h);

/// A pair of boundary raster indices violating |h(x)-h(y)| <= d(x,y) or the
/// parity constraint, if any.
std::optional<std::pair<std::size_t, std::size_t>> find_extendability_violation(
    const BoundaryHeightFunction& hb);

/// Deterministic canonical boundary of slope s: parity class h(x) = |x|_1
/// (mod 2), nearest correct-parity integer to floor(s.x) with ties broken
/// upward, then clamped into the feasible interval left by previously fixed
/// sites (lexicographic order) so the result is always extendable.
BoundaryHeightFunction canonical_boundary(const Box& box, const Slope& s);

struct Envelope {
    std::vector<int> lower;
    std::vector<int> upper;
};

/// Pointwise minimal and maximal extensions of the boundary data. Throws
/// NotExtendableError carrying a witness pair if no extension exists.
Envelope kirszbraun_envelope(const BoundaryHeightFunction& hb);

/// The maximal extension h_max.
HeightFunction kirszbraun_extend(const BoundaryHeightFunction& hb);

/// Rectangle [lo, hi] in R^m standing for the macroscopic region whose
/// boundary the rescaled box boundary approximates.
struct MacroBox {
    std::vector<double> lo;
    std::vector<double> hi;
};

/// Default macroscopic region of a box at scale n: [lo/n, (hi-1)/n].
MacroBox default_macro_box(const Box& box, int n);

using MacroProfile = std::function<double(std::span<const double>)>;

/// sup over boundary sites z with S(z) nonempty of sup_{x in S(z)}
/// |h(z)/n - profile(x)|, where S(z) is the part of the region boundary
/// within sup-distance 1/(2n) of z/n. The inner sup is taken over the
/// corners and a 5-point-per-axis grid of each boundary facet piece.
double boundary_profile_distance(const BoundaryHeightFunction& hb, const MacroProfile& profile,
                                 int n, const std::optional<MacroBox>& region = std::nullopt);

void to_json(nlohmann::json& j, const Box& box);
void from_json(const nlohmann::json& j, Box& box);
nlohmann::json boundary_to_json(const BoundaryHeightFunction& hb);
BoundaryHeightFunction boundary_from_json(const nlohmann::json& j);
nlohmann::json height_function_to_json(const HeightFunction& h);

}  // namespace tension_lab
