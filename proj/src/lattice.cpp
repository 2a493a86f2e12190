#include "tension_lab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"

namespace tension_lab {

Box::Box(std::vector<int> lo, std::vector<int> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.empty()) throw ValidationError("box", "dimension must be at least 1");
    if (lo_.size() != hi_.size()) throw ValidationError("box", "lo and hi differ in length");
    strides_.assign(lo_.size(), 1);
    size_ = 1;
    for (int i = dim() - 1; i >= 0; --i) {
        if (lo_[i] >= hi_[i]) {
            throw ValidationError("box", "lo[" + std::to_string(i) + "] must be < hi[" + std::to_string(i) + "]");
        }
        strides_[i] = size_;
        size_ *= static_cast<std::size_t>(hi_[i] - lo_[i]);
    }
}

Box Box::cube(int m, int n) {
    if (m < 1) throw ValidationError("m", "dimension must be at least 1");
    if (n < 1) throw ValidationError("n", "side length must be at least 1");
    return Box(std::vector<int>(static_cast<std::size_t>(m), 0), std::vector<int>(static_cast<std::size_t>(m), n));
}

std::size_t Box::index(std::span<const int> x) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim(); ++i) idx += static_cast<std::size_t>(x[i] - lo_[i]) * strides_[i];
    return idx;
}

Site Box::site(std::size_t index) const {
    Site x(lo_.size());
    site_into(index, x);
    return x;
}

void Box::site_into(std::size_t index, std::span<int> out) const {
    for (int i = 0; i < dim(); ++i) {
        out[i] = lo_[i] + static_cast<int>(index / strides_[i]);
        index %= strides_[i];
    }
}

bool Box::contains(std::span<const int> x) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
        if (x[i] < lo_[i] || x[i] >= hi_[i]) return false;
    }
    return true;
}

bool Box::on_boundary(std::size_t index) const {
    for (int i = 0; i < dim(); ++i) {
        const int c = static_cast<int>((index / strides_[i]) % static_cast<std::size_t>(extent(i)));
        if (c == 0 || c == extent(i) - 1) return true;
    }
    return false;
}

std::vector<std::size_t> Box::neighbors(std::size_t index) const {
    std::vector<std::size_t> out;
    for (int i = 0; i < dim(); ++i) {
        const int c = static_cast<int>((index / strides_[i]) % static_cast<std::size_t>(extent(i)));
        if (c > 0) out.push_back(index - strides_[i]);
        if (c < extent(i) - 1) out.push_back(index + strides_[i]);
    }
    return out;
}

std::size_t Box::edge_count() const {
    std::size_t total = 0;
    for (int i = 0; i < dim(); ++i) {
        total += size_ / static_cast<std::size_t>(extent(i)) * static_cast<std::size_t>(extent(i) - 1);
    }
    return total;
}

Box Box::translated(std::span<const int> u) const {
    std::vector<int> lo = lo_, hi = hi_;
    for (int i = 0; i < dim(); ++i) {
        lo[i] += u[i];
        hi[i] += u[i];
    }
    return Box(std::move(lo), std::move(hi));
}

int l1_distance(std::span<const int> x, std::span<const int> y) {
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
    return d;
}

std::vector<std::size_t> inner_boundary_indices(const Box& box) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < box.size(); ++k) {
        if (box.on_boundary(k)) out.push_back(k);
    }
    return out;
}

std::vector<Site> inner_boundary(const Box& box) {
    std::vector<Site> out;
    for (std::size_t k : inner_boundary_indices(box)) out.push_back(box.site(k));
    return out;
}

// ---------------------------------------------------------------------------

Slope::Slope(std::vector<double> components) : s_(std::move(components)) {
    if (s_.empty()) throw ValidationError("s", "slope must have at least one component");
    for (double v : s_) {
        if (!std::isfinite(v)) throw ValidationError("s", "slope components must be finite");
    }
    if (sup_norm() > 1.0) throw ValidationError("s", "|s|_inf <= 1 required");
}

double Slope::sup_norm() const {
    double r = 0.0;
    for (double v : s_) r = std::max(r, std::abs(v));
    return r;
}

double Slope::dot(std::span<const int> x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i) acc += s_[i] * static_cast<double>(x[i]);
    return acc;
}

long long Slope::floor_dot(std::span<const int> x) const {
    return static_cast<long long>(std::floor(dot(x)));
}

// ---------------------------------------------------------------------------

bool is_height_function(const HeightFunction& h) {
    if (h.values.size() != h.box.size()) return false;
    const Box& b = h.box;
    for (std::size_t k = 0; k < b.size(); ++k) {
        for (int i = 0; i < b.dim(); ++i) {
            const int c = static_cast<int>((k / b.stride(i)) % static_cast<std::size_t>(b.extent(i)));
            if (c + 1 < b.extent(i) && std::abs(h.values[k] - h.values[k + b.stride(i)]) != 1) return false;
        }
    }
    return true;
}

std::optional<int> BoundaryHeightFunction::value_at(std::size_t raster_index) const {
    auto it = std::lower_bound(sites.begin(), sites.end(), raster_index);
    if (it == sites.end() || *it != raster_index) return std::nullopt;
    return values[static_cast<std::size_t>(it - sites.begin())];
}

BoundaryHeightFunction make_boundary(const Box& box, std::vector<int> values) {
    auto sites = inner_boundary_indices(box);
    if (values.size() != sites.size()) {
        throw ValidationError("boundary", "expected " + std::to_string(sites.size()) + " boundary values, got " +
                                              std::to_string(values.size()));
    }
    return BoundaryHeightFunction{box, std::move(sites), std::move(values)};
}

BoundaryHeightFunction restrict_to_boundary(const HeightFunction& h) {
    auto sites = inner_boundary_indices(h.box);
    std::vector<int> values;
    values.reserve(sites.size());
    for (std::size_t k : sites) values.push_back(h.values[k]);
    return BoundaryHeightFunction{h.box, std::move(sites), std::move(values)};
}

namespace {

bool parity_ok(long long dh, int d) { return ((dh - d) % 2 + 2) % 2 == 0; }

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> find_extendability_violation(
    const BoundaryHeightFunction& hb) {
    const Box& box = hb.box;
    const int m = box.dim();
    std::vector<int> coords(hb.sites.size() * static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        box.site_into(hb.sites[i], std::span<int>(coords).subspan(i * m, m));
    }
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        std::span<const int> x(coords.data() + i * m, m);
        for (std::size_t j = i + 1; j < hb.sites.size(); ++j) {
            std::span<const int> y(coords.data() + j * m, m);
            const int d = l1_distance(x, y);
            const long long dh = static_cast<long long>(hb.values[i]) - hb.values[j];
            if (std::llabs(dh) > d || !parity_ok(dh, d)) return std::make_pair(hb.sites[i], hb.sites[j]);
        }
    }
    return std::nullopt;
}

BoundaryHeightFunction canonical_boundary(const Box& box, const Slope& s) {
    if (s.dim() != box.dim()) throw ValidationError("s", "slope dimension does not match box dimension");
    const int m = box.dim();
    auto sites = inner_boundary_indices(box);
    std::vector<int> coords(sites.size() * static_cast<std::size_t>(m));
    std::vector<int> values(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        std::span<int> x(coords.data() + i * m, m);
        box.site_into(sites[i], x);
        const long long target = s.floor_dot(x);
        int norm = 0;
        for (int c : x) norm += std::abs(c);
        long long v = target;
        if (!parity_ok(v, norm)) v += 1;  // tie between target-1 and target+1 goes up

        // Clamp into the interval left feasible by the sites already fixed.
        long long lo = std::numeric_limits<long long>::min();
        long long hi = std::numeric_limits<long long>::max();
        for (std::size_t j = 0; j < i; ++j) {
            std::span<const int> y(coords.data() + j * m, m);
            const int d = l1_distance(x, y);
            lo = std::max(lo, static_cast<long long>(values[j]) - d);
            hi = std::min(hi, static_cast<long long>(values[j]) + d);
        }
        v = std::clamp(v, lo, hi);
        values[i] = static_cast<int>(v);
    }
    return BoundaryHeightFunction{box, std::move(sites), std::move(values)};
}

Envelope kirszbraun_envelope(const BoundaryHeightFunction& hb) {
    if (auto bad = find_extendability_violation(hb)) {
        throw NotExtendableError(hb.box.site(bad->first), hb.box.site(bad->second),
                                 "boundary data is not extendable: Lipschitz or parity violation");
    }
    const Box& box = hb.box;
    const int m = box.dim();
    std::vector<int> bcoords(hb.sites.size() * static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        box.site_into(hb.sites[i], std::span<int>(bcoords).subspan(i * m, m));
    }
    Envelope env;
    env.lower.resize(box.size());
    env.upper.resize(box.size());
    Site x(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < box.size(); ++k) {
        box.site_into(k, x);
        int lo = std::numeric_limits<int>::min();
        int hi = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i < hb.sites.size(); ++i) {
            const int d = l1_distance(x, std::span<const int>(bcoords.data() + i * m, m));
            lo = std::max(lo, hb.values[i] - d);
            hi = std::min(hi, hb.values[i] + d);
        }
        env.lower[k] = lo;
        env.upper[k] = hi;
    }
    return env;
}

HeightFunction kirszbraun_extend(const BoundaryHeightFunction& hb) {
    Envelope env = kirszbraun_envelope(hb);
    return HeightFunction{hb.box, std::move(env.upper)};
}

// ---------------------------------------------------------------------------

MacroBox default_macro_box(const Box& box, int n) {
    MacroBox r;
    for (int i = 0; i < box.dim(); ++i) {
        r.lo.push_back(static_cast<double>(box.lo()[i]) / n);
        r.hi.push_back(static_cast<double>(box.hi()[i] - 1) / n);
    }
    return r;
}

namespace {

// Calls fn on sample points of the facet piece {x_axis = value} intersected
// with the cube [c - r, c + r] and the region. Returns false if empty.
template <class Fn>
bool for_each_facet_point(const MacroBox& region, int axis, double value, std::span<const double> center,
                          double r, Fn&& fn) {
    const int m = static_cast<int>(region.lo.size());
    if (std::abs(value - center[axis]) > r + 1e-12) return false;
    std::vector<double> a(m), b(m);
    for (int i = 0; i < m; ++i) {
        if (i == axis) {
            a[i] = b[i] = value;
            continue;
        }
        a[i] = std::max(region.lo[i], center[i] - r);
        b[i] = std::min(region.hi[i], center[i] + r);
        if (a[i] > b[i] + 1e-12) return false;
        b[i] = std::max(a[i], b[i]);
    }
    constexpr int kPerAxis = 5;
    std::vector<int> counter(m, 0);
    std::vector<double> x(m);
    while (true) {
        for (int i = 0; i < m; ++i) {
            x[i] = (i == axis) ? value : a[i] + (b[i] - a[i]) * counter[i] / (kPerAxis - 1);
        }
        fn(std::span<const double>(x));
        int i = 0;
        for (; i < m; ++i) {
            if (i == axis) continue;
            if (++counter[i] < kPerAxis) break;
            counter[i] = 0;
        }
        if (i == m) break;
    }
    return true;
}

}  // namespace

double boundary_profile_distance(const BoundaryHeightFunction& hb, const MacroProfile& profile, int n,
                                 const std::optional<MacroBox>& region_opt) {
    if (hb.sites.empty()) throw ValidationError("boundary", "empty boundary");
    if (n < 1) throw ValidationError("n", "scale must be positive");
    const Box& box = hb.box;
    const int m = box.dim();
    const MacroBox region = region_opt.value_or(default_macro_box(box, n));
    const double r = 0.5 / n;
    double worst = 0.0;
    bool any = false;
    Site z(static_cast<std::size_t>(m));
    std::vector<double> c(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        box.site_into(hb.sites[i], z);
        for (int a = 0; a < m; ++a) c[a] = static_cast<double>(z[a]) / n;
        const double scaled = static_cast<double>(hb.values[i]) / n;
        auto visit = [&](std::span<const double> x) {
            any = true;
            worst = std::max(worst, std::abs(scaled - profile(x)));
        };
        for (int axis = 0; axis < m; ++axis) {
            for_each_facet_point(region, axis, region.lo[axis], c, r, visit);
            for_each_facet_point(region, axis, region.hi[axis], c, r, visit);
        }
    }
    if (!any) throw ValidationError("boundary", "no boundary site lies near the region boundary");
    return worst;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Box& box) { j = nlohmann::json{{"lo", box.lo()}, {"hi", box.hi()}}; }

void from_json(const nlohmann::json& j, Box& box) {
    box = Box(j.at("lo").get<std::vector<int>>(), j.at("hi").get<std::vector<int>>());
}

nlohmann::json boundary_to_json(const BoundaryHeightFunction& hb) {
    nlohmann::json j;
    j["lo"] = hb.box.lo();
    j["hi"] = hb.box.hi();
    auto values = nlohmann::json::array();
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        values.push_back({{"site", hb.box.site(hb.sites[i])}, {"h", hb.values[i]}});
    }
    j["values"] = std::move(values);
    return j;
}

BoundaryHeightFunction boundary_from_json(const nlohmann::json& j) {
    Box box = j.get<Box>();
    auto sites = inner_boundary_indices(box);
    std::vector<int> values(sites.size());
    std::vector<bool> seen(sites.size(), false);
    for (const auto& entry : j.at("values")) {
        const auto x = entry.at("site").get<Site>();
        if (!box.contains(x)) throw ValidationError("boundary", "site outside box");
        const std::size_t k = box.index(x);
        auto it = std::lower_bound(sites.begin(), sites.end(), k);
        if (it == sites.end() || *it != k) throw ValidationError("boundary", "site is not on the inner boundary");
        const auto pos = static_cast<std::size_t>(it - sites.begin());
        values[pos] = entry.at("h").get<int>();
        seen[pos] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw ValidationError("boundary", "missing values for some boundary sites");
    }
    return BoundaryHeightFunction{std::move(box), std::move(sites), std::move(values)};
}

nlohmann::json height_function_to_json(const HeightFunction& h) {
    nlohmann::json j;
    j["lo"] = h.box.lo();
    j["hi"] = h.box.hi();
    auto values = nlohmann::json::array();
    for (std::size_t k = 0; k < h.box.size(); ++k) values.push_back({{"site", h.box.site(k)}, {"h", h.values[k]}});
    j["values"] = std::move(values);
    return j;
}

}  // namespace tension_lab
