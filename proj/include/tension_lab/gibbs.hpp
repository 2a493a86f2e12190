#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tension_lab/lattice.hpp"
#include "tension_lab/random_field.hpp"

namespace tension_lab {

using BigCount = boost::multiprecision::cpp_int;

/// Natural log of a partition function together with what it was computed for.
struct LogPartition {
    double value = 0.0;
    Box box;
    std::string boundary;  // "fixed" or "free(delta=...,radius=...)"
    std::string field;     // Field::fingerprint()
};

/// Inclusive per-site height windows [lower[k], upper[k]] in raster order.
/// Both parities are allowed; the neighbour constraint selects them.
struct SiteWindows {
    std::vector<int> lower;
    std::vector<int> upper;
};

struct DpLimits {
    /// Upper bound on live frontier states; exceeding it raises InfeasibleError.
    std::size_t max_states = 4'000'000;
};

/// H(h) = sum over unordered neighbour pairs {x, y} of w(min(h(x), h(y))).
double hamiltonian(const HeightFunction& h, const EdgeWeights& w);
double hamiltonian(const HeightFunction& h, const Field& f);

/// Windows for fixed boundary data: points on the boundary, the Kirszbraun
/// envelope inside. Throws NotExtendableError.
SiteWindows fixed_windows(const BoundaryHeightFunction& hb);

/// Frontier dynamic programme over raster order. The state is the last
/// stride(0) heights, which contain every backward neighbour of the next site.
BigCount count_windows(const Box& box, const SiteWindows& windows, const DpLimits& limits = {});
double log_partition_windows(const Box& box, const SiteWindows& windows, const EdgeWeights& w,
                             const DpLimits& limits = {});

/// |M(box, hb)|; zero when the data is not extendable.
BigCount count_extensions(const BoundaryHeightFunction& hb, const DpLimits& limits = {});

/// ln Z for fixed boundary data. Throws NotExtendableError.
LogPartition log_partition(const BoundaryHeightFunction& hb, const Field& f, const DpLimits& limits = {});
double log_partition(const BoundaryHeightFunction& hb, const EdgeWeights& w, const DpLimits& limits = {});

/// Integer radius of the free(delta) window: |h(x) - floor(s.x)| <= radius on
/// the boundary. radius = max(floor(delta * n), 1), so the canonical boundary
/// (which deviates from floor(s.x) by at most one) is always admissible.
int free_window_radius(int n, double delta);

/// Windows of M^free(delta)_n(s) on a cube box of side n.
SiteWindows free_windows(const Box& box, const Slope& s, double delta);

/// ln of the sum over M^free(delta)_n(s) of exp(H). Throws InfeasibleError if
/// the set is empty.
LogPartition free_log_partition(const Box& box, const Slope& s, double delta, const Field& f,
                                const DpLimits& limits = {});
double free_log_partition(const Box& box, const Slope& s, double delta, const EdgeWeights& w,
                          const DpLimits& limits = {});

/// Depth-first enumeration of every height function inside the windows.
/// The callback receives the raster-order heights and H.
void enumerate_windows(const Box& box, const SiteWindows& windows, const EdgeWeights& w,
                       const std::function<void(const std::vector<int>&, double)>& visit);

struct Configuration {
    std::vector<int> values;
    double energy = 0.0;
    double probability = 0.0;
};

struct ExactDistribution {
    Box box;
    double log_z = 0.0;
    std::vector<Configuration> configurations;  // in enumeration (lexicographic) order
};

/// The quenched Gibbs measure as an explicit table. Throws InfeasibleError
/// when |M| exceeds `cap`.
ExactDistribution exact_distribution(const BoundaryHeightFunction& hb, const EdgeWeights& w,
                                     std::size_t cap = 1'000'000);
ExactDistribution exact_distribution(const BoundaryHeightFunction& hb, const Field& f,
                                     std::size_t cap = 1'000'000);

/// Numerically stable ln(sum exp(v)).
double log_sum_exp(const std::vector<double>& v);

}  // namespace tension_lab
