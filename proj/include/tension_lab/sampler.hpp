#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "tension_lab/gibbs.hpp"
#include "tension_lab/lattice.hpp"
#include "tension_lab/random_field.hpp"

namespace tension_lab {

/// Uniform on [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::mt19937_64& rng);

struct ChainState {
    HeightFunction current;
    std::vector<std::size_t> interior;  // raster indices of non-boundary sites
    std::uint64_t stream = 0;           // seed of the engine
    std::uint64_t sweeps = 0;
    std::mt19937_64 rng;
};

/// Chain started from the maximal Kirszbraun extension. Throws NotExtendableError.
ChainState make_chain(const BoundaryHeightFunction& hb, std::uint64_t seed);

/// Conditional law of one interior site given its neighbours. When every
/// neighbour equals a, the site takes a-1 with probability p_low, else a+1;
/// otherwise it is forced.
struct SiteConditional {
    bool forced = true;
    int low = 0;  // a - 1
    double p_low = 1.0;
};
SiteConditional heat_bath_conditional(const HeightFunction& h, std::size_t site, const EdgeWeights& w);

/// One sweep: every interior site in raster order (or, with random_scan, as
/// many uniformly chosen interior sites) is resampled from its conditional.
void heat_bath_sweep(ChainState& state, const EdgeWeights& w, bool random_scan = false);

struct SamplerOptions {
    std::uint64_t sweeps = 1000;  // post-burn-in sweeps
    long long burn_in = -1;       // < 0: 100 * interior sites
    std::uint64_t thin = 10;      // keep every thin-th sweep
    std::uint64_t seed = 0;
    bool random_scan = false;
    int chains = 1;               // independent chains, seeds derive_seed(seed, c)
};

struct Snapshot {
    int chain = 0;
    std::uint64_t sweep = 0;  // post-burn-in sweep count of the chain
    std::vector<int> values;  // raster order
};

struct SampleRun {
    Box box;
    std::vector<Snapshot> snapshots;  // chain-major, sweep order
};

/// sweeps = 0 returns the initial (Kirszbraun) state only, without burn-in.
SampleRun sample(const BoundaryHeightFunction& hb, const EdgeWeights& w, const SamplerOptions& opt,
                 unsigned threads = 0);
SampleRun sample(const BoundaryHeightFunction& hb, const Field& f, const SamplerOptions& opt, unsigned threads = 0);

/// Distribution after one raster sweep started from `dist`, computed exactly
/// over the configuration table.
std::vector<double> apply_sweep_kernel(const ExactDistribution& dist, const EdgeWeights& w);

/// Total variation distance between the empirical law of the snapshots and the table.
double total_variation(const SampleRun& run, const ExactDistribution& dist);

/// Reference profile, spacing and tolerance of an HP ball.
struct HPBallSpec {
    MacroProfile reference;
    double delta = 0.0;
    double eps = 0.0;

    void validate() const;
};

/// Whether x/n lies on the eps-grid: some |x_k| / n is a multiple of eps.
bool on_eps_grid(std::span<const int> x, int n, double eps);

/// sup over grid sites of |h(x)/n - reference(x/n)|. ValidationError if no site is on the grid.
double hp_ball_distance(const HeightFunction& h, const HPBallSpec& spec, int n);
bool hp_ball_contains(const HeightFunction& h, const HPBallSpec& spec, int n);

struct ConcentrationResult {
    std::size_t samples = 0;
    std::size_t inside = 0;
    double fraction = 0.0;
    double max_distance = 0.0;
    double mean_distance = 0.0;
};

/// Samples mu_w on S_n with canonical slope-s data and counts snapshots in
/// HP_n(affine s.x, delta, eps). spec.reference is ignored.
ConcentrationResult concentration_experiment(int n, const Slope& s, const Field& f, double delta, double eps,
                                             const SamplerOptions& opt, unsigned threads = 0);

/// Long CSV: chain, sweep, x_1..x_m, height.
void write_samples_csv(std::ostream& os, const SampleRun& run);

/// Little-endian binary: int32 m, int32 lo[m], int32 hi[m], uint64 count,
/// then count records of int32 heights in raster order.
void write_samples_binary(std::ostream& os, const SampleRun& run);
SampleRun read_samples_binary(std::istream& is);

}  // namespace tension_lab
