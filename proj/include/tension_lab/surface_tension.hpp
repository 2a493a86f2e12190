#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tension_lab/gibbs.hpp"
#include "tension_lab/lattice.hpp"
#include "tension_lab/random_field.hpp"

namespace tension_lab {

enum class TensionKind { fixed, free, annealed };
std::string to_string(TensionKind kind);

/// One estimate of the microscopic surface tension at slope s on S_n.
struct TensionSample {
    std::vector<double> s;
    int n = 0;
    TensionKind kind = TensionKind::fixed;
    double value = 0.0;
    double stderr_ = 0.0;  // annealed only
    double delta = 0.0;    // free only
    int samples = 1;
    std::string field;  // fingerprint (fixed/free) or spec summary (annealed)
};

/// ent = -(1/n^m) ln Z on S_n with canonical boundary data of slope s.
double ent_fixed(const Slope& s, int n, const EdgeWeights& w, const DpLimits& limits = {});
double ent_fixed(const Slope& s, int n, const Field& f, const DpLimits& limits = {});

/// Free(delta) boundary version.
double ent_free(const Slope& s, int n, double delta, const EdgeWeights& w, const DpLimits& limits = {});
double ent_free(const Slope& s, int n, double delta, const Field& f, const DpLimits& limits = {});

struct AnnealedEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double stddev = 0.0;          // sample standard deviation across seeds
    std::vector<double> values;   // per seed, in seed order
};

/// Seeds are derive_seed(spec.seed, i) for i < samples.
AnnealedEstimate ent_annealed(const Slope& s, int n, const FieldSpec& spec, int samples, unsigned threads = 0);

/// Mean / stderr / standard deviation of a sample.
AnnealedEstimate summarize(std::vector<double> values);

/// ent_fixed(s, n, f) along n_list with one fixed realisation.
std::vector<TensionSample> convergence_study(const Slope& s, const Field& f, const std::vector<int>& n_list,
                                             unsigned threads = 0);

/// Cross-realisation spread of ent_fixed per n (one annealed sample per n).
std::vector<TensionSample> cross_omega_study(const Slope& s, const FieldSpec& spec, const std::vector<int>& n_list,
                                             int samples, unsigned threads = 0);

struct SandwichReport {
    std::vector<double> s;
    int n = 0;
    double delta = 0.0;
    int radius = 0;
    double C = 0.0;          // 2 / (1 - |s|_inf)
    int n_prime = 0;         // n + ceil(C delta n)
    double field_bound = 0.0;
    long long edge_difference = 0;  // |E(S_n')| - |E(S_n)|
    double ent_fixed_n = 0.0;
    double ent_free_n = 0.0;
    double ent_fixed_n_prime = 0.0;
    double error_term = 0.0;        // C_w * edge_difference / n^m
    double lower_bound = 0.0;       // (n'/n)^m ent_fixed(n') - error_term
    double literal_lower_bound = 0.0;  // (1 + C delta)^{-m} ent_fixed(n') - error_term
    double slack_upper = 0.0;       // ent_fixed(n) - ent_free(n)
    double slack_lower = 0.0;       // ent_free(n) - lower_bound
    double slack_literal = 0.0;     // ent_free(n) - literal_lower_bound
    bool holds() const { return slack_upper >= 0.0 && slack_lower >= 0.0; }
};

SandwichReport sandwich_check(const Slope& s, int n, double delta, const Field& f, const DpLimits& limits = {});

/// Regular slope grid: `points` values per axis on [-(1-margin), 1-margin].
struct SlopeGrid {
    int m = 1;
    int points = 9;
    double margin = 0.05;

    void validate() const;
    std::vector<double> axis() const;
    std::size_t size() const;
    /// Slope at flat index (last axis fastest).
    std::vector<double> at(std::size_t index) const;
};

/// A scalar function of the slope together with a (sub)gradient.
struct TensionFunction {
    int m = 1;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
};

/// Tabulated surface tension over a SlopeGrid. Evaluation is multilinear
/// interpolation, extended linearly from the edge cells outside the grid.
struct SurfaceTensionTable {
    SlopeGrid grid;
    std::vector<double> raw;
    std::vector<double> stderr_;
    std::vector<double> values;  // what evaluate() uses
    bool convexified = false;
    FieldSpec spec;
    int n = 0;
    int samples = 0;

    double evaluate(std::span<const double> s) const;
    /// Gradient of the interpolant in the cell containing s.
    void gradient(std::span<const double> s, std::span<double> out) const;
    TensionFunction as_function() const;
};

/// Lower convex envelope of the samples (x_i, v_i). 1D: monotone chain.
/// 2D: per point, min sum l_i v_i over convex weights reproducing the point.
std::vector<double> lower_convex_envelope(const SlopeGrid& grid, const std::vector<double>& values);
void convexify(SurfaceTensionTable& table);

SurfaceTensionTable tabulate_tension(const FieldSpec& spec, int n, int samples, const SlopeGrid& grid,
                                     unsigned threads = 0);

nlohmann::json table_to_json(const SurfaceTensionTable& table);
SurfaceTensionTable table_from_json(const nlohmann::json& j);

nlohmann::json sample_to_json(const TensionSample& t);
nlohmann::json sandwich_to_json(const SandwichReport& r);

/// CSV rows: s_1..s_m, n, kind, value, stderr.
void write_tension_csv(std::ostream& os, const std::vector<TensionSample>& rows);

}  // namespace tension_lab
