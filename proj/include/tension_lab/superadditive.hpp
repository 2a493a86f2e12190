#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tension_lab/gibbs.hpp"
#include "tension_lab/lattice.hpp"
#include "tension_lab/random_field.hpp"

namespace tension_lab {

/// F_B = ln Z on B with canonical boundary data of slope s.
double process_F(const Box& box, const Field& f, const Slope& s, const DpLimits& limits = {});

/// Whether translating a box by u moves canonical boundary data by exactly
/// floor(s.u): s.u must be an integer with the same parity as |u|_1.
bool translation_compatible(std::span<const int> u, const Slope& s);

struct TranslationCheck {
    double shifted_box = 0.0;    // F_{u+B}(w)
    double shifted_field = 0.0;  // F_B(tau_u w)
    bool applicable = false;
    bool pass() const { return applicable && shifted_box == shifted_field; }
};
TranslationCheck translation_check(const Box& box, std::span<const int> u, const Field& f, const Slope& s);

struct BoxPartition {
    Box parent;
    std::vector<Box> parts;

    /// Throws ValidationError unless the parts are non-empty, disjoint and cover the parent.
    void validate() const;
};

/// Recursive axis splits at uniform cut points, down to `max_depth` levels.
BoxPartition random_partition(const Box& parent, std::mt19937_64& rng, int max_depth = 3);

struct DefectReport {
    double parent_F = 0.0;
    double parts_F = 0.0;        // sum over parts
    long long boundary_sites = 0;  // sum of |inner boundary of B_i|
    double A = 0.0;              // m * C_w, or m * realised sup in strict mode
    double defect = 0.0;         // parent_F - parts_F + A * boundary_sites
    bool pass() const { return defect >= 0.0; }
};

/// F_B - sum F_{B_i} + A sum |dB_i| with A = m * C_w. In strict mode C_w is
/// replaced by the largest |w| on the height edges reachable inside the parent.
DefectReport superadditivity_defect(const BoxPartition& p, const Field& f, const Slope& s, bool strict = false);

struct CoverInstance {
    std::vector<Site> W;
    std::vector<int> n;  // n[i] >= 1 is the side of the box anchored at W[i]

    void validate() const;
};

struct CoverResult {
    std::vector<std::size_t> selected;  // indices into W, in selection order
    long long covered_volume = 0;       // sum over selected of n^m
    long long bound = 0;                // 3^m * covered_volume
    bool disjoint = false;
    bool pass() const;
    std::size_t total = 0;              // |W|
};

/// Greedy Wiener selection: candidates by decreasing n, ties by increasing
/// site, kept when disjoint from everything already selected.
CoverResult wiener_cover(const CoverInstance& inst, int m);

/// Independent audit of a selection.
bool boxes_disjoint(const CoverInstance& inst, const std::vector<std::size_t>& selected);

struct GammaPoint {
    int n = 0;
    double mean = 0.0;  // (1/n^m) E[F_{S_n}]
    double stderr_ = 0.0;
    int samples = 0;
};

/// Uses the same seeds as ent_annealed, so mean = -ent_annealed exactly.
std::vector<GammaPoint> empirical_gamma(const FieldSpec& spec, const Slope& s, const std::vector<int>& n_list,
                                        int samples, unsigned threads = 0);

struct MaximalProbe {
    double alpha = 0.0;
    int n_max = 0;
    int trials = 0;
    double gamma = 0.0;            // max over n <= n_max of mean F'_{S_n} / |S_n|
    double empirical_prob = 0.0;   // fraction of trials with sup_n F'/|S_n| > alpha
    double bound = 0.0;            // 3^m gamma / alpha
    double tolerance = 0.0;        // 3 * binomial stderr
    bool pass() const { return empirical_prob <= bound + tolerance; }
};

/// F' = F + m C_w |B| >= 0 (every height function has H >= -C_w |E(B)|).
MaximalProbe maximal_inequality_probe(const FieldSpec& spec, const Slope& s, double alpha, int n_max, int trials,
                                      unsigned threads = 0);

/// Stable 64-bit FNV-1a of a string, printed as 16 hex digits.
std::string instance_hash(const std::string& text);

/// One JSON-lines record {check, instance, value, pass}.
nlohmann::json report_line(const std::string& check, const std::string& instance, const std::string& value_name,
                           double value, bool pass);

}  // namespace tension_lab
