#include "tension_lab/superadditive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"
#include "tension_lab/parallel.hpp"
#include "tension_lab/surface_tension.hpp"

namespace tension_lab {

double process_F(const Box& box, const Field& f, const Slope& s, const DpLimits& limits) {
    return log_partition(canonical_boundary(box, s), f.weights(), limits);
}

bool translation_compatible(std::span<const int> u, const Slope& s) {
    if (static_cast<int>(u.size()) != s.dim()) return false;
    const double su = s.dot(u);
    if (su != std::floor(su)) return false;
    long long norm = 0;
    for (int c : u) norm += std::abs(c);
    return ((static_cast<long long>(su) - norm) % 2 + 2) % 2 == 0;
}

TranslationCheck translation_check(const Box& box, std::span<const int> u, const Field& f, const Slope& s) {
    TranslationCheck c;
    c.applicable = translation_compatible(u, s);
    c.shifted_box = process_F(box.translated(u), f, s);
    c.shifted_field = process_F(box, slope_shift(f, u, s), s);
    return c;
}

void BoxPartition::validate() const {
    if (parts.empty()) throw ValidationError("partition", "no parts");
    std::vector<int> owner(parent.size(), -1);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Box& b = parts[i];
        if (b.dim() != parent.dim()) throw ValidationError("partition", "part dimension mismatch");
        for (std::size_t k = 0; k < b.size(); ++k) {
            const Site x = b.site(k);
            if (!parent.contains(x)) throw ValidationError("partition", "part leaves the parent box");
            int& o = owner[parent.index(x)];
            if (o != -1) throw ValidationError("partition", "parts overlap");
            o = static_cast<int>(i);
        }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
        throw ValidationError("partition", "parts do not cover the parent");
    }
}

namespace {

void split(const Box& b, std::mt19937_64& rng, int depth, std::vector<Box>& out) {
    std::vector<int> axes;
    for (int i = 0; i < b.dim(); ++i)
        if (b.extent(i) >= 2) axes.push_back(i);
    if (depth == 0 || axes.empty() || rng() % 4 == 0) {
        out.push_back(b);
        return;
    }
    const int axis = axes[rng() % axes.size()];
    const int cut = b.lo()[axis] + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(b.extent(axis) - 1));
    auto hi1 = b.hi();
    hi1[axis] = cut;
    auto lo2 = b.lo();
    lo2[axis] = cut;
    split(Box(b.lo(), hi1), rng, depth - 1, out);
    split(Box(lo2, b.hi()), rng, depth - 1, out);
}

// Largest |w| over height edges k with min envelope <= k < max envelope.
double realised_sup(const Box& box, const Field& f, const Slope& s) {
    const auto env = kirszbraun_envelope(canonical_boundary(box, s));
    const int lo = *std::min_element(env.lower.begin(), env.lower.end());
    const int hi = *std::max_element(env.upper.begin(), env.upper.end());
    double mx = 0.0;
    for (long long k = lo; k < hi; ++k) mx = std::max(mx, std::abs(f.at(k)));
    return mx;
}

}  // namespace

BoxPartition random_partition(const Box& parent, std::mt19937_64& rng, int max_depth) {
    BoxPartition p{parent, {}};
    split(parent, rng, max_depth, p.parts);
    return p;
}

DefectReport superadditivity_defect(const BoxPartition& p, const Field& f, const Slope& s, bool strict) {
    p.validate();
    DefectReport r;
    const int m = p.parent.dim();
    r.parent_F = process_F(p.parent, f, s);
    for (const Box& b : p.parts) {
        r.parts_F += process_F(b, f, s);
        r.boundary_sites += static_cast<long long>(inner_boundary_indices(b).size());
    }
    r.A = m * (strict ? realised_sup(p.parent, f, s) : f.bound());
    r.defect = r.parent_F - r.parts_F + r.A * static_cast<double>(r.boundary_sites);
    return r;
}

void CoverInstance::validate() const {
    if (W.size() != n.size()) throw ValidationError("cover", "one n(u) per site required");
    for (int v : n)
        if (v < 1) throw ValidationError("cover.n", "n(u) >= 1 required");
    if (!W.empty()) {
        for (const auto& u : W)
            if (u.size() != W.front().size()) throw ValidationError("cover.W", "mixed dimensions");
    }
}

bool CoverResult::pass() const { return disjoint && bound >= static_cast<long long>(total); }

namespace {

bool overlap(const Site& a, int na, const Site& b, int nb) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] + na <= b[i] || b[i] + nb <= a[i]) return false;
    }
    return true;
}

long long ipow(long long b, int e) {
    long long r = 1;
    while (e-- > 0) r *= b;
    return r;
}

}  // namespace

CoverResult wiener_cover(const CoverInstance& inst, int m) {
    inst.validate();
    if (!inst.W.empty() && static_cast<int>(inst.W.front().size()) != m) {
        throw ValidationError("m", "dimension does not match the sites");
    }
    std::vector<std::size_t> order(inst.W.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (inst.n[a] != inst.n[b]) return inst.n[a] > inst.n[b];
        return inst.W[a] < inst.W[b];
    });
    CoverResult r;
    r.total = inst.W.size();
    for (std::size_t i : order) {
        bool free = true;
        for (std::size_t j : r.selected) {
            if (overlap(inst.W[i], inst.n[i], inst.W[j], inst.n[j])) {
                free = false;
                break;
            }
        }
        if (free) {
            r.selected.push_back(i);
            r.covered_volume += ipow(inst.n[i], m);
        }
    }
    r.bound = ipow(3, m) * r.covered_volume;
    r.disjoint = boxes_disjoint(inst, r.selected);
    return r;
}

bool boxes_disjoint(const CoverInstance& inst, const std::vector<std::size_t>& selected) {
    for (std::size_t a = 0; a < selected.size(); ++a)
        for (std::size_t b = a + 1; b < selected.size(); ++b)
            if (overlap(inst.W[selected[a]], inst.n[selected[a]], inst.W[selected[b]], inst.n[selected[b]]))
                return false;
    return true;
}

std::vector<GammaPoint> empirical_gamma(const FieldSpec& spec, const Slope& s, const std::vector<int>& n_list,
                                        int samples, unsigned threads) {
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw ValidationError("n_list", "n_list must be strictly increasing");
    }
    std::vector<GammaPoint> out;
    for (int n : n_list) {
        const auto e = ent_annealed(s, n, spec, samples, threads);
        out.push_back(GammaPoint{n, -e.mean, e.stderr_, samples});
    }
    return out;
}

MaximalProbe maximal_inequality_probe(const FieldSpec& spec, const Slope& s, double alpha, int n_max, int trials,
                                      unsigned threads) {
    if (!(alpha > 0.0)) throw ValidationError("alpha", "alpha > 0 required");
    if (n_max < 1) throw ValidationError("n_max", "n_max >= 1 required");
    if (trials < 1) throw ValidationError("trials", "trials >= 1 required");
    spec.validate();
    const int m = s.dim();
    const auto N = static_cast<std::size_t>(n_max);
    std::vector<double> normalised(static_cast<std::size_t>(trials) * N);
    parallel_for(
        normalised.size(),
        [&](std::size_t t) {
            const std::size_t trial = t / N;
            const int n = static_cast<int>(t % N) + 1;
            const Field f(spec.with_seed(derive_seed(spec.seed, trial)));
            const double vol = std::pow(static_cast<double>(n), m);
            const double Fp = process_F(Box::cube(m, n), f, s) + m * f.bound() * vol;
            normalised[t] = Fp / vol;
        },
        threads);
    MaximalProbe r;
    r.alpha = alpha;
    r.n_max = n_max;
    r.trials = trials;
    for (std::size_t n = 0; n < N; ++n) {
        double mean = 0.0;
        for (int t = 0; t < trials; ++t) mean += normalised[static_cast<std::size_t>(t) * N + n];
        r.gamma = std::max(r.gamma, mean / trials);
    }
    int exceed = 0;
    for (int t = 0; t < trials; ++t) {
        double sup = 0.0;
        for (std::size_t n = 0; n < N; ++n) sup = std::max(sup, normalised[static_cast<std::size_t>(t) * N + n]);
        exceed += sup > alpha;
    }
    r.empirical_prob = static_cast<double>(exceed) / trials;
    r.bound = std::pow(3.0, m) * r.gamma / alpha;
    r.tolerance = 3.0 * std::sqrt(r.empirical_prob * (1.0 - r.empirical_prob) / trials);
    return r;
}

std::string instance_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json report_line(const std::string& check, const std::string& instance, const std::string& value_name,
                           double value, bool pass) {
    return nlohmann::json{{"check", check}, {"instance", instance}, {value_name, value}, {"pass", pass}};
}

}  // namespace tension_lab
