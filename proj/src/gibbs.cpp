#include "tension_lab/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "tension_lab/error.hpp"

namespace tension_lab {

double log_sum_exp(const std::vector<double>& v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    // Kahan-compensated sum of the scaled terms.
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        const double y = std::exp(x - mx) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return mx + std::log(sum);
}

double hamiltonian(const HeightFunction& h, const EdgeWeights& w) {
    const Box& b = h.box;
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        for (int i = 0; i < b.dim(); ++i) {
            const int c = static_cast<int>((k / b.stride(i)) % static_cast<std::size_t>(b.extent(i)));
            if (c + 1 < b.extent(i)) acc += w(std::min(h.values[k], h.values[k + b.stride(i)]));
        }
    }
    return acc;
}

double hamiltonian(const HeightFunction& h, const Field& f) { return hamiltonian(h, f.weights()); }

SiteWindows fixed_windows(const BoundaryHeightFunction& hb) {
    Envelope env = kirszbraun_envelope(hb);
    for (std::size_t i = 0; i < hb.sites.size(); ++i) {
        env.lower[hb.sites[i]] = hb.values[i];
        env.upper[hb.sites[i]] = hb.values[i];
    }
    return SiteWindows{std::move(env.lower), std::move(env.upper)};
}

namespace {

void check_windows(const Box& box, const SiteWindows& win) {
    if (win.lower.size() != box.size() || win.upper.size() != box.size()) {
        throw ValidationError("windows", "one window per site required");
    }
}

// Shared geometry of the raster frontier: which window slots hold the
// backward neighbours of each site.
struct Frontier {
    std::size_t width = 0;                           // stride(0)
    std::vector<std::vector<std::size_t>> back;      // per site: slots of backward neighbours
    int height_min = 0;
    int height_max = 0;
    int bits = 1;                                    // per packed height, power of two
    std::size_t words = 1;                           // 64-bit words per state

    Frontier(const Box& box, const SiteWindows& win) {
        width = box.stride(0);
        back.resize(box.size());
        for (std::size_t k = 0; k < box.size(); ++k) {
            for (int i = 0; i < box.dim(); ++i) {
                const int c = static_cast<int>((k / box.stride(i)) % static_cast<std::size_t>(box.extent(i)));
                if (c > 0) back[k].push_back(width - box.stride(i));
            }
        }
        height_min = *std::min_element(win.lower.begin(), win.lower.end());
        height_max = *std::max_element(win.upper.begin(), win.upper.end());
        const auto span = static_cast<unsigned>(height_max - height_min + 1);
        const unsigned need = std::max(1u, static_cast<unsigned>(std::bit_width(span)));
        bits = static_cast<int>(std::bit_ceil(need));
        if (bits > 32) throw InfeasibleError("height range too large for frontier packing");
        const std::size_t per_word = 64 / static_cast<std::size_t>(bits);
        words = (width + per_word - 1) / per_word;
    }

    void decode(const std::uint64_t* key, int* out) const {
        const std::size_t per_word = 64 / static_cast<std::size_t>(bits);
        const std::uint64_t mask = bits == 64 ? ~0ULL : ((1ULL << bits) - 1);
        for (std::size_t s = 0; s < width; ++s) {
            const std::uint64_t word = key[s / per_word];
            out[s] = static_cast<int>((word >> ((s % per_word) * bits)) & mask) + height_min;
        }
    }

    void encode(const int* in, std::uint64_t* key) const {
        const std::size_t per_word = 64 / static_cast<std::size_t>(bits);
        std::fill(key, key + words, 0ULL);
        for (std::size_t s = 0; s < width; ++s) {
            key[s / per_word] |= static_cast<std::uint64_t>(in[s] - height_min) << ((s % per_word) * bits);
        }
    }
};

struct LogSemiring {
    using Value = double;
    static Value one() { return 0.0; }
    static Value extend(const Value& v, double energy) { return v + energy; }
    static Value merge(const std::vector<Value>& run) { return log_sum_exp(run); }
    static Value empty() { return -std::numeric_limits<double>::infinity(); }
};

struct CountSemiring {
    using Value = BigCount;
    static Value one() { return 1; }
    static Value extend(const Value& v, double) { return v; }
    static Value merge(const std::vector<Value>& run) {
        Value total = 0;
        for (const auto& x : run) total += x;
        return total;
    }
    static Value empty() { return 0; }
};

template <class Semiring>
typename Semiring::Value run_frontier_dp(const Box& box, const SiteWindows& win, const EdgeWeights* w,
                                         const DpLimits& limits) {
    using Value = typename Semiring::Value;
    check_windows(box, win);
    for (std::size_t k = 0; k < box.size(); ++k) {
        if (win.lower[k] > win.upper[k]) return Semiring::empty();
    }
    const Frontier fr(box, win);
    const std::size_t W = fr.words;
    const std::size_t P = fr.width;

    // Edge weights tabulated over the reachable height range.
    std::vector<double> table;
    if (w != nullptr) {
        table.resize(static_cast<std::size_t>(fr.height_max - fr.height_min + 1));
        for (int h = fr.height_min; h <= fr.height_max; ++h) table[static_cast<std::size_t>(h - fr.height_min)] = (*w)(h);
    }
    auto weight = [&](int a, int b) {
        return table.empty() ? 0.0 : table[static_cast<std::size_t>(std::min(a, b) - fr.height_min)];
    };

    std::vector<std::uint64_t> keys, next_keys;
    std::vector<Value> vals, next_vals;
    std::vector<int> cur(P), nxt(P);

    // Site 0: every height in its window, unused slots hold height_min.
    std::fill(cur.begin(), cur.end(), fr.height_min);
    for (int v = win.lower[0]; v <= win.upper[0]; ++v) {
        std::copy(cur.begin() + 1, cur.end(), nxt.begin());
        nxt[P - 1] = v;
        keys.resize(keys.size() + W);
        fr.encode(nxt.data(), keys.data() + keys.size() - W);
        vals.push_back(Semiring::one());
    }

    std::vector<std::size_t> order;
    std::vector<Value> run;
    for (std::size_t k = 1; k < box.size(); ++k) {
        next_keys.clear();
        next_vals.clear();
        const auto& back = fr.back[k];
        const int lo = win.lower[k];
        const int hi = win.upper[k];
        for (std::size_t st = 0; st < vals.size(); ++st) {
            fr.decode(keys.data() + st * W, cur.data());
            const int anchor = cur[back.front()];
            for (int v : {anchor - 1, anchor + 1}) {
                if (v < lo || v > hi) continue;
                bool ok = true;
                double energy = 0.0;
                for (std::size_t slot : back) {
                    if (std::abs(cur[slot] - v) != 1) {
                        ok = false;
                        break;
                    }
                    energy += weight(cur[slot], v);
                }
                if (!ok) continue;
                std::copy(cur.begin() + 1, cur.end(), nxt.begin());
                nxt[P - 1] = v;
                next_keys.resize(next_keys.size() + W);
                fr.encode(nxt.data(), next_keys.data() + next_keys.size() - W);
                next_vals.push_back(Semiring::extend(vals[st], energy));
            }
        }
        if (next_vals.size() > limits.max_states) {
            throw InfeasibleError("frontier state space exceeds " + std::to_string(limits.max_states) +
                                  " states; use a smaller box or the MCMC sampler");
        }

        // Merge equal frontiers.
        order.resize(next_vals.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::uint64_t* kp = next_keys.data();
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(kp + a * W, kp + a * W + W, kp + b * W, kp + b * W + W);
        });
        keys.clear();
        vals.clear();
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            run.clear();
            while (j < order.size() && std::equal(kp + order[i] * W, kp + order[i] * W + W, kp + order[j] * W)) {
                run.push_back(next_vals[order[j]]);
                ++j;
            }
            keys.insert(keys.end(), kp + order[i] * W, kp + order[i] * W + W);
            vals.push_back(run.size() == 1 ? run.front() : Semiring::merge(run));
            i = j;
        }
    }
    if (vals.empty()) return Semiring::empty();
    return Semiring::merge(vals);
}

std::string describe_free(double delta, int radius) {
    std::ostringstream os;
    os << "free(delta=" << delta << ",radius=" << radius << ")";
    return os.str();
}

}  // namespace

BigCount count_windows(const Box& box, const SiteWindows& windows, const DpLimits& limits) {
    return run_frontier_dp<CountSemiring>(box, windows, nullptr, limits);
}

double log_partition_windows(const Box& box, const SiteWindows& windows, const EdgeWeights& w,
                             const DpLimits& limits) {
    return run_frontier_dp<LogSemiring>(box, windows, &w, limits);
}

BigCount count_extensions(const BoundaryHeightFunction& hb, const DpLimits& limits) {
    if (find_extendability_violation(hb)) return 0;
    return count_windows(hb.box, fixed_windows(hb), limits);
}

double log_partition(const BoundaryHeightFunction& hb, const EdgeWeights& w, const DpLimits& limits) {
    return log_partition_windows(hb.box, fixed_windows(hb), w, limits);
}

LogPartition log_partition(const BoundaryHeightFunction& hb, const Field& f, const DpLimits& limits) {
    return LogPartition{log_partition(hb, f.weights(), limits), hb.box, "fixed", f.fingerprint()};
}

int free_window_radius(int n, double delta) {
    if (!(delta > 0.0)) throw ValidationError("delta", "delta > 0 required");
    const double r = std::floor(delta * n);
    return static_cast<int>(std::max(1.0, std::min(r, 1e6)));
}

SiteWindows free_windows(const Box& box, const Slope& s, double delta) {
    if (s.dim() != box.dim()) throw ValidationError("s", "slope dimension does not match box dimension");
    const int n = box.extent(0);
    for (int i = 1; i < box.dim(); ++i) {
        if (box.extent(i) != n) throw ValidationError("box", "free boundary data is defined on cubes S_n");
    }
    const int radius = free_window_radius(n, delta);
    const int m = box.dim();
    const auto sites = inner_boundary_indices(box);
    std::vector<int> bcoords(sites.size() * static_cast<std::size_t>(m));
    std::vector<int> blo(sites.size()), bhi(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        std::span<int> x(bcoords.data() + i * m, m);
        box.site_into(sites[i], x);
        const auto t = static_cast<int>(s.floor_dot(x));
        blo[i] = t - radius;
        bhi[i] = t + radius;
    }
    SiteWindows win;
    win.lower.resize(box.size());
    win.upper.resize(box.size());
    Site x(static_cast<std::size_t>(m));
    for (std::size_t k = 0; k < box.size(); ++k) {
        box.site_into(k, x);
        int lo = std::numeric_limits<int>::min();
        int hi = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i < sites.size(); ++i) {
            const int d = l1_distance(x, std::span<const int>(bcoords.data() + i * m, m));
            lo = std::max(lo, blo[i] - d);
            hi = std::min(hi, bhi[i] + d);
        }
        win.lower[k] = lo;
        win.upper[k] = hi;
    }
    return win;
}

double free_log_partition(const Box& box, const Slope& s, double delta, const EdgeWeights& w,
                          const DpLimits& limits) {
    const double v = log_partition_windows(box, free_windows(box, s, delta), w, limits);
    if (!std::isfinite(v)) throw InfeasibleError("free(delta) configuration set is empty");
    return v;
}

LogPartition free_log_partition(const Box& box, const Slope& s, double delta, const Field& f,
                                const DpLimits& limits) {
    const double v = free_log_partition(box, s, delta, f.weights(), limits);
    return LogPartition{v, box, describe_free(delta, free_window_radius(box.extent(0), delta)), f.fingerprint()};
}

void enumerate_windows(const Box& box, const SiteWindows& windows, const EdgeWeights& w,
                       const std::function<void(const std::vector<int>&, double)>& visit) {
    check_windows(box, windows);
    const std::size_t N = box.size();
    std::vector<std::vector<std::size_t>> back(N);
    for (std::size_t k = 0; k < N; ++k) {
        for (int i = 0; i < box.dim(); ++i) {
            const int c = static_cast<int>((k / box.stride(i)) % static_cast<std::size_t>(box.extent(i)));
            if (c > 0) back[k].push_back(k - box.stride(i));
        }
    }
    std::vector<int> h(N);
    std::vector<double> energy(N + 1, 0.0);
    auto recurse = [&](auto&& self, std::size_t k) -> void {
        if (k == N) {
            visit(h, energy[N]);
            return;
        }
        auto try_value = [&](int v) {
            double e = 0.0;
            for (std::size_t b : back[k]) {
                if (std::abs(h[b] - v) != 1) return;
                e += w(std::min(h[b], v));
            }
            h[k] = v;
            energy[k + 1] = energy[k] + e;
            self(self, k + 1);
        };
        if (back[k].empty()) {
            for (int v = windows.lower[k]; v <= windows.upper[k]; ++v) try_value(v);
        } else {
            const int a = h[back[k].front()];
            for (int v : {a - 1, a + 1}) {
                if (v >= windows.lower[k] && v <= windows.upper[k]) try_value(v);
            }
        }
    };
    recurse(recurse, 0);
}

ExactDistribution exact_distribution(const BoundaryHeightFunction& hb, const EdgeWeights& w, std::size_t cap) {
    const SiteWindows win = fixed_windows(hb);
    const BigCount count = count_windows(hb.box, win);
    if (count > cap) {
        throw InfeasibleError("configuration count " + count.str() + " exceeds cap " + std::to_string(cap) +
                              "; use the MCMC sampler instead");
    }
    ExactDistribution dist{hb.box, 0.0, {}};
    dist.configurations.reserve(static_cast<std::size_t>(count));
    enumerate_windows(hb.box, win, w, [&](const std::vector<int>& h, double e) {
        dist.configurations.push_back(Configuration{h, e, 0.0});
    });
    std::vector<double> energies;
    energies.reserve(dist.configurations.size());
    for (const auto& c : dist.configurations) energies.push_back(c.energy);
    dist.log_z = log_sum_exp(energies);
    for (auto& c : dist.configurations) c.probability = std::exp(c.energy - dist.log_z);
    return dist;
}

ExactDistribution exact_distribution(const BoundaryHeightFunction& hb, const Field& f, std::size_t cap) {
    return exact_distribution(hb, f.weights(), cap);
}

}  // namespace tension_lab
