#include "tension_lab/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "tension_lab/error.hpp"
#include "tension_lab/parallel.hpp"

namespace tension_lab {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ChainState make_chain(const BoundaryHeightFunction& hb, std::uint64_t seed) {
    ChainState st;
    st.current = kirszbraun_extend(hb);
    for (std::size_t k = 0; k < hb.box.size(); ++k)
        if (!hb.box.on_boundary(k)) st.interior.push_back(k);
    st.stream = seed;
    st.rng.seed(seed);
    return st;
}

SiteConditional heat_bath_conditional(const HeightFunction& h, std::size_t site, const EdgeWeights& w) {
    const auto nb = h.box.neighbors(site);
    SiteConditional c;
    if (nb.empty()) return c;
    const int a = h.values[nb.front()];
    for (std::size_t y : nb)
        if (h.values[y] != a) return c;
    // Edge weight w(min(v, a)): w(a-1) for v = a-1, w(a) for v = a+1.
    const double deg = static_cast<double>(nb.size());
    const double diff = deg * (w(a) - w(a - 1));
    c.forced = false;
    c.low = a - 1;
    c.p_low = 1.0 / (1.0 + std::exp(diff));
    return c;
}

namespace {

void update_site(ChainState& st, std::size_t k, const EdgeWeights& w) {
    const auto c = heat_bath_conditional(st.current, k, w);
    if (c.forced) return;
    st.current.values[k] = uniform01(st.rng) < c.p_low ? c.low : c.low + 2;
}

}  // namespace

void heat_bath_sweep(ChainState& st, const EdgeWeights& w, bool random_scan) {
    if (random_scan) {
        const std::size_t N = st.interior.size();
        for (std::size_t i = 0; i < N; ++i) update_site(st, st.interior[st.rng() % N], w);
    } else {
        for (std::size_t k : st.interior) update_site(st, k, w);
    }
    ++st.sweeps;
    assert(is_height_function(st.current));
}

SampleRun sample(const BoundaryHeightFunction& hb, const EdgeWeights& w, const SamplerOptions& opt,
                 unsigned threads) {
    if (opt.thin == 0) throw ValidationError("thin", "thin >= 1 required");
    if (opt.chains < 1) throw ValidationError("chains", "chains >= 1 required");
    SampleRun run;
    run.box = hb.box;
    std::vector<std::vector<Snapshot>> per_chain(static_cast<std::size_t>(opt.chains));
    parallel_for(
        per_chain.size(),
        [&](std::size_t c) {
            ChainState st = make_chain(hb, opt.chains == 1 ? opt.seed : derive_seed(opt.seed, c));
            auto& out = per_chain[c];
            if (opt.sweeps == 0) {
                out.push_back(Snapshot{static_cast<int>(c), 0, st.current.values});
                return;
            }
            const long long burn = opt.burn_in < 0 ? 100LL * static_cast<long long>(st.interior.size()) : opt.burn_in;
            for (long long i = 0; i < burn; ++i) heat_bath_sweep(st, w, opt.random_scan);
            out.reserve(opt.sweeps / opt.thin);
            for (std::uint64_t t = 1; t <= opt.sweeps; ++t) {
                heat_bath_sweep(st, w, opt.random_scan);
                if (t % opt.thin == 0) out.push_back(Snapshot{static_cast<int>(c), t, st.current.values});
            }
        },
        threads);
    for (auto& v : per_chain)
        for (auto& s : v) run.snapshots.push_back(std::move(s));
    return run;
}

SampleRun sample(const BoundaryHeightFunction& hb, const Field& f, const SamplerOptions& opt, unsigned threads) {
    return sample(hb, f.weights(), opt, threads);
}

std::vector<double> apply_sweep_kernel(const ExactDistribution& dist, const EdgeWeights& w) {
    const Box& box = dist.box;
    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < dist.configurations.size(); ++i) index[dist.configurations[i].values] = i;
    std::vector<double> p(dist.configurations.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = dist.configurations[i].probability;
    for (std::size_t k = 0; k < box.size(); ++k) {
        if (box.on_boundary(k)) continue;
        std::vector<double> next(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] == 0.0) continue;
            const HeightFunction h{box, dist.configurations[i].values};
            const auto c = heat_bath_conditional(h, k, w);
            if (c.forced) {
                next[i] += p[i];
                continue;
            }
            auto v = h.values;
            v[k] = c.low;
            next[index.at(v)] += p[i] * c.p_low;
            v[k] = c.low + 2;
            next[index.at(v)] += p[i] * (1.0 - c.p_low);
        }
        p = std::move(next);
    }
    return p;
}

double total_variation(const SampleRun& run, const ExactDistribution& dist) {
    std::map<std::vector<int>, double> emp;
    for (const auto& s : run.snapshots) emp[s.values] += 1.0;
    const double total = static_cast<double>(run.snapshots.size());
    double tv = 0.0;
    double matched = 0.0;
    for (const auto& c : dist.configurations) {
        auto it = emp.find(c.values);
        const double q = it == emp.end() ? 0.0 : it->second / total;
        matched += q;
        tv += std::abs(q - c.probability);
    }
    tv += 1.0 - matched;  // mass on configurations outside the table
    return 0.5 * tv;
}

void HPBallSpec::validate() const {
    if (!(delta > 0.0)) throw ValidationError("delta", "delta > 0 required");
    if (!(eps > 0.0)) throw ValidationError("eps", "eps > 0 required");
}

bool on_eps_grid(std::span<const int> x, int n, double eps) {
    for (int c : x) {
        const double q = std::abs(static_cast<double>(c)) / n / eps;
        if (std::abs(q - std::round(q)) <= 1e-9) return true;
    }
    return false;
}

double hp_ball_distance(const HeightFunction& h, const HPBallSpec& spec, int n) {
    spec.validate();
    if (n < 1) throw ValidationError("n", "n >= 1 required");
    const Box& box = h.box;
    const int m = box.dim();
    Site x(static_cast<std::size_t>(m));
    std::vector<double> y(static_cast<std::size_t>(m));
    double sup = -1.0;
    for (std::size_t k = 0; k < box.size(); ++k) {
        box.site_into(k, x);
        if (!on_eps_grid(x, n, spec.eps)) continue;
        for (int i = 0; i < m; ++i) y[i] = static_cast<double>(x[i]) / n;
        sup = std::max(sup, std::abs(static_cast<double>(h.values[k]) / n - spec.reference(y)));
    }
    if (sup < 0.0) throw ValidationError("eps", "no site of the box lies on the eps-grid; eps too large for n");
    return sup;
}

bool hp_ball_contains(const HeightFunction& h, const HPBallSpec& spec, int n) {
    return hp_ball_distance(h, spec, n) <= spec.delta;
}

ConcentrationResult concentration_experiment(int n, const Slope& s, const Field& f, double delta, double eps,
                                             const SamplerOptions& opt, unsigned threads) {
    const Box box = Box::cube(s.dim(), n);
    const HPBallSpec spec{[s](std::span<const double> y) {
                              double v = 0.0;
                              for (int i = 0; i < s.dim(); ++i) v += s[i] * y[i];
                              return v;
                          },
                          delta, eps};
    spec.validate();
    const auto run = sample(canonical_boundary(box, s), f, opt, threads);
    ConcentrationResult r;
    r.samples = run.snapshots.size();
    double total = 0.0;
    for (const auto& snap : run.snapshots) {
        const double d = hp_ball_distance(HeightFunction{box, snap.values}, spec, n);
        r.inside += d <= delta;
        r.max_distance = std::max(r.max_distance, d);
        total += d;
    }
    if (r.samples > 0) {
        r.fraction = static_cast<double>(r.inside) / static_cast<double>(r.samples);
        r.mean_distance = total / static_cast<double>(r.samples);
    }
    return r;
}

void write_samples_csv(std::ostream& os, const SampleRun& run) {
    const int m = run.box.dim();
    os << "chain,sweep";
    for (int i = 0; i < m; ++i) os << ",x" << (i + 1);
    os << ",height\n";
    Site x(static_cast<std::size_t>(m));
    for (const auto& s : run.snapshots) {
        for (std::size_t k = 0; k < run.box.size(); ++k) {
            run.box.site_into(k, x);
            os << s.chain << "," << s.sweep;
            for (int c : x) os << "," << c;
            os << "," << s.values[k] << "\n";
        }
    }
}

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        os.put(static_cast<char>(u & 0xFF));
        u = static_cast<U>(u >> 8);
    }
}

template <typename T>
T get_le(std::istream& is) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        const int c = is.get();
        if (c == std::char_traits<char>::eof()) throw ValidationError("samples", "truncated binary sample stream");
        u |= static_cast<U>(static_cast<U>(c & 0xFF) << (8 * i));
    }
    return static_cast<T>(u);
}

}  // namespace

void write_samples_binary(std::ostream& os, const SampleRun& run) {
    put_le<std::int32_t>(os, run.box.dim());
    for (int v : run.box.lo()) put_le<std::int32_t>(os, v);
    for (int v : run.box.hi()) put_le<std::int32_t>(os, v);
    put_le<std::uint64_t>(os, run.snapshots.size());
    for (const auto& s : run.snapshots)
        for (int v : s.values) put_le<std::int32_t>(os, v);
}

SampleRun read_samples_binary(std::istream& is) {
    const int m = get_le<std::int32_t>(is);
    if (m < 1 || m > 16) throw ValidationError("samples", "bad dimension in binary header");
    std::vector<int> lo(static_cast<std::size_t>(m)), hi(static_cast<std::size_t>(m));
    for (auto& v : lo) v = get_le<std::int32_t>(is);
    for (auto& v : hi) v = get_le<std::int32_t>(is);
    SampleRun run;
    run.box = Box(lo, hi);
    const auto count = get_le<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        Snapshot s;
        s.sweep = i;
        s.values.resize(run.box.size());
        for (auto& v : s.values) v = get_le<std::int32_t>(is);
        run.snapshots.push_back(std::move(s));
    }
    return run;
}

}  // namespace tension_lab
