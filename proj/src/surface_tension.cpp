#include "tension_lab/surface_tension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"
#include "tension_lab/parallel.hpp"

namespace tension_lab {

namespace {

double volume(int n, int m) { return std::pow(static_cast<double>(n), m); }

void check_scale(const Slope& s, int n) {
    if (n < 1) throw ValidationError("n", "n >= 1 required");
    if (s.dim() < 1) throw ValidationError("s", "slope must have at least one component");
}

std::string spec_summary(const FieldSpec& spec) {
    std::ostringstream os;
    os << to_string(spec.kind) << ":c=" << spec.c << ":period=" << spec.period << ":range=" << spec.range
       << ":master_seed=" << spec.seed;
    return os.str();
}

// Dense tableau simplex with Bland's rule: min c.x s.t. A x = b, x >= 0.
// Returns +inf when infeasible. Small row counts only.
double simplex_min(std::vector<std::vector<double>> A, std::vector<double> b, const std::vector<double>& c) {
    const std::size_t rows = A.size();
    const std::size_t cols = c.size();
    constexpr double eps = 1e-12;
    for (std::size_t r = 0; r < rows; ++r) {
        if (b[r] < 0) {
            b[r] = -b[r];
            for (double& a : A[r]) a = -a;
        }
    }
    // Tableau columns: original, artificial, rhs.
    const std::size_t width = cols + rows + 1;
    std::vector<std::vector<double>> T(rows, std::vector<double>(width, 0.0));
    std::vector<std::size_t> basis(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy(A[r].begin(), A[r].end(), T[r].begin());
        T[r][cols + r] = 1.0;
        T[r][width - 1] = b[r];
        basis[r] = cols + r;
    }
    auto pivot = [&](std::size_t pr, std::size_t pc) {
        const double p = T[pr][pc];
        for (double& v : T[pr]) v /= p;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr || T[r][pc] == 0.0) continue;
            const double f = T[r][pc];
            for (std::size_t j = 0; j < width; ++j) T[r][j] -= f * T[pr][j];
        }
        basis[pr] = pc;
    };
    auto run = [&](const std::vector<double>& cost, std::size_t allowed) {
        while (true) {
            // Reduced costs; entering column is the first negative one (Bland).
            std::size_t enter = allowed;
            for (std::size_t j = 0; j < allowed; ++j) {
                double rc = cost[j];
                for (std::size_t r = 0; r < rows; ++r) rc -= cost[basis[r]] * T[r][j];
                if (rc < -eps) {
                    enter = j;
                    break;
                }
            }
            if (enter == allowed) return;
            std::size_t leave = rows;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows; ++r) {
                if (T[r][enter] > eps) {
                    const double ratio = T[r][width - 1] / T[r][enter];
                    if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < rows && basis[r] < basis[leave])) {
                        best = ratio;
                        leave = r;
                    }
                }
            }
            if (leave == rows) return;  // unbounded; cannot happen for bounded weights
            pivot(leave, enter);
        }
    };
    std::vector<double> phase1(cols + rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) phase1[cols + r] = 1.0;
    run(phase1, cols + rows);
    double infeas = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        if (basis[r] >= cols) infeas += T[r][width - 1];
    if (infeas > 1e-9) return std::numeric_limits<double>::infinity();
    // Drive remaining (zero-level) artificials out of the basis where possible.
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] < cols) continue;
        for (std::size_t j = 0; j < cols; ++j) {
            if (std::abs(T[r][j]) > 1e-9) {
                pivot(r, j);
                break;
            }
        }
    }
    std::vector<double> phase2(cols + rows, 0.0);
    std::copy(c.begin(), c.end(), phase2.begin());
    for (std::size_t r = 0; r < rows; ++r)
        if (basis[r] >= cols) phase2[basis[r]] = 0.0;
    run(phase2, cols);
    double value = 0.0;
    for (std::size_t r = 0; r < rows; ++r) value += phase2[basis[r]] * T[r][width - 1];
    return value;
}

std::vector<double> lower_hull_1d(const std::vector<double>& x, const std::vector<double>& v) {
    std::vector<std::size_t> hull;
    auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
        return (x[a] - x[o]) * (v[b] - v[o]) - (v[a] - v[o]) * (x[b] - x[o]);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0) hull.pop_back();
        hull.push_back(i);
    }
    std::vector<double> out(x.size());
    std::size_t seg = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (seg + 1 < hull.size() && x[hull[seg + 1]] < x[i]) ++seg;
        if (seg + 1 >= hull.size()) {
            out[i] = v[hull.back()];
            continue;
        }
        const std::size_t a = hull[seg], b = hull[seg + 1];
        const double t = (x[i] - x[a]) / (x[b] - x[a]);
        out[i] = (1 - t) * v[a] + t * v[b];
    }
    return out;
}

}  // namespace

std::string to_string(TensionKind kind) {
    switch (kind) {
        case TensionKind::fixed: return "fixed";
        case TensionKind::free: return "free";
        case TensionKind::annealed: return "annealed";
    }
    return "unknown";
}

double ent_fixed(const Slope& s, int n, const EdgeWeights& w, const DpLimits& limits) {
    check_scale(s, n);
    const Box box = Box::cube(s.dim(), n);
    return -log_partition(canonical_boundary(box, s), w, limits) / volume(n, s.dim());
}

double ent_fixed(const Slope& s, int n, const Field& f, const DpLimits& limits) {
    return ent_fixed(s, n, f.weights(), limits);
}

double ent_free(const Slope& s, int n, double delta, const EdgeWeights& w, const DpLimits& limits) {
    check_scale(s, n);
    const Box box = Box::cube(s.dim(), n);
    return -free_log_partition(box, s, delta, w, limits) / volume(n, s.dim());
}

double ent_free(const Slope& s, int n, double delta, const Field& f, const DpLimits& limits) {
    return ent_free(s, n, delta, f.weights(), limits);
}

AnnealedEstimate summarize(std::vector<double> values) {
    AnnealedEstimate e;
    const auto k = static_cast<double>(values.size());
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / k;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (values.size() >= 2 && *lo != *hi) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.stddev = std::sqrt(ss / (k - 1));
        e.stderr_ = e.stddev / std::sqrt(k);
    }
    e.values = std::move(values);
    return e;
}

AnnealedEstimate ent_annealed(const Slope& s, int n, const FieldSpec& spec, int samples, unsigned threads) {
    if (samples < 2) throw ValidationError("samples", "at least 2 samples required");
    spec.validate();
    std::vector<double> values(static_cast<std::size_t>(samples));
    parallel_for(
        values.size(),
        [&](std::size_t i) { values[i] = ent_fixed(s, n, Field(spec.with_seed(derive_seed(spec.seed, i)))); },
        threads);
    return summarize(std::move(values));
}

std::vector<TensionSample> convergence_study(const Slope& s, const Field& f, const std::vector<int>& n_list,
                                             unsigned threads) {
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw ValidationError("n_list", "n_list must be strictly increasing");
    }
    std::vector<TensionSample> out(n_list.size());
    parallel_for(
        n_list.size(),
        [&](std::size_t i) {
            TensionSample t;
            t.s = s.components();
            t.n = n_list[i];
            t.kind = TensionKind::fixed;
            t.value = ent_fixed(s, n_list[i], f);
            t.field = f.fingerprint();
            out[i] = std::move(t);
        },
        threads);
    return out;
}

std::vector<TensionSample> cross_omega_study(const Slope& s, const FieldSpec& spec, const std::vector<int>& n_list,
                                             int samples, unsigned threads) {
    if (samples < 2) throw ValidationError("samples", "at least 2 samples required");
    spec.validate();
    const std::size_t k = static_cast<std::size_t>(samples);
    std::vector<double> values(n_list.size() * k);
    parallel_for(
        values.size(),
        [&](std::size_t t) {
            const std::size_t i = t / k, j = t % k;
            values[t] = ent_fixed(s, n_list[i], Field(spec.with_seed(derive_seed(spec.seed, j))));
        },
        threads);
    std::vector<TensionSample> out;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        const auto e = summarize(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(i * k),
                                                     values.begin() + static_cast<std::ptrdiff_t>((i + 1) * k)));
        TensionSample t;
        t.s = s.components();
        t.n = n_list[i];
        t.kind = TensionKind::annealed;
        t.value = e.mean;
        t.stderr_ = e.stderr_;
        t.samples = samples;
        t.field = spec_summary(spec) + ":cross_omega_std=" + std::to_string(e.stddev);
        out.push_back(std::move(t));
    }
    return out;
}

SandwichReport sandwich_check(const Slope& s, int n, double delta, const Field& f, const DpLimits& limits) {
    check_scale(s, n);
    if (!(s.sup_norm() < 1.0)) throw ValidationError("s", "|s|_inf < 1 required for the sandwich check");
    if (!(delta > 0.0)) throw ValidationError("delta", "delta > 0 required");
    const int m = s.dim();
    SandwichReport r;
    r.s = s.components();
    r.n = n;
    r.delta = delta;
    r.radius = free_window_radius(n, delta);
    r.C = 2.0 / (1.0 - s.sup_norm());
    r.n_prime = n + static_cast<int>(std::ceil(r.C * delta * n - 1e-9));
    r.field_bound = f.bound();
    r.edge_difference = static_cast<long long>(Box::cube(m, r.n_prime).edge_count()) -
                        static_cast<long long>(Box::cube(m, n).edge_count());
    try {
        r.ent_fixed_n = ent_fixed(s, n, f, limits);
        r.ent_free_n = ent_free(s, n, delta, f, limits);
        r.ent_fixed_n_prime = ent_fixed(s, r.n_prime, f, limits);
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string(e.what()) + " (n' = " + std::to_string(r.n_prime) +
                              "; try a smaller n or delta)");
    }
    r.error_term = r.field_bound * static_cast<double>(r.edge_difference) / volume(n, m);
    r.lower_bound = std::pow(static_cast<double>(r.n_prime) / n, m) * r.ent_fixed_n_prime - r.error_term;
    r.literal_lower_bound = std::pow(1.0 + r.C * delta, -m) * r.ent_fixed_n_prime - r.error_term;
    r.slack_upper = r.ent_fixed_n - r.ent_free_n;
    r.slack_lower = r.ent_free_n - r.lower_bound;
    r.slack_literal = r.ent_free_n - r.literal_lower_bound;
    return r;
}

void SlopeGrid::validate() const {
    if (m < 1 || m > 2) throw ValidationError("grid.m", "tension tables support m in {1, 2}");
    if (points < 2) throw ValidationError("grid.points", "at least 2 points per axis");
    if (!(margin >= 0.0 && margin < 1.0)) throw ValidationError("grid.margin", "margin must lie in [0, 1)");
}

std::vector<double> SlopeGrid::axis() const {
    std::vector<double> a(static_cast<std::size_t>(points));
    const double r = 1.0 - margin;
    for (int i = 0; i < points; ++i) a[i] = -r + 2.0 * r * i / (points - 1);
    return a;
}

std::size_t SlopeGrid::size() const {
    std::size_t s = 1;
    for (int i = 0; i < m; ++i) s *= static_cast<std::size_t>(points);
    return s;
}

std::vector<double> SlopeGrid::at(std::size_t index) const {
    const auto a = axis();
    std::vector<double> s(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
        s[i] = a[index % static_cast<std::size_t>(points)];
        index /= static_cast<std::size_t>(points);
    }
    return s;
}

namespace {

struct Cell {
    std::vector<std::size_t> base;
    std::vector<double> t;
};

Cell locate(const SlopeGrid& g, std::span<const double> s) {
    if (static_cast<int>(s.size()) != g.m) throw ValidationError("s", "slope dimension does not match table");
    const double r = 1.0 - g.margin;
    const double h = 2.0 * r / (g.points - 1);
    Cell c;
    for (int i = 0; i < g.m; ++i) {
        const double u = (s[i] + r) / h;
        const auto k = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(g.points - 2)));
        c.base.push_back(k);
        c.t.push_back(u - static_cast<double>(k));  // outside [0,1] extrapolates
    }
    return c;
}

std::size_t flat(const SlopeGrid& g, const std::vector<std::size_t>& idx) {
    std::size_t k = 0;
    for (std::size_t i : idx) k = k * static_cast<std::size_t>(g.points) + i;
    return k;
}

}  // namespace

double SurfaceTensionTable::evaluate(std::span<const double> s) const {
    const Cell c = locate(grid, s);
    double acc = 0.0;
    const int corners = 1 << grid.m;
    std::vector<std::size_t> idx(static_cast<std::size_t>(grid.m));
    for (int mask = 0; mask < corners; ++mask) {
        double wgt = 1.0;
        for (int i = 0; i < grid.m; ++i) {
            const bool up = (mask >> i) & 1;
            idx[i] = c.base[i] + (up ? 1 : 0);
            wgt *= up ? c.t[i] : 1.0 - c.t[i];
        }
        acc += wgt * values[flat(grid, idx)];
    }
    return acc;
}

void SurfaceTensionTable::gradient(std::span<const double> s, std::span<double> out) const {
    const Cell c = locate(grid, s);
    const double h = 2.0 * (1.0 - grid.margin) / (grid.points - 1);
    const int corners = 1 << grid.m;
    std::vector<std::size_t> idx(static_cast<std::size_t>(grid.m));
    for (int d = 0; d < grid.m; ++d) {
        double acc = 0.0;
        for (int mask = 0; mask < corners; ++mask) {
            double wgt = 1.0;
            for (int i = 0; i < grid.m; ++i) {
                const bool up = (mask >> i) & 1;
                idx[i] = c.base[i] + (up ? 1 : 0);
                if (i == d) {
                    wgt *= up ? 1.0 : -1.0;
                } else {
                    wgt *= up ? c.t[i] : 1.0 - c.t[i];
                }
            }
            acc += wgt * values[flat(grid, idx)];
        }
        out[d] = acc / h;
    }
}

TensionFunction SurfaceTensionTable::as_function() const {
    TensionFunction f;
    f.m = grid.m;
    f.value = [t = *this](std::span<const double> s) { return t.evaluate(s); };
    f.gradient = [t = *this](std::span<const double> s, std::span<double> g) { t.gradient(s, g); };
    return f;
}

std::vector<double> lower_convex_envelope(const SlopeGrid& grid, const std::vector<double>& values) {
    grid.validate();
    if (values.size() != grid.size()) throw ValidationError("values", "one value per grid point required");
    if (grid.m == 1) return lower_hull_1d(grid.axis(), values);
    const std::size_t N = values.size();
    std::vector<std::vector<double>> pts(N);
    for (std::size_t i = 0; i < N; ++i) pts[i] = grid.at(i);
    std::vector<double> out(N);
    for (std::size_t p = 0; p < N; ++p) {
        std::vector<std::vector<double>> A(3, std::vector<double>(N));
        for (std::size_t i = 0; i < N; ++i) {
            A[0][i] = pts[i][0];
            A[1][i] = pts[i][1];
            A[2][i] = 1.0;
        }
        const double v = simplex_min(A, {pts[p][0], pts[p][1], 1.0}, values);
        out[p] = std::min(v, values[p]);
    }
    return out;
}

void convexify(SurfaceTensionTable& table) {
    table.values = lower_convex_envelope(table.grid, table.raw);
    table.convexified = true;
}

SurfaceTensionTable tabulate_tension(const FieldSpec& spec, int n, int samples, const SlopeGrid& grid,
                                     unsigned threads) {
    grid.validate();
    spec.validate();
    if (samples < 1) throw ValidationError("samples", "samples >= 1 required");
    if (n < 1) throw ValidationError("n", "n >= 1 required");
    const std::size_t G = grid.size(), k = static_cast<std::size_t>(samples);
    std::vector<double> values(G * k);
    parallel_for(
        values.size(),
        [&](std::size_t t) {
            const Slope s(grid.at(t / k));
            values[t] = ent_fixed(s, n, Field(spec.with_seed(derive_seed(spec.seed, t % k))));
        },
        threads);
    SurfaceTensionTable table;
    table.grid = grid;
    table.spec = spec;
    table.n = n;
    table.samples = samples;
    for (std::size_t g = 0; g < G; ++g) {
        const auto e = summarize(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(g * k),
                                                     values.begin() + static_cast<std::ptrdiff_t>((g + 1) * k)));
        table.raw.push_back(e.mean);
        table.stderr_.push_back(e.stderr_);
    }
    convexify(table);
    return table;
}

nlohmann::json table_to_json(const SurfaceTensionTable& t) {
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < t.grid.size(); ++i) points.push_back(t.grid.at(i));
    nlohmann::json j;
    j["grid"] = {{"m", t.grid.m}, {"points", t.grid.points}, {"margin", t.grid.margin}, {"axis", t.grid.axis()},
                 {"slopes", points}};
    j["raw"] = t.raw;
    j["stderr"] = t.stderr_;
    j["convexified"] = t.convexified ? nlohmann::json(t.values) : nlohmann::json(nullptr);
    j["meta"] = {{"spec", t.spec}, {"n", t.n}, {"samples", t.samples}};
    return j;
}

SurfaceTensionTable table_from_json(const nlohmann::json& j) {
    SurfaceTensionTable t;
    const auto& g = j.at("grid");
    t.grid.m = g.at("m").get<int>();
    t.grid.points = g.at("points").get<int>();
    t.grid.margin = g.value("margin", 0.05);
    t.grid.validate();
    t.raw = j.at("raw").get<std::vector<double>>();
    if (t.raw.size() != t.grid.size()) throw ValidationError("table.raw", "raw values do not match the grid");
    t.stderr_ = j.value("stderr", std::vector<double>(t.raw.size(), 0.0));
    if (j.contains("convexified") && !j["convexified"].is_null()) {
        t.values = j["convexified"].get<std::vector<double>>();
        if (t.values.size() != t.grid.size()) throw ValidationError("table.convexified", "size mismatch");
        t.convexified = true;
    } else {
        t.values = t.raw;
    }
    if (j.contains("meta")) {
        const auto& meta = j["meta"];
        if (meta.contains("spec")) t.spec = meta["spec"].get<FieldSpec>();
        t.n = meta.value("n", 0);
        t.samples = meta.value("samples", 0);
    }
    return t;
}

nlohmann::json sample_to_json(const TensionSample& t) {
    nlohmann::json j{{"s", t.s}, {"n", t.n}, {"kind", to_string(t.kind)}, {"value", t.value}, {"field", t.field}};
    if (t.kind == TensionKind::annealed) {
        j["stderr"] = t.stderr_;
        j["samples"] = t.samples;
    }
    if (t.kind == TensionKind::free) j["delta"] = t.delta;
    return j;
}

nlohmann::json sandwich_to_json(const SandwichReport& r) {
    return nlohmann::json{{"s", r.s},
                          {"n", r.n},
                          {"delta", r.delta},
                          {"radius", r.radius},
                          {"C", r.C},
                          {"n_prime", r.n_prime},
                          {"field_bound", r.field_bound},
                          {"edge_difference", r.edge_difference},
                          {"ent_fixed_n", r.ent_fixed_n},
                          {"ent_free_n", r.ent_free_n},
                          {"ent_fixed_n_prime", r.ent_fixed_n_prime},
                          {"error_term", r.error_term},
                          {"lower_bound", r.lower_bound},
                          {"literal_lower_bound", r.literal_lower_bound},
                          {"slack_upper", r.slack_upper},
                          {"slack_lower", r.slack_lower},
                          {"slack_literal", r.slack_literal},
                          {"holds", r.holds()}};
}

void write_tension_csv(std::ostream& os, const std::vector<TensionSample>& rows) {
    const std::size_t m = rows.empty() ? 1 : rows.front().s.size();
    for (std::size_t i = 0; i < m; ++i) os << "s" << (i + 1) << ",";
    os << "n,kind,value,stderr\n";
    os.precision(17);
    for (const auto& r : rows) {
        for (double c : r.s) os << c << ",";
        os << r.n << "," << to_string(r.kind) << "," << r.value << "," << r.stderr_ << "\n";
    }
}

}  // namespace tension_lab
