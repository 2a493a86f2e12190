#include "tension_lab/shape_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"

namespace tension_lab {

namespace {

constexpr double kLipTol = 1e-9;

double cross(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool on_segment(const Point& p, const Point& a, const Point& b, double tol) {
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (std::abs(cross(a, b, p)) > tol * std::max(len, 1.0)) return false;
    return p[0] >= std::min(a[0], b[0]) - tol && p[0] <= std::max(a[0], b[0]) + tol &&
           p[1] >= std::min(a[1], b[1]) - tol && p[1] <= std::max(a[1], b[1]) + tol;
}

bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    return on_segment(a, c, d, 1e-12) || on_segment(b, c, d, 1e-12) || on_segment(c, a, b, 1e-12) ||
           on_segment(d, a, b, 1e-12);
}

double l1(const Point& x, const Point& y, int m) {
    return m == 1 ? std::abs(x[0] - y[0]) : std::abs(x[0] - y[0]) + std::abs(x[1] - y[1]);
}

std::string fmt_point(const Point& p, int m) {
    std::ostringstream os;
    os << "(" << p[0];
    if (m == 2) os << ", " << p[1];
    os << ")";
    return os.str();
}

}  // namespace

Region Region::interval(double a, double b, double h) {
    Region r;
    r.m = 1;
    r.a = a;
    r.b = b;
    r.h = h;
    r.validate();
    return r;
}

Region Region::rectangle(double x0, double y0, double x1, double y1, double h) {
    return from_polygon({Point{x0, y0}, Point{x1, y0}, Point{x1, y1}, Point{x0, y1}}, h);
}

Region Region::from_polygon(std::vector<Point> vertices, double h) {
    Region r;
    r.m = 2;
    r.h = h;
    r.polygon = std::move(vertices);
    r.validate();
    return r;
}

void Region::validate() const {
    if (m != 1 && m != 2) throw ValidationError("region", "m must be 1 or 2");
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("h", "grid spacing must be positive");
    if (m == 1) {
        if (!(b > a)) throw ValidationError("region", "interval needs a < b");
        const double q = (b - a) / h;
        if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q))
            throw ValidationError("h", "interval length must be a multiple of h");
        if (q < 1.0 - 1e-9) throw ValidationError("h", "h larger than the interval");
        return;
    }
    const std::size_t n = polygon.size();
    if (n < 3) throw ValidationError("region", "polygon needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = polygon[i];
        const Point& q = polygon[(i + 1) % n];
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw ValidationError("region", "non-finite vertex");
        if (p == q) throw ValidationError("region", "repeated consecutive vertex");
        area2 += p[0] * q[1] - q[0] * p[1];
    }
    if (std::abs(area2) < 1e-14) throw ValidationError("region", "polygon has zero area");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
                throw ValidationError("region", "polygon is not simple (edges " + std::to_string(i) + " and " +
                                                    std::to_string(j) + " meet)");
        }
}

bool Region::contains(const Point& p, double tol) const {
    if (m == 1) return p[0] >= a - tol && p[0] <= b + tol;
    const std::size_t n = polygon.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& u = polygon[i];
        const Point& v = polygon[j];
        if (on_segment(p, u, v, tol)) return true;
        if ((u[1] > p[1]) != (v[1] > p[1])) {
            const double x = (v[0] - u[0]) * (p[1] - u[1]) / (v[1] - u[1]) + u[0];
            if (p[0] < x) inside = !inside;
        }
    }
    return inside;
}

std::shared_ptr<const Mesh> build_mesh(const Region& region) {
    region.validate();
    auto mesh = std::make_shared<Mesh>();
    mesh->m = region.m;
    mesh->h = region.h;
    const double h = region.h;
    if (region.m == 1) {
        const int N = static_cast<int>(std::lround((region.b - region.a) / h));
        for (int i = 0; i <= N; ++i) {
            mesh->nodes.push_back(Point{region.a + i * h, 0.0});
            mesh->boundary.push_back(i == 0 || i == N);
        }
        for (int i = 0; i < N; ++i) {
            mesh->elements.push_back({i, i + 1, -1, -1});
            mesh->edges.emplace_back(i, i + 1);
        }
        mesh->element_measure = h;
        mesh->area = N * h;
        return mesh;
    }
    double x0 = region.polygon[0][0], y0 = region.polygon[0][1], x1 = x0, y1 = y0;
    for (const auto& p : region.polygon) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    const int nx = static_cast<int>(std::floor((x1 - x0) / h + 1e-9));
    const int ny = static_cast<int>(std::floor((y1 - y0) / h + 1e-9));
    if (nx < 1 || ny < 1) throw ValidationError("h", "h larger than the region");
    if (static_cast<double>(nx + 1) * (ny + 1) > 4e6) throw InfeasibleError("mesh too fine: more than 4e6 grid nodes");
    auto gid = [&](int i, int j) { return static_cast<std::size_t>(i) * (ny + 1) + j; };
    std::vector<int> id((nx + 1) * static_cast<std::size_t>(ny + 1), -1);
    std::vector<Point> pos(id.size());
    for (int i = 0; i <= nx; ++i)
        for (int j = 0; j <= ny; ++j) {
            pos[gid(i, j)] = Point{x0 + i * h, y0 + j * h};
            if (region.contains(pos[gid(i, j)])) {
                id[gid(i, j)] = static_cast<int>(mesh->nodes.size());
                mesh->nodes.push_back(pos[gid(i, j)]);
            }
        }
    std::vector<char> cell(static_cast<std::size_t>(nx) * ny, 0);
    std::vector<int> incident(mesh->nodes.size(), 0);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const int a = id[gid(i, j)], b = id[gid(i + 1, j)], c = id[gid(i, j + 1)], d = id[gid(i + 1, j + 1)];
            if (a < 0 || b < 0 || c < 0 || d < 0) continue;
            if (!region.contains(Point{x0 + (i + 0.5) * h, y0 + (j + 0.5) * h})) continue;
            cell[static_cast<std::size_t>(i) * ny + j] = 1;
            for (int v : {a, b, c, d}) ++incident[v];
            mesh->elements.push_back({a, b, a, c});  // lower-left triangle
            mesh->elements.push_back({c, d, b, d});  // upper-right triangle
        }
    if (mesh->elements.empty()) throw ValidationError("h", "no grid cell fits inside the region");
    mesh->boundary.resize(mesh->nodes.size());
    for (std::size_t v = 0; v < mesh->nodes.size(); ++v) mesh->boundary[v] = incident[v] < 4;
    for (int i = 0; i <= nx; ++i)
        for (int j = 0; j <= ny; ++j) {
            const int a = id[gid(i, j)];
            if (a < 0) continue;
            if (i < nx && id[gid(i + 1, j)] >= 0) mesh->edges.emplace_back(a, id[gid(i + 1, j)]);
            if (j < ny && id[gid(i, j + 1)] >= 0) mesh->edges.emplace_back(a, id[gid(i, j + 1)]);
        }
    mesh->element_measure = 0.5 * h * h;
    mesh->area = mesh->element_measure * static_cast<double>(mesh->elements.size());
    return mesh;
}

BoundaryData BoundaryData::affine(std::vector<double> s, double offset) {
    BoundaryData b;
    b.kind = Kind::affine;
    if (s.empty() || s.size() > 2) throw ValidationError("s", "affine boundary slope needs 1 or 2 components");
    s.resize(2, 0.0);
    b.s = std::move(s);
    b.offset = offset;
    return b;
}

double BoundaryData::at(const Point& x) const {
    if (kind == Kind::affine) return offset + s[0] * x[0] + s[1] * x[1];
    for (const auto& [p, v] : points)
        if (std::abs(p[0] - x[0]) <= 1e-7 && std::abs(p[1] - x[1]) <= 1e-7) return v;
    throw ValidationError("boundary", "no boundary value given at node " + fmt_point(x, 2));
}

void check_boundary_data(const Mesh& mesh, const BoundaryData& b) {
    std::vector<int> bnd;
    std::vector<double> val;
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v)
        if (mesh.boundary[v]) {
            bnd.push_back(static_cast<int>(v));
            val.push_back(b.at(mesh.nodes[v]));
        }
    for (std::size_t i = 0; i < bnd.size(); ++i)
        for (std::size_t j = i + 1; j < bnd.size(); ++j) {
            const Point& x = mesh.nodes[bnd[i]];
            const Point& y = mesh.nodes[bnd[j]];
            if (std::abs(val[i] - val[j]) > l1(x, y, mesh.m) + kLipTol)
                throw InadmissibleError(x, y,
                                        "boundary data is not 1-Lipschitz in l1: |b" + fmt_point(x, mesh.m) + " - b" +
                                            fmt_point(y, mesh.m) + "| > |x - y|_1");
        }
}

Profile kirszbraun_profile(std::shared_ptr<const Mesh> mesh, const BoundaryData& b) {
    check_boundary_data(*mesh, b);
    std::vector<int> bnd;
    std::vector<double> val;
    for (std::size_t v = 0; v < mesh->nodes.size(); ++v)
        if (mesh->boundary[v]) {
            bnd.push_back(static_cast<int>(v));
            val.push_back(b.at(mesh->nodes[v]));
        }
    Profile p{mesh, std::vector<double>(mesh->nodes.size())};
    for (std::size_t v = 0; v < mesh->nodes.size(); ++v) {
        if (mesh->boundary[v]) {
            p.values[v] = b.at(mesh->nodes[v]);
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < bnd.size(); ++i)
            best = std::min(best, val[i] + l1(mesh->nodes[v], mesh->nodes[bnd[i]], mesh->m));
        p.values[v] = best;
    }
    return p;
}

Admissibility check_admissible(const Profile& p, const BoundaryData* b) {
    Admissibility r;
    const Mesh& mesh = *p.mesh;
    if (p.values.size() != mesh.nodes.size()) {
        r.ok = false;
        r.reason = "profile size does not match the mesh";
        return r;
    }
    for (const auto& [u, v] : mesh.edges) {
        if (std::abs(p.values[u] - p.values[v]) > mesh.h + kLipTol) {
            r.ok = false;
            r.witness = std::make_pair(u, v);
            r.reason = "Lipschitz constraint violated between " + fmt_point(mesh.nodes[u], mesh.m) + " and " +
                       fmt_point(mesh.nodes[v], mesh.m);
            return r;
        }
    }
    if (b) {
        for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
            if (!mesh.boundary[v]) continue;
            if (std::abs(p.values[v] - b->at(mesh.nodes[v])) > kLipTol) {
                r.ok = false;
                r.witness = std::make_pair(static_cast<int>(v), static_cast<int>(v));
                r.reason = "boundary value mismatch at " + fmt_point(mesh.nodes[v], mesh.m);
                return r;
            }
        }
    }
    return r;
}

EntropyModel EntropyModel::from_table(const SurfaceTensionTable& table, double kappa) {
    EntropyModel e;
    e.tension = table.as_function();
    e.domain = 1.0 - table.grid.margin;
    e.kappa = kappa;
    return e;
}

EntropyModel EntropyModel::quadratic(int m) {
    EntropyModel e;
    e.tension.m = m;
    e.tension.value = [](std::span<const double> s) {
        double v = 0.0;
        for (double x : s) v += x * x;
        return v;
    };
    e.tension.gradient = [](std::span<const double> s, std::span<double> g) {
        for (std::size_t i = 0; i < s.size(); ++i) g[i] = 2.0 * s[i];
    };
    return e;
}

namespace {

// Entropy and, when grad is non-null, its gradient with respect to the node values.
EntropyEvaluation evaluate(const Mesh& mesh, const std::vector<double>& v, const EntropyModel& model,
                           std::vector<double>* grad) {
    if (model.tension.m != mesh.m) throw ValidationError("tension", "tension dimension does not match the region");
    const int m = mesh.m;
    const double h = mesh.h;
    const double w = mesh.element_measure;
    EntropyEvaluation out;
    if (grad) grad->assign(v.size(), 0.0);
    std::array<double, 2> g{}, gc{}, dg{};
    for (const auto& e : mesh.elements) {
        g[0] = (v[e[1]] - v[e[0]]) / h;
        if (m == 2) g[1] = (v[e[3]] - v[e[2]]) / h;
        bool clamped = false;
        double penalty = 0.0;
        for (int i = 0; i < m; ++i) {
            gc[i] = std::clamp(g[i], -model.domain, model.domain);
            if (gc[i] != g[i]) {
                clamped = true;
                penalty += (g[i] - gc[i]) * (g[i] - gc[i]);
            }
        }
        const std::span<const double> s(gc.data(), static_cast<std::size_t>(m));
        out.value += w * (model.tension.value(s) + model.kappa * penalty);
        out.clamped_elements += clamped;
        if (!grad) continue;
        model.tension.gradient(s, std::span<double>(dg.data(), static_cast<std::size_t>(m)));
        for (int i = 0; i < m; ++i) {
            if (gc[i] != g[i]) dg[i] = 2.0 * model.kappa * (g[i] - gc[i]);
            const double c = w * dg[i] / h;
            (*grad)[e[2 * i + 1]] += c;
            (*grad)[e[2 * i]] -= c;
        }
    }
    return out;
}

}  // namespace

EntropyEvaluation macroscopic_entropy(const Profile& p, const EntropyModel& model) {
    const auto adm = check_admissible(p);
    if (!adm.ok) throw ValidationError("profile", adm.reason);
    return evaluate(*p.mesh, p.values, model, nullptr);
}

int project_lipschitz(const Mesh& mesh, std::vector<double>& values, double tol, int max_passes) {
    const double h = mesh.h;
    const std::size_t E = mesh.edges.size();
    for (int pass = 1; pass <= max_passes; ++pass) {
        double worst = 0.0;
        const bool forward = pass % 2 == 1;
        for (std::size_t k = 0; k < E; ++k) {
            const auto [a, b] = mesh.edges[forward ? k : E - 1 - k];
            double d = values[a] - values[b];
            int u = a, v = b;  // values[u] >= values[v]
            if (d < 0) {
                std::swap(u, v);
                d = -d;
            }
            const double excess = d - h;
            if (excess <= 0.0) continue;
            worst = std::max(worst, excess);
            const bool fu = mesh.boundary[u], fv = mesh.boundary[v];
            if (fu && fv) continue;
            if (fu) {
                values[v] += excess;
            } else if (fv) {
                values[u] -= excess;
            } else {
                values[u] -= 0.5 * excess;
                values[v] += 0.5 * excess;
            }
        }
        if (worst <= tol) return pass;
    }
    throw Error("Lipschitz projection did not converge in " + std::to_string(max_passes) + " passes");
}

SolveResult minimize(const Region& region, const BoundaryData& b, const EntropyModel& model,
                     const SolverParams& params) {
    if (params.max_iterations < 0) throw ValidationError("max_iterations", "must be >= 0");
    if (!(params.step > 0.0)) throw ValidationError("step", "must be positive");
    if (params.patience < 1) throw ValidationError("patience", "must be >= 1");
    if (!model.tension.value || !model.tension.gradient) throw ValidationError("tension", "tension function missing");
    const auto mesh = build_mesh(region);
    SolveResult res;
    res.profile = kirszbraun_profile(mesh, b);
    std::vector<double> v = res.profile.values;
    const double h = mesh->h;
    const double node_measure = mesh->m == 1 ? h : h * h;

    auto e = evaluate(*mesh, v, model, nullptr);
    res.initial_entropy = res.final_entropy = e.value;
    res.clamped_elements = e.clamped_elements;
    res.trace.emplace_back(0, e.value);
    double last_improvement = e.value;
    int last_improved_at = 0;
    std::vector<double> grad;
    int k = 1;
    for (; k <= params.max_iterations; ++k) {
        evaluate(*mesh, v, model, &grad);
        const double alpha = params.step * h * h / std::sqrt(static_cast<double>(k));
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!mesh->boundary[i]) v[i] -= alpha * grad[i] / node_measure;
        project_lipschitz(*mesh, v);
        e = evaluate(*mesh, v, model, nullptr);
        if (e.value < res.final_entropy) {
            res.final_entropy = e.value;
            res.profile.values = v;
            res.best_iteration = k;
            res.clamped_elements = e.clamped_elements;
        }
        if (res.final_entropy < last_improvement - params.tol * std::max(1.0, std::abs(last_improvement))) {
            last_improvement = res.final_entropy;
            last_improved_at = k;
        }
        if (params.trace_every > 0 && k % params.trace_every == 0) res.trace.emplace_back(k, res.final_entropy);
        if (k - last_improved_at >= params.patience) break;
    }
    res.iterations = std::min(k, params.max_iterations);
    if (res.trace.back().first != res.iterations) res.trace.emplace_back(res.iterations, res.final_entropy);
    return res;
}

Region region_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("region", "expected a JSON object");
    const double h = j.value("h", 1.0 / 32);
    if (j.contains("interval")) {
        const auto& iv = j.at("interval");
        if (!iv.is_array() || iv.size() != 2) throw ValidationError("region", "interval must be [a, b]");
        return Region::interval(iv[0].get<double>(), iv[1].get<double>(), h);
    }
    if (j.contains("rectangle")) {
        const auto& r = j.at("rectangle");
        if (!r.is_array() || r.size() != 4) throw ValidationError("region", "rectangle must be [x0, y0, x1, y1]");
        return Region::rectangle(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>(), h);
    }
    if (j.contains("polygon")) {
        std::vector<Point> pts;
        for (const auto& p : j.at("polygon")) {
            if (!p.is_array() || p.size() != 2) throw ValidationError("region", "polygon vertices must be [x, y]");
            pts.push_back(Point{p[0].get<double>(), p[1].get<double>()});
        }
        return Region::from_polygon(std::move(pts), h);
    }
    throw ValidationError("region", "expected one of interval, rectangle, polygon");
}

nlohmann::json region_to_json(const Region& r) {
    nlohmann::json j;
    j["m"] = r.m;
    j["h"] = r.h;
    if (r.m == 1) {
        j["interval"] = {r.a, r.b};
    } else {
        auto poly = nlohmann::json::array();
        for (const auto& p : r.polygon) poly.push_back({p[0], p[1]});
        j["polygon"] = poly;
    }
    return j;
}

BoundaryData boundary_data_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("boundary", "expected a JSON object");
    if (j.contains("affine")) {
        const auto& a = j.at("affine");
        return BoundaryData::affine(a.at("s").get<std::vector<double>>(), a.value("offset", 0.0));
    }
    if (j.contains("points")) {
        BoundaryData b;
        b.kind = BoundaryData::Kind::points;
        for (const auto& p : j.at("points")) {
            if (!p.is_array() || p.size() < 2 || p.size() > 3)
                throw ValidationError("boundary", "points must be [x, value] or [x, y, value]");
            if (p.size() == 2)
                b.points.emplace_back(Point{p[0].get<double>(), 0.0}, p[1].get<double>());
            else
                b.points.emplace_back(Point{p[0].get<double>(), p[1].get<double>()}, p[2].get<double>());
        }
        return b;
    }
    throw ValidationError("boundary", "expected affine or points");
}

nlohmann::json boundary_data_to_json(const BoundaryData& b) {
    nlohmann::json j;
    if (b.kind == BoundaryData::Kind::affine) {
        j["affine"] = {{"s", b.s}, {"offset", b.offset}};
    } else {
        auto pts = nlohmann::json::array();
        for (const auto& [p, v] : b.points) pts.push_back({p[0], p[1], v});
        j["points"] = pts;
    }
    return j;
}

void write_profile_csv(std::ostream& os, const Profile& p) {
    const Mesh& mesh = *p.mesh;
    os << (mesh.m == 1 ? "x,h\n" : "x,y,h\n");
    const auto old = os.precision(17);
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
        os << mesh.nodes[v][0];
        if (mesh.m == 2) os << "," << mesh.nodes[v][1];
        os << "," << p.values[v] << "\n";
    }
    os.precision(old);
}

nlohmann::json solve_report(const SolveResult& r) {
    nlohmann::json j;
    j["iterations"] = r.iterations;
    j["best_iteration"] = r.best_iteration;
    j["initial_entropy"] = r.initial_entropy;
    j["final_entropy"] = r.final_entropy;
    j["clamped_elements"] = r.clamped_elements;
    auto trace = nlohmann::json::array();
    for (const auto& [k, e] : r.trace) trace.push_back({k, e});
    j["entropy_trace"] = trace;
    j["nodes"] = r.profile.mesh ? r.profile.mesh->nodes.size() : 0;
    return j;
}

}  // namespace tension_lab
