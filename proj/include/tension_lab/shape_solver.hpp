#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tension_lab/error.hpp"
#include "tension_lab/surface_tension.hpp"

namespace tension_lab {

using Point = std::array<double, 2>;  // second coordinate unused when m = 1

/// Compact domain R: an interval (m = 1) or a simple polygon (m = 2),
/// discretised on a square grid of spacing h anchored at the bounding-box corner.
struct Region {
    int m = 2;
    double h = 1.0 / 32;
    double a = 0.0, b = 1.0;     // m = 1
    std::vector<Point> polygon;  // m = 2, vertices in order, not repeated

    static Region interval(double a, double b, double h);
    static Region rectangle(double x0, double y0, double x1, double y1, double h);
    static Region from_polygon(std::vector<Point> vertices, double h);

    /// Throws ValidationError unless the region is well formed and simple.
    void validate() const;
    bool contains(const Point& p, double tol = 1e-9) const;
};

/// Grid nodes with P1 elements (segments in 1D, two triangles per grid square in 2D).
struct Mesh {
    int m = 2;
    double h = 0.0;
    std::vector<Point> nodes;
    std::vector<bool> boundary;                    // node is fixed to the boundary data
    /// Element {x0, x1, y0, y1}: grad = ((h[x1] - h[x0]) / h, (h[y1] - h[y0]) / h);
    /// 1D segments use only x0, x1.
    std::vector<std::array<int, 4>> elements;
    double element_measure = 0.0;                  // h / 2 * h in 2D, h in 1D
    std::vector<std::pair<int, int>> edges;        // grid-adjacent node pairs
    double area = 0.0;                             // total element measure
};

std::shared_ptr<const Mesh> build_mesh(const Region& region);

/// Boundary data b on the nodes of the boundary.
struct BoundaryData {
    enum class Kind { affine, points } kind = Kind::affine;
    std::vector<double> s{0.0, 0.0};
    double offset = 0.0;
    std::vector<std::pair<Point, double>> points;  // matched to nodes within 1e-7 (sup norm)

    static BoundaryData affine(std::vector<double> s, double offset = 0.0);
    double at(const Point& x) const;
};

struct Profile {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> values;
};

class InadmissibleError : public ValidationError {
public:
    InadmissibleError(Point x, Point y, const std::string& what)
        : ValidationError("boundary", what), x_(x), y_(y) {}
    const Point& first() const noexcept { return x_; }
    const Point& second() const noexcept { return y_; }

private:
    Point x_, y_;
};

struct Admissibility {
    bool ok = true;
    std::optional<std::pair<int, int>> witness;  // node indices (equal when a boundary value is off)
    std::string reason;
};

/// Grid Lipschitz constraints |h(u) - h(v)| <= h_grid on adjacent nodes and,
/// when `b` is given, boundary equalities, all within 1e-9.
Admissibility check_admissible(const Profile& p, const BoundaryData* b = nullptr);

/// Tension with an optional sup-norm domain; outside it the slope is clamped
/// and a quadratic penalty kappa |s - clamp(s)|^2 is added.
struct EntropyModel {
    TensionFunction tension;
    double domain = std::numeric_limits<double>::infinity();
    double kappa = 10.0;

    static EntropyModel from_table(const SurfaceTensionTable& table, double kappa = 10.0);
    static EntropyModel quadratic(int m);  // ent(s) = |s|^2
};

struct EntropyEvaluation {
    double value = 0.0;
    std::size_t clamped_elements = 0;
};

/// sum over elements of |T| * ent(grad h on T).
EntropyEvaluation macroscopic_entropy(const Profile& p, const EntropyModel& model);

/// Continuum Kirszbraun extension x -> min over boundary nodes y of b(y) + |x - y|_1.
Profile kirszbraun_profile(std::shared_ptr<const Mesh> mesh, const BoundaryData& b);

/// Throws InadmissibleError with a witness when boundary data is not 1-Lipschitz in l1.
void check_boundary_data(const Mesh& mesh, const BoundaryData& b);

/// Cyclic pairwise clipping onto the grid Lipschitz polytope with boundary nodes fixed.
/// Returns the number of passes.
int project_lipschitz(const Mesh& mesh, std::vector<double>& values, double tol = 1e-10, int max_passes = 100000);

struct SolverParams {
    int max_iterations = 20000;
    double step = 2.0;          // step_k = step * h^2 / sqrt(k) on the L2 gradient
    int patience = 4000;        // stop after this many iterations without improvement
    double tol = 1e-12;         // improvement threshold for patience
    int trace_every = 10;
};

struct SolveResult {
    Profile profile;            // best iterate
    double initial_entropy = 0.0;
    double final_entropy = 0.0;
    int iterations = 0;
    int best_iteration = 0;
    std::size_t clamped_elements = 0;  // at the best iterate
    std::vector<std::pair<int, double>> trace;  // (iteration, best entropy so far)
};

SolveResult minimize(const Region& region, const BoundaryData& b, const EntropyModel& model,
                     const SolverParams& params = {});

Region region_from_json(const nlohmann::json& j);
nlohmann::json region_to_json(const Region& r);
BoundaryData boundary_data_from_json(const nlohmann::json& j);
nlohmann::json boundary_data_to_json(const BoundaryData& b);

/// CSV x (, y), h per node.
void write_profile_csv(std::ostream& os, const Profile& p);
nlohmann::json solve_report(const SolveResult& r);

}  // namespace tension_lab
