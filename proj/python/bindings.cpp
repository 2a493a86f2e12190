#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tension_lab/error.hpp"
#include "tension_lab/gibbs.hpp"
#include "tension_lab/lattice.hpp"
#include "tension_lab/random_field.hpp"
#include "tension_lab/sampler.hpp"
#include "tension_lab/shape_solver.hpp"
#include "tension_lab/superadditive.hpp"
#include "tension_lab/surface_tension.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace tension_lab;

namespace {

py::object to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<long long>());
        case json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list l;
            for (const auto& x : j) l.append(to_py(x));
            return std::move(l);
        }
        case json::value_t::object: {
            py::dict d;
            for (const auto& [k, v] : j.items()) d[py::str(k)] = to_py(v);
            return std::move(d);
        }
        default: return py::none();
    }
}

json from_py(const py::handle& o) {
    const std::string text = py::module_::import("json").attr("dumps")(o).cast<std::string>();
    return json::parse(text);
}

FieldSpec field_spec(const py::object& f) {
    if (f.is_none()) return FieldSpec::zero();
    if (py::isinstance<py::str>(f) && f.cast<std::string>() == "zero") return FieldSpec::zero();
    FieldSpec spec = from_py(f).get<FieldSpec>();
    spec.validate();
    return spec;
}

py::int_ big_to_py(const BigCount& c) { return py::int_(py::str(c.str())); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact partition functions, surface tensions, samplers and limit shapes for random height functions";

    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<InfeasibleError> infeasible_error(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation_error, e.what());
        } catch (const NotExtendableError& e) {
            py::set_error(validation_error, e.what());
        } catch (const InfeasibleError& e) {
            py::set_error(infeasible_error, e.what());
        } catch (const json::exception& e) {
            py::set_error(validation_error, e.what());
        }
    });

    m.def(
        "count_extensions",
        [](int dim, int n, std::vector<double> s) {
            return big_to_py(count_extensions(canonical_boundary(Box::cube(dim, n), Slope(std::move(s)))));
        },
        py::arg("m"), py::arg("n"), py::arg("s"), "|M(S_n)| for canonical boundary data of slope s (exact int).");

    m.def(
        "count_boundary",
        [](std::vector<int> lo, std::vector<int> hi, std::vector<int> values) {
            return big_to_py(count_extensions(make_boundary(Box(std::move(lo), std::move(hi)), std::move(values))));
        },
        py::arg("lo"), py::arg("hi"), py::arg("values"),
        "Extensions of explicit boundary values (inner boundary sites in raster order).");

    m.def(
        "log_partition",
        [](int dim, int n, std::vector<double> s, const py::object& field) {
            const Field f(field_spec(field));
            const auto hb = canonical_boundary(Box::cube(dim, n), Slope(std::move(s)));
            py::gil_scoped_release release;
            return log_partition(hb, f).value;
        },
        py::arg("m"), py::arg("n"), py::arg("s"), py::arg("field") = py::none());

    m.def(
        "ent_fixed",
        [](std::vector<double> s, int n, const py::object& field) {
            const Field f(field_spec(field));
            const Slope sl(std::move(s));
            py::gil_scoped_release release;
            return ent_fixed(sl, n, f);
        },
        py::arg("s"), py::arg("n"), py::arg("field") = py::none());

    m.def(
        "ent_free",
        [](std::vector<double> s, int n, double delta, const py::object& field) {
            const Field f(field_spec(field));
            const Slope sl(std::move(s));
            py::gil_scoped_release release;
            return ent_free(sl, n, delta, f);
        },
        py::arg("s"), py::arg("n"), py::arg("delta"), py::arg("field") = py::none());

    m.def(
        "ent_annealed",
        [](std::vector<double> s, int n, const py::object& field, int samples) {
            const FieldSpec spec = field_spec(field);
            const Slope sl(std::move(s));
            AnnealedEstimate a;
            {
                py::gil_scoped_release release;
                a = ent_annealed(sl, n, spec, samples);
            }
            py::dict d;
            d["mean"] = a.mean;
            d["stderr"] = a.stderr_;
            d["stddev"] = a.stddev;
            d["values"] = a.values;
            return d;
        },
        py::arg("s"), py::arg("n"), py::arg("field"), py::arg("samples"));

    m.def(
        "sandwich_check",
        [](std::vector<double> s, int n, double delta, const py::object& field) {
            const Field f(field_spec(field));
            return to_py(sandwich_to_json(sandwich_check(Slope(std::move(s)), n, delta, f)));
        },
        py::arg("s"), py::arg("n"), py::arg("delta"), py::arg("field") = py::none());

    m.def(
        "superadditivity_defect",
        [](std::vector<int> lo, std::vector<int> hi, std::vector<double> s, const py::object& field,
           std::uint64_t seed, int depth, bool strict) {
            std::mt19937_64 rng(seed);
            const auto p = random_partition(Box(std::move(lo), std::move(hi)), rng, depth);
            const auto r = superadditivity_defect(p, Field(field_spec(field)), Slope(std::move(s)), strict);
            py::dict d;
            d["parent_F"] = r.parent_F;
            d["parts_F"] = r.parts_F;
            d["boundary_sites"] = r.boundary_sites;
            d["A"] = r.A;
            d["defect"] = r.defect;
            d["parts"] = to_py(json(p.parts));
            d["pass"] = r.pass();
            return d;
        },
        py::arg("lo"), py::arg("hi"), py::arg("s"), py::arg("field") = py::none(), py::arg("seed") = 0,
        py::arg("depth") = 3, py::arg("strict") = false, "Defect of a random box partition seeded by `seed`.");

    m.def(
        "wiener_cover",
        [](std::vector<std::vector<int>> W, std::vector<int> n, int dim) {
            CoverInstance inst{std::move(W), std::move(n)};
            const auto r = wiener_cover(inst, dim);
            py::dict d;
            d["selected"] = r.selected;
            d["covered_volume"] = r.covered_volume;
            d["bound"] = r.bound;
            d["total"] = r.total;
            d["disjoint"] = r.disjoint;
            d["pass"] = r.pass();
            return d;
        },
        py::arg("W"), py::arg("n"), py::arg("m"));

    m.def(
        "empirical_gamma",
        [](const py::object& field, std::vector<double> s, std::vector<int> n_list, int samples) {
            const FieldSpec spec = field_spec(field);
            const Slope sl(std::move(s));
            std::vector<GammaPoint> g;
            {
                py::gil_scoped_release release;
                g = empirical_gamma(spec, sl, n_list, samples);
            }
            py::list out;
            for (const auto& p : g) {
                py::dict d;
                d["n"] = p.n;
                d["mean"] = p.mean;
                d["stderr"] = p.stderr_;
                d["samples"] = p.samples;
                out.append(d);
            }
            return out;
        },
        py::arg("field"), py::arg("s"), py::arg("n_list"), py::arg("samples"));

    m.def(
        "sample",
        [](int dim, int n, std::vector<double> s, const py::object& field, std::uint64_t sweeps, long long burn_in,
           std::uint64_t thin, std::uint64_t seed, int chains, bool random_scan) {
            const Field f(field_spec(field));
            const auto hb = canonical_boundary(Box::cube(dim, n), Slope(std::move(s)));
            SamplerOptions opt;
            opt.sweeps = sweeps;
            opt.burn_in = burn_in;
            opt.thin = thin;
            opt.seed = seed;
            opt.chains = chains;
            opt.random_scan = random_scan;
            SampleRun run;
            {
                py::gil_scoped_release release;
                run = sample(hb, f, opt);
            }
            const auto rows = static_cast<py::ssize_t>(run.snapshots.size());
            const auto cols = static_cast<py::ssize_t>(run.box.size());
            py::array_t<int> arr({rows, cols});
            auto a = arr.mutable_unchecked<2>();
            for (py::ssize_t i = 0; i < rows; ++i)
                for (py::ssize_t k = 0; k < cols; ++k) a(i, k) = run.snapshots[static_cast<std::size_t>(i)].values[k];
            return arr;
        },
        py::arg("m"), py::arg("n"), py::arg("s"), py::arg("field") = py::none(), py::arg("sweeps") = 1000,
        py::arg("burn_in") = -1, py::arg("thin") = 10, py::arg("seed") = 0, py::arg("chains") = 1,
        py::arg("random_scan") = false, "Heat-bath snapshots, one row per snapshot in raster order.");

    m.def(
        "concentration_experiment",
        [](int n, std::vector<double> s, const py::object& field, double delta, double eps, std::uint64_t sweeps,
           std::uint64_t thin, std::uint64_t seed) {
            const Field f(field_spec(field));
            SamplerOptions opt;
            opt.sweeps = sweeps;
            opt.thin = thin;
            opt.seed = seed;
            ConcentrationResult r;
            {
                py::gil_scoped_release release;
                r = concentration_experiment(n, Slope(std::move(s)), f, delta, eps, opt);
            }
            py::dict d;
            d["samples"] = r.samples;
            d["inside"] = r.inside;
            d["fraction"] = r.fraction;
            d["max_distance"] = r.max_distance;
            d["mean_distance"] = r.mean_distance;
            return d;
        },
        py::arg("n"), py::arg("s"), py::arg("field") = py::none(), py::arg("delta") = 0.3, py::arg("eps") = 0.5,
        py::arg("sweeps") = 1000, py::arg("thin") = 10, py::arg("seed") = 0);

    m.def(
        "tabulate_tension",
        [](const py::object& field, int n, int samples, int dim, int points, double margin) {
            const FieldSpec spec = field_spec(field);
            SurfaceTensionTable t;
            {
                py::gil_scoped_release release;
                t = tabulate_tension(spec, n, samples, SlopeGrid{dim, points, margin});
            }
            return to_py(table_to_json(t));
        },
        py::arg("field"), py::arg("n"), py::arg("samples"), py::arg("m") = 1, py::arg("points") = 9,
        py::arg("margin") = 0.05, "Convexified surface-tension table as a dict (same layout as the CLI JSON).");

    m.def(
        "minimize",
        [](const py::object& region, const py::object& boundary, const py::object& table, double kappa, double step,
           int max_iterations, int patience) {
            const Region r = region_from_json(from_py(region));
            const BoundaryData b = boundary_data_from_json(from_py(boundary));
            const EntropyModel model = table.is_none() ? EntropyModel::quadratic(r.m)
                                                       : EntropyModel::from_table(table_from_json(from_py(table)), kappa);
            SolverParams p;
            p.step = step;
            p.max_iterations = max_iterations;
            p.patience = patience;
            SolveResult res;
            {
                py::gil_scoped_release release;
                res = minimize(r, b, model, p);
            }
            py::dict d = to_py(solve_report(res));
            const auto& mesh = *res.profile.mesh;
            py::array_t<double> nodes({static_cast<py::ssize_t>(mesh.nodes.size()), static_cast<py::ssize_t>(mesh.m)});
            auto a = nodes.mutable_unchecked<2>();
            for (std::size_t v = 0; v < mesh.nodes.size(); ++v)
                for (int i = 0; i < mesh.m; ++i) a(static_cast<py::ssize_t>(v), i) = mesh.nodes[v][i];
            d["nodes"] = nodes;
            d["values"] = py::array_t<double>(static_cast<py::ssize_t>(res.profile.values.size()),
                                              res.profile.values.data());
            d["boundary"] = mesh.boundary;
            return d;
        },
        py::arg("region"), py::arg("boundary"), py::arg("table") = py::none(), py::arg("kappa") = 10.0,
        py::arg("step") = 2.0, py::arg("max_iterations") = 20000, py::arg("patience") = 4000,
        "Minimise the macroscopic entropy; table=None uses ent(s) = |s|^2.");
}
