#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "tension_lab/error.hpp"
#include "tension_lab/gibbs.hpp"
#include "tension_lab/lattice.hpp"
#include "tension_lab/parallel.hpp"
#include "tension_lab/random_field.hpp"
#include "tension_lab/sampler.hpp"
#include "tension_lab/shape_solver.hpp"
#include "tension_lab/superadditive.hpp"
#include "tension_lab/surface_tension.hpp"

namespace tension_lab::cli {

using nlohmann::json;

namespace {

enum class Type { integer, real, real_list, int_list, flag, text, field, document };

struct Key {
    std::string name;  // JSON key; the flag is --name with '_' -> '-'
    Type type;
    std::string help;
};

const std::vector<Key>& all_keys() {
    static const std::vector<Key> keys{
        {"m", Type::integer, "lattice / region dimension"},
        {"n", Type::integer, "box side length"},
        {"s", Type::real_list, "slope, comma separated (default 0 in every coordinate)"},
        {"field", Type::field, "field spec: inline JSON, a JSON file, or 'zero'"},
        {"seed", Type::integer, "master seed for Monte Carlo (sampler, partitions, cover instances)"},
        {"output", Type::text, "output path, '-' for stdout"},
        {"format", Type::text, "output format"},
        {"delta", Type::real, "free-boundary width / HP-ball radius"},
        {"eps", Type::real, "HP-ball grid spacing"},
        {"n_list", Type::int_list, "strictly increasing box sides, comma separated"},
        {"samples", Type::integer, "field realisations"},
        {"kind", Type::text, "fixed | free | annealed"},
        {"boundary", Type::document, "boundary data: inline JSON or a JSON file"},
        {"distribution", Type::flag, "also emit the exact distribution"},
        {"cap", Type::integer, "max configurations in an exact distribution"},
        {"instances", Type::integer, "number of random instances"},
        {"depth", Type::integer, "max recursion depth of random partitions"},
        {"strict", Type::flag, "use the realised field sup in the defect constant"},
        {"demo", Type::flag, "run the built-in demo instance"},
        {"alpha", Type::real, "level of the maximal-inequality probe"},
        {"n_max", Type::integer, "largest n in the maximal-inequality probe"},
        {"trials", Type::integer, "independent fields in the maximal-inequality probe"},
        {"sweeps", Type::integer, "post-burn-in sweeps per chain"},
        {"burn_in", Type::integer, "burn-in sweeps (< 0: 100 x interior sites)"},
        {"thin", Type::integer, "keep every thin-th sweep"},
        {"chains", Type::integer, "independent chains"},
        {"random_scan", Type::flag, "random-scan instead of raster sweeps"},
        {"points", Type::integer, "slope grid points per axis"},
        {"margin", Type::real, "slope grid stays in [-(1-margin), 1-margin]"},
        {"region", Type::document, "region: inline JSON or a JSON file"},
        {"table", Type::text, "tension table JSON file, or 'quadratic' for |s|^2"},
        {"step", Type::real, "solver step constant c (step_k = c h^2 / sqrt(k))"},
        {"max_iterations", Type::integer, "solver iteration cap"},
        {"patience", Type::integer, "stop after this many iterations without improvement"},
        {"kappa", Type::real, "penalty for gradients outside the table domain"},
        {"trace_every", Type::integer, "record the entropy every k iterations"},
        {"report", Type::text, "extra JSON report path (solve)"},
    };
    return keys;
}

const Key& key(const std::string& name) {
    for (const auto& k : all_keys())
        if (k.name == name) return k;
    throw std::logic_error("unknown key " + name);
}

const std::map<std::string, std::vector<std::string>>& command_keys() {
    static const std::vector<std::string> common{"m", "n", "s", "field", "seed", "output", "format"};
    static const std::map<std::string, std::vector<std::string>> extra{
        {"enumerate", {"boundary", "distribution", "cap"}},
        {"tension", {"kind", "delta", "samples"}},
        {"sweep", {"n_list", "samples"}},
        {"sandwich", {"delta", "n_list"}},
        {"superadd", {"instances", "depth", "strict"}},
        {"cover", {"demo", "instances"}},
        {"gamma", {"n_list", "samples", "alpha", "n_max", "trials"}},
        {"sample", {"sweeps", "burn_in", "thin", "chains", "random_scan"}},
        {"concentrate", {"delta", "eps", "sweeps", "burn_in", "thin", "chains", "random_scan"}},
        {"tabulate", {"samples", "points", "margin"}},
        {"solve", {"region", "boundary", "table", "step", "max_iterations", "patience", "kappa", "trace_every",
                   "report"}},
    };
    static const auto merged = [] {
        std::map<std::string, std::vector<std::string>> out;
        for (const auto& [cmd, ks] : extra) {
            auto v = common;
            v.insert(v.end(), ks.begin(), ks.end());
            out[cmd] = v;
        }
        return out;
    }();
    return merged;
}

const std::map<std::string, std::vector<std::string>>& formats() {
    static const std::map<std::string, std::vector<std::string>> f{
        {"enumerate", {"json", "csv"}}, {"tension", {"csv", "json"}},   {"sweep", {"csv", "json"}},
        {"sandwich", {"json", "csv"}},  {"superadd", {"json", "jsonl"}}, {"cover", {"json"}},
        {"gamma", {"json", "csv"}},     {"sample", {"csv", "bin", "json"}}, {"concentrate", {"json", "csv"}},
        {"tabulate", {"json", "csv"}},  {"solve", {"json", "csv"}},
    };
    return f;
}

std::string flag_name(const std::string& k) {
    std::string f = "--" + k;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

std::string read_file(const std::string& path, const std::string& param) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(param, "cannot read file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json parse_json_text(const std::string& text, const std::string& param) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(param, std::string("malformed JSON: ") + e.what());
    }
}

// Inline JSON, a file path, or (for fields) "zero".
json document_value(const json& v, const std::string& param, bool field) {
    if (!v.is_string()) return v;
    const std::string s = v.get<std::string>();
    if (field && s == "zero") {
        json j = FieldSpec::zero();
        return j;
    }
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (s[first] == '{' || s[first] == '[')) return parse_json_text(s, param);
    return parse_json_text(read_file(s, param), param);
}

long long parse_int(const std::string& text, const std::string& param) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError(param, "expected an integer, got '" + text + "'");
    }
    if (pos != text.size()) throw ValidationError(param, "expected an integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& text, const std::string& param) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError(param, "expected a number, got '" + text + "'");
    }
    if (pos != text.size()) throw ValidationError(param, "expected a number, got '" + text + "'");
    return v;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, ',')) {
        cur.erase(0, cur.find_first_not_of(" \t"));
        cur.erase(cur.find_last_not_of(" \t") + 1);
        out.push_back(cur);
    }
    return out;
}

json flag_to_json(const Key& k, const std::string& raw) {
    switch (k.type) {
        case Type::integer: return parse_int(raw, k.name);
        case Type::real: return parse_real(raw, k.name);
        case Type::real_list: {
            json a = json::array();
            for (const auto& t : split_commas(raw)) a.push_back(parse_real(t, k.name));
            return a;
        }
        case Type::int_list: {
            json a = json::array();
            for (const auto& t : split_commas(raw)) a.push_back(parse_int(t, k.name));
            return a;
        }
        case Type::flag: return true;
        case Type::text:
        case Type::field:
        case Type::document: return raw;
    }
    return raw;
}

// Type-check one value coming from a config file (or the flag layer).
void check_type(const Key& k, const json& v) {
    auto bad = [&](const std::string& what) { throw ValidationError(k.name, "expected " + what); };
    if (v.is_null()) return;
    switch (k.type) {
        case Type::integer:
            if (!v.is_number_integer()) bad("an integer");
            break;
        case Type::real:
            if (!v.is_number()) bad("a number");
            break;
        case Type::real_list:
            if (v.is_number()) break;
            if (!v.is_array()) bad("a list of numbers");
            for (const auto& x : v)
                if (!x.is_number()) bad("a list of numbers");
            break;
        case Type::int_list:
            if (!v.is_array()) bad("a list of integers");
            for (const auto& x : v)
                if (!x.is_number_integer()) bad("a list of integers");
            break;
        case Type::flag:
            if (!v.is_boolean()) bad("true or false");
            break;
        case Type::text:
            if (!v.is_string()) bad("a string");
            break;
        case Type::field:
        case Type::document:
            if (!v.is_string() && !v.is_object()) bad("a JSON object or a file path");
            break;
    }
}

FieldSpec field_of(const json& c) {
    FieldSpec f = c.at("field").get<FieldSpec>();
    return f;
}

Slope slope_of(const json& c) { return Slope(c.at("s").get<std::vector<double>>()); }

std::vector<int> n_list_of(const json& c) {
    auto v = c.at("n_list").get<std::vector<int>>();
    if (v.empty()) v.push_back(c.at("n").get<int>());
    return v;
}

SamplerOptions sampler_options(const json& c) {
    SamplerOptions o;
    o.sweeps = c.at("sweeps").get<std::uint64_t>();
    o.burn_in = c.at("burn_in").get<long long>();
    o.thin = c.at("thin").get<std::uint64_t>();
    o.chains = c.at("chains").get<int>();
    o.seed = c.at("seed").get<std::uint64_t>();
    o.random_scan = c.at("random_scan").get<bool>();
    return o;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

struct Output {
    std::string body;
    std::string summary;
};

// ---- commands ---------------------------------------------------------------

Output cmd_enumerate(const json& c) {
    const FieldSpec spec = field_of(c);
    const Field f(spec);
    BoundaryHeightFunction hb = c["boundary"].is_null()
                                    ? canonical_boundary(Box::cube(c["m"].get<int>(), c["n"].get<int>()), slope_of(c))
                                    : boundary_from_json(c["boundary"]);
    const BigCount count = count_extensions(hb);
    json out;
    out["config"] = c;
    out["box"] = hb.box;
    if (count <= std::numeric_limits<std::uint64_t>::max())
        out["count"] = count.convert_to<std::uint64_t>();
    else
        out["count"] = count.str();
    const bool empty = count == 0;
    out["logZ"] = empty ? json(nullptr) : json(log_partition(hb, f).value);
    out["field"] = f.fingerprint();
    std::ostringstream os;
    const bool csv = c["format"] == "csv";
    if (c["distribution"].get<bool>() && !empty) {
        const auto d = exact_distribution(hb, f, c["cap"].get<std::size_t>());
        if (csv) {
            os << "config_id,H,prob\n";
            os.precision(17);
            for (std::size_t i = 0; i < d.configurations.size(); ++i)
                os << i << "," << d.configurations[i].energy << "," << d.configurations[i].probability << "\n";
        } else {
            json rows = json::array();
            for (std::size_t i = 0; i < d.configurations.size(); ++i)
                rows.push_back({{"config_id", i},
                                {"values", d.configurations[i].values},
                                {"H", d.configurations[i].energy},
                                {"prob", d.configurations[i].probability}});
            out["distribution"] = rows;
        }
    }
    if (csv && os.str().empty()) {
        os.precision(17);
        os << "count,logZ\n" << count.str() << ",";
        if (!empty) os << out["logZ"].get<double>();
        os << "\n";
    }
    const std::string summary = "enumerate: count=" + count.str() +
                                (empty ? std::string(" logZ=-inf") : " logZ=" + fmt(out["logZ"].get<double>()));
    return {csv ? os.str() : out.dump(2) + "\n", summary};
}

Output tension_rows_output(const json& c, const std::vector<TensionSample>& rows, const std::string& summary) {
    if (c["format"] == "csv") {
        std::ostringstream os;
        write_tension_csv(os, rows);
        return {os.str(), summary};
    }
    json out;
    out["config"] = c;
    json r = json::array();
    for (const auto& t : rows) r.push_back(sample_to_json(t));
    out["rows"] = r;
    return {out.dump(2) + "\n", summary};
}

Output cmd_tension(const json& c) {
    const Slope s = slope_of(c);
    const int n = c["n"].get<int>();
    const FieldSpec spec = field_of(c);
    const std::string kind = c["kind"];
    TensionSample t;
    t.s = s.components();
    t.n = n;
    if (kind == "annealed") {
        const auto a = ent_annealed(s, n, spec, c["samples"].get<int>(), thread_count());
        t.kind = TensionKind::annealed;
        t.value = a.mean;
        t.stderr_ = a.stderr_;
        t.samples = c["samples"].get<int>();
        t.field = json(spec).dump();
    } else {
        const Field f(spec);
        t.field = f.fingerprint();
        if (kind == "free") {
            t.kind = TensionKind::free;
            t.delta = c["delta"].get<double>();
            t.value = ent_free(s, n, t.delta, f);
        } else {
            t.value = ent_fixed(s, n, f);
        }
    }
    return tension_rows_output(c, {t}, "tension: kind=" + kind + " n=" + std::to_string(n) + " ent=" + fmt(t.value));
}

Output cmd_sweep(const json& c) {
    const Slope s = slope_of(c);
    const FieldSpec spec = field_of(c);
    const auto ns = n_list_of(c);
    const int samples = c["samples"].get<int>();
    const auto rows = samples <= 1 ? convergence_study(s, Field(spec), ns, thread_count())
                                   : cross_omega_study(s, spec, ns, samples, thread_count());
    return tension_rows_output(c, rows,
                               "sweep: " + std::to_string(rows.size()) + " rows, last ent=" + fmt(rows.back().value));
}

Output cmd_sandwich(const json& c) {
    const Slope s = slope_of(c);
    const Field f(field_of(c));
    const double delta = c["delta"].get<double>();
    std::vector<SandwichReport> reports;
    for (int n : n_list_of(c)) reports.push_back(sandwich_check(s, n, delta, f));
    const bool all = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.holds(); });
    std::string summary = "sandwich: " + std::to_string(reports.size()) + " instance(s), " +
                          (all ? "all hold" : "VIOLATED");
    if (c["format"] == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "n,delta,radius,n_prime,ent_fixed_n,ent_free_n,ent_fixed_n_prime,error_term,lower_bound,"
              "literal_lower_bound,slack_upper,slack_lower,holds\n";
        for (const auto& r : reports)
            os << r.n << "," << r.delta << "," << r.radius << "," << r.n_prime << "," << r.ent_fixed_n << ","
               << r.ent_free_n << "," << r.ent_fixed_n_prime << "," << r.error_term << "," << r.lower_bound << ","
               << r.literal_lower_bound << "," << r.slack_upper << "," << r.slack_lower << "," << csv_bool(r.holds())
               << "\n";
        return {os.str(), summary};
    }
    json out;
    out["config"] = c;
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(sandwich_to_json(r));
    out["reports"] = arr;
    out["holds"] = all;
    return {out.dump(2) + "\n", summary};
}

Output cmd_superadd(const json& c) {
    const int m = c["m"].get<int>(), n = c["n"].get<int>();
    const Slope s = slope_of(c);
    const FieldSpec spec = field_of(c);
    const auto seed = c["seed"].get<std::uint64_t>();
    const int count = c["instances"].get<int>();
    const int depth = c["depth"].get<int>();
    const bool strict = c["strict"].get<bool>();
    const Box parent = Box::cube(m, n);
    std::vector<json> lines(static_cast<std::size_t>(count));
    std::vector<char> pass(lines.size(), 0);
    parallel_for(
        lines.size(),
        [&](std::size_t i) {
            std::mt19937_64 rng(derive_seed(seed, i));
            const auto p = random_partition(parent, rng, depth);
            const Field f(spec.with_seed(derive_seed(spec.seed, i)));
            const auto r = superadditivity_defect(p, f, s, strict);
            std::string text = json(p.parent).dump() + f.fingerprint() + json(s.components()).dump();
            for (const auto& b : p.parts) text += json(b).dump();
            auto line = report_line("superadditivity", instance_hash(text), "defect", r.defect, r.pass());
            line["parts"] = p.parts.size();
            line["A"] = r.A;
            lines[i] = line;
            pass[i] = r.pass();
        },
        thread_count());
    const auto ok = std::count(pass.begin(), pass.end(), 1);
    const std::string summary =
        "superadd: " + std::to_string(ok) + "/" + std::to_string(count) + " partitions with defect >= 0";
    if (c["format"] == "jsonl") {
        std::string body = json{{"config", c}}.dump() + "\n";
        for (const auto& l : lines) body += l.dump() + "\n";
        return {body, summary};
    }
    json out;
    out["config"] = c;
    out["reports"] = lines;
    out["passed"] = ok;
    out["all_pass"] = ok == count;
    return {out.dump(2) + "\n", summary};
}

Output cmd_cover(const json& c) {
    const int m = c["m"].get<int>();
    std::vector<CoverInstance> insts;
    if (c["demo"].get<bool>()) {
        CoverInstance inst;
        const int side = m == 1 ? 10 : 5;
        Site x(static_cast<std::size_t>(m), 0);
        const Box grid = Box::cube(m, side);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            grid.site_into(k, x);
            inst.W.push_back(x);
            inst.n.push_back(2);
        }
        insts.push_back(std::move(inst));
    } else {
        const auto seed = c["seed"].get<std::uint64_t>();
        for (int t = 0; t < c["instances"].get<int>(); ++t) {
            std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            CoverInstance inst;
            std::set<Site> seen;
            const int count = 1 + static_cast<int>(rng() % 200);
            const int range = m == 1 ? 400 : 20;
            while (static_cast<int>(inst.W.size()) < count) {
                Site x(static_cast<std::size_t>(m));
                for (auto& v : x) v = static_cast<int>(rng() % range);
                if (!seen.insert(x).second) continue;
                inst.W.push_back(x);
                inst.n.push_back(1 + static_cast<int>(rng() % 4));
            }
            insts.push_back(std::move(inst));
        }
    }
    json arr = json::array();
    bool all = true;
    std::string selected_text;
    for (const auto& inst : insts) {
        const auto r = wiener_cover(inst, m);
        all = all && r.pass();
        json sel = json::array();
        for (auto i : r.selected) sel.push_back(inst.W[i]);
        arr.push_back({{"W", inst.W},
                       {"n", inst.n},
                       {"selected", sel},
                       {"covered_volume", r.covered_volume},
                       {"bound", r.bound},
                       {"total", r.total},
                       {"disjoint", r.disjoint},
                       {"pass", r.pass()}});
        if (insts.size() == 1) selected_text = sel.dump();
    }
    json out;
    out["config"] = c;
    out["instances"] = arr;
    out["all_pass"] = all;
    std::string summary = "cover: " + std::to_string(insts.size()) + " instance(s), " + (all ? "all pass" : "FAILED");
    if (!selected_text.empty())
        summary += ", selected W' = " + selected_text + ", bound " + std::to_string(arr[0]["bound"].get<long long>()) +
                   " >= " + std::to_string(arr[0]["total"].get<long long>());
    return {out.dump(2) + "\n", summary};
}

Output cmd_gamma(const json& c) {
    const Slope s = slope_of(c);
    const FieldSpec spec = field_of(c);
    const auto series = empirical_gamma(spec, s, n_list_of(c), c["samples"].get<int>(), thread_count());
    std::string summary = "gamma: " + std::to_string(series.size()) + " n values, last mean=" + fmt(series.back().mean);
    json probe;
    if (!c["alpha"].is_null()) {
        const auto p = maximal_inequality_probe(spec, s, c["alpha"].get<double>(), c["n_max"].get<int>(),
                                                c["trials"].get<int>(), thread_count());
        probe = {{"alpha", p.alpha},         {"n_max", p.n_max}, {"trials", p.trials},
                 {"gamma", p.gamma},         {"empirical_prob", p.empirical_prob},
                 {"bound", p.bound},         {"tolerance", p.tolerance},
                 {"pass", p.pass()}};
        summary += "; maximal P=" + fmt(p.empirical_prob) + " bound=" + fmt(p.bound) + (p.pass() ? " ok" : " FAILED");
    }
    if (c["format"] == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "n,mean,stderr,samples\n";
        for (const auto& g : series) os << g.n << "," << g.mean << "," << g.stderr_ << "," << g.samples << "\n";
        return {os.str(), summary};
    }
    json out;
    out["config"] = c;
    json arr = json::array();
    for (const auto& g : series) arr.push_back({{"n", g.n}, {"mean", g.mean}, {"stderr", g.stderr_}, {"samples", g.samples}});
    out["series"] = arr;
    if (!probe.is_null()) out["maximal"] = probe;
    return {out.dump(2) + "\n", summary};
}

Output cmd_sample(const json& c) {
    const auto hb = canonical_boundary(Box::cube(c["m"].get<int>(), c["n"].get<int>()), slope_of(c));
    const auto run = sample(hb, Field(field_of(c)), sampler_options(c), thread_count());
    const std::string summary = "sample: " + std::to_string(run.snapshots.size()) + " snapshots";
    std::ostringstream os;
    const std::string format = c["format"];
    if (format == "bin") {
        write_samples_binary(os, run);
        return {os.str(), summary};
    }
    if (format == "csv") {
        write_samples_csv(os, run);
        return {os.str(), summary};
    }
    json out;
    out["config"] = c;
    out["box"] = run.box;
    json arr = json::array();
    for (const auto& sn : run.snapshots) arr.push_back({{"chain", sn.chain}, {"sweep", sn.sweep}, {"values", sn.values}});
    out["snapshots"] = arr;
    return {out.dump(2) + "\n", summary};
}

Output cmd_concentrate(const json& c) {
    const auto r = concentration_experiment(c["n"].get<int>(), slope_of(c), Field(field_of(c)),
                                            c["delta"].get<double>(), c["eps"].get<double>(), sampler_options(c),
                                            thread_count());
    const std::string summary = "concentrate: fraction in HP ball = " + fmt(r.fraction) + " (" +
                                std::to_string(r.inside) + "/" + std::to_string(r.samples) + ")";
    if (c["format"] == "csv") {
        std::ostringstream os;
        os.precision(17);
        os << "samples,inside,fraction,max_distance,mean_distance\n"
           << r.samples << "," << r.inside << "," << r.fraction << "," << r.max_distance << "," << r.mean_distance
           << "\n";
        return {os.str(), summary};
    }
    json out;
    out["config"] = c;
    out["samples"] = r.samples;
    out["inside"] = r.inside;
    out["fraction"] = r.fraction;
    out["max_distance"] = r.max_distance;
    out["mean_distance"] = r.mean_distance;
    return {out.dump(2) + "\n", summary};
}

Output cmd_tabulate(const json& c) {
    SlopeGrid grid{c["m"].get<int>(), c["points"].get<int>(), c["margin"].get<double>()};
    const auto t = tabulate_tension(field_of(c), c["n"].get<int>(), c["samples"].get<int>(), grid, thread_count());
    const std::string summary = "tabulate: " + std::to_string(t.grid.size()) + " slopes, n=" + std::to_string(t.n);
    if (c["format"] == "csv") {
        std::vector<TensionSample> rows;
        for (std::size_t i = 0; i < t.grid.size(); ++i) {
            TensionSample r;
            r.s = t.grid.at(i);
            r.n = t.n;
            r.kind = TensionKind::annealed;
            r.value = t.raw[i];
            r.stderr_ = t.stderr_[i];
            r.samples = t.samples;
            rows.push_back(r);
        }
        std::ostringstream os;
        write_tension_csv(os, rows);
        return {os.str(), summary};
    }
    json out = table_to_json(t);
    out["config"] = c;
    return {out.dump(2) + "\n", summary};
}

Output cmd_solve(const json& c) {
    const Region region = region_from_json(c["region"]);
    const BoundaryData b = boundary_data_from_json(c["boundary"]);
    EntropyModel model;
    const std::string table = c["table"];
    if (table == "quadratic") {
        model = EntropyModel::quadratic(region.m);
    } else {
        const json tj = parse_json_text(read_file(table, "table"), "table");
        model = EntropyModel::from_table(table_from_json(tj.contains("table") ? tj["table"] : tj),
                                         c["kappa"].get<double>());
    }
    if (model.tension.m != region.m) throw ValidationError("table", "table dimension does not match the region");
    SolverParams p;
    p.step = c["step"].get<double>();
    p.max_iterations = c["max_iterations"].get<int>();
    p.patience = c["patience"].get<int>();
    p.trace_every = c["trace_every"].get<int>();
    const auto r = minimize(region, b, model, p);
    const std::string summary = "solve: " + std::to_string(r.iterations) + " iterations, entropy " +
                                fmt(r.initial_entropy) + " -> " + fmt(r.final_entropy);
    json report;
    report["config"] = c;
    report["report"] = solve_report(r);
    if (!c["report"].get<std::string>().empty()) {
        std::ofstream rf(c["report"].get<std::string>(), std::ios::binary);
        if (!rf) throw ValidationError("report", "cannot write '" + c["report"].get<std::string>() + "'");
        rf << report.dump(2) << "\n";
    }
    if (c["format"] == "csv") {
        std::ostringstream os;
        write_profile_csv(os, r.profile);
        return {os.str(), summary};
    }
    json prof = json::array();
    for (std::size_t v = 0; v < r.profile.values.size(); ++v) {
        const auto& x = r.profile.mesh->nodes[v];
        prof.push_back(region.m == 1 ? json{x[0], r.profile.values[v]} : json{x[0], x[1], r.profile.values[v]});
    }
    report["profile"] = prof;
    return {report.dump(2) + "\n", summary};
}

std::string command_help(const std::string& cmd) {
    static const std::map<std::string, std::string> help{
        {"enumerate", "count extensions or list the exact Gibbs distribution of boundary data"},
        {"tension", "finite-volume surface tension (fixed, free or annealed)"},
        {"sweep", "surface tension along a list of box sizes"},
        {"sandwich", "check the fixed/free sandwich inequalities"},
        {"superadd", "superadditivity defects over random box partitions"},
        {"cover", "greedy Wiener covering of a family of boxes"},
        {"gamma", "empirical growth constant and maximal-inequality probe"},
        {"sample", "heat-bath Markov chain samples"},
        {"concentrate", "fraction of samples inside an HP ball around the affine profile"},
        {"tabulate", "convexified surface-tension table on a slope grid"},
        {"solve", "minimise the macroscopic entropy on a region"},
    };
    return help.at(cmd);
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"enumerate", "tension", "sweep",       "sandwich", "superadd", "cover",
                                            "gamma",     "sample",  "concentrate", "tabulate", "solve"};
    return c;
}

json default_config(const std::string& command) {
    const auto it = command_keys().find(command);
    if (it == command_keys().end()) throw ValidationError("command", "unknown command '" + command + "'");
    static const json all = {
        {"m", 2},
        {"n", 4},
        {"s", nullptr},
        {"field", "zero"},
        {"seed", 0},
        {"output", "-"},
        {"format", nullptr},
        {"delta", 0.2},
        {"eps", 0.5},
        {"n_list", json::array()},
        {"samples", 10},
        {"kind", "fixed"},
        {"boundary", nullptr},
        {"distribution", false},
        {"cap", 1000000},
        {"instances", 100},
        {"depth", 3},
        {"strict", false},
        {"demo", false},
        {"alpha", nullptr},
        {"n_max", 4},
        {"trials", 100},
        {"sweeps", 1000},
        {"burn_in", -1},
        {"thin", 10},
        {"chains", 1},
        {"random_scan", false},
        {"points", 9},
        {"margin", 0.05},
        {"region", nullptr},
        {"table", "quadratic"},
        {"step", 2.0},
        {"max_iterations", 20000},
        {"patience", 4000},
        {"kappa", 10.0},
        {"trace_every", 10},
        {"report", ""},
    };
    json c;
    c["command"] = command;
    for (const auto& k : it->second) c[k] = all.at(k);
    if (command == "sweep") c["samples"] = 1;  // one realisation: a convergence study
    return c;
}

json resolve_config(const std::string& command, const json& file_layer, const json& flag_layer) {
    json c = default_config(command);
    const auto& keys = command_keys().at(command);
    auto apply = [&](const json& layer, const std::string& origin) {
        if (layer.is_null()) return;
        if (!layer.is_object()) throw ValidationError("config", origin + " must be a JSON object");
        for (const auto& [k, v] : layer.items()) {
            if (k == "command") {
                if (v != command)
                    throw ValidationError("config", "config file is for '" + v.dump() + "', not '" + command + "'");
                continue;
            }
            const bool known = std::any_of(all_keys().begin(), all_keys().end(), [&](const Key& x) { return x.name == k; });
            if (!known) throw ValidationError(k, "unknown configuration key in " + origin);
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) continue;  // belongs to another command
            check_type(key(k), v);
            c[k] = v;
        }
    };
    apply(file_layer, "config file");
    apply(flag_layer, "flags");

    if (c["s"].is_number()) c["s"] = json::array({c["s"]});
    if (c["s"].is_null()) c["s"] = std::vector<double>(static_cast<std::size_t>(std::max(c["m"].get<int>(), 1)), 0.0);
    if (c["format"].is_null()) c["format"] = formats().at(command).front();
    if (c.contains("field")) {
        json f = document_value(c["field"], "field", true);
        FieldSpec spec;
        try {
            spec = f.get<FieldSpec>();
        } catch (const json::exception& e) {
            throw ValidationError("field", std::string("malformed field spec: ") + e.what());
        }
        c["field"] = spec;
    }
    if (c.contains("boundary") && !c["boundary"].is_null()) c["boundary"] = document_value(c["boundary"], "boundary", false);
    if (c.contains("region")) {
        if (c["region"].is_null()) {
            c["region"] = c["m"] == 1 ? json{{"interval", {0.0, 1.0}}, {"h", 1.0 / 32}}
                                      : json{{"rectangle", {0.0, 0.0, 1.0, 1.0}}, {"h", 1.0 / 32}};
        } else {
            c["region"] = document_value(c["region"], "region", false);
        }
        if (c["boundary"].is_null()) c["boundary"] = {{"affine", {{"s", c["s"]}, {"offset", 0.0}}}};
    }
    return c;
}

std::vector<std::string> validate(const json& c) {
    std::vector<std::string> v;
    auto add = [&](const std::string& param, const std::string& what) { v.push_back(param + ": " + what); };
    const std::string cmd = c.value("command", "");
    if (!command_keys().count(cmd)) {
        add("command", "unknown command '" + cmd + "'");
        return v;
    }
    auto has = [&](const char* k) { return c.contains(k) && !c[k].is_null(); };
    auto integer = [&](const char* k) { return c[k].get<long long>(); };
    auto real = [&](const char* k) { return c[k].get<double>(); };

    const long long m = integer("m");
    const int max_m = (cmd == "superadd" || cmd == "cover" || cmd == "enumerate" || cmd == "sample") ? 3 : 2;
    if (m < 1 || m > max_m) add("m", "1 <= m <= " + std::to_string(max_m) + " required by " + cmd);
    if (integer("n") < 1) add("n", "n >= 1 required");
    if (integer("seed") < 0) add("seed", "seed >= 0 required");

    const auto s = c["s"].get<std::vector<double>>();
    if (static_cast<long long>(s.size()) != m) add("s", "slope needs m = " + std::to_string(m) + " components");
    double sup = 0.0;
    for (double x : s) {
        if (!std::isfinite(x)) add("s", "components must be finite");
        sup = std::max(sup, std::abs(x));
    }
    if (sup > 1.0) add("s", "|s|_inf <= 1 required");
    else if (cmd == "sandwich" && sup >= 1.0)
        add("s", "|s|_inf < 1 required by sandwich (strict inequality; the constant 2/(1-|s|_inf) blows up)");

    try {
        c["field"].get<FieldSpec>().validate();
    } catch (const ValidationError& e) {
        add("field", e.what());
    }

    const auto& fs = formats().at(cmd);
    const std::string format = c["format"];
    if (std::find(fs.begin(), fs.end(), format) == fs.end()) {
        std::string allowed;
        for (const auto& f : fs) allowed += (allowed.empty() ? "" : ", ") + f;
        add("format", "'" + format + "' not supported by " + cmd + " (allowed: " + allowed + ")");
    }
    if (c["output"].get<std::string>().empty()) add("output", "empty path");

    const bool needs_delta = cmd == "sandwich" || cmd == "concentrate" || (cmd == "tension" && c["kind"] == "free");
    if (needs_delta && !(real("delta") > 0.0)) add("delta", "delta > 0 required");
    if (has("eps") && !(real("eps") > 0.0)) add("eps", "eps > 0 required");
    if (has("kind")) {
        const std::string k = c["kind"];
        if (k != "fixed" && k != "free" && k != "annealed") add("kind", "must be fixed, free or annealed");
        if (k == "annealed" && integer("samples") < 2) add("samples", "samples >= 2 required by annealed");
    }
    if (has("n_list")) {
        const auto ns = c["n_list"].get<std::vector<long long>>();
        for (std::size_t i = 0; i < ns.size(); ++i) {
            if (ns[i] < 1) add("n_list", "entries must be >= 1");
            if (i > 0 && ns[i] <= ns[i - 1]) add("n_list", "must be strictly increasing");
        }
    }
    if (has("samples")) {
        const long long need = cmd == "gamma" ? 2 : 1;
        if (integer("samples") < need) add("samples", "samples >= " + std::to_string(need) + " required by " + cmd);
    }
    if (has("cap") && integer("cap") < 1) add("cap", "cap >= 1 required");
    if (has("instances") && integer("instances") < 1) add("instances", "instances >= 1 required");
    if (has("depth") && integer("depth") < 0) add("depth", "depth >= 0 required");
    if (has("alpha") && !(real("alpha") > 0.0)) add("alpha", "alpha > 0 required");
    if (has("n_max") && integer("n_max") < 1) add("n_max", "n_max >= 1 required");
    if (has("trials") && integer("trials") < 1) add("trials", "trials >= 1 required");
    if (has("sweeps") && integer("sweeps") < 0) add("sweeps", "sweeps >= 0 required");
    if (has("thin") && integer("thin") < 1) add("thin", "thin >= 1 required");
    if (has("chains") && integer("chains") < 1) add("chains", "chains >= 1 required");
    if (has("points") && integer("points") < 2) add("points", "points >= 2 required");
    if (has("margin") && !(real("margin") >= 0.0 && real("margin") < 1.0)) add("margin", "0 <= margin < 1 required");
    if (has("step") && !(real("step") > 0.0)) add("step", "step > 0 required");
    if (has("max_iterations") && integer("max_iterations") < 0) add("max_iterations", "max_iterations >= 0 required");
    if (has("patience") && integer("patience") < 1) add("patience", "patience >= 1 required");
    if (has("kappa") && !(real("kappa") >= 0.0)) add("kappa", "kappa >= 0 required");
    if (cmd == "cover" && c["demo"].get<bool>() && m > 2) add("demo", "demo instance exists for m <= 2");
    if (cmd == "solve") {
        try {
            const Region r = region_from_json(c["region"]);
            if (r.m != m) add("region", "region dimension differs from m");
            boundary_data_from_json(c["boundary"]);
        } catch (const ValidationError& e) {
            add(e.parameter(), e.what());
        } catch (const json::exception& e) {
            add("region", e.what());
        }
    }
    return v;
}

int run(const json& c, std::ostream& out, std::ostream& err) {
    const std::string cmd = c.at("command");
    static const std::map<std::string, Output (*)(const json&)> table{
        {"enumerate", cmd_enumerate}, {"tension", cmd_tension},         {"sweep", cmd_sweep},
        {"sandwich", cmd_sandwich},   {"superadd", cmd_superadd},       {"cover", cmd_cover},
        {"gamma", cmd_gamma},         {"sample", cmd_sample},           {"concentrate", cmd_concentrate},
        {"tabulate", cmd_tabulate},   {"solve", cmd_solve},
    };
    const Output o = table.at(cmd)(c);
    const std::string path = c.at("output");
    if (path == "-") {
        out << o.body;
        out.flush();
        err << o.summary << "\n";
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ValidationError("output", "cannot write '" + path + "'");
        f << o.body;
        if (!f) throw Error("write to '" + path + "' failed");
        out << o.summary << "\n";
    }
    return kExitOk;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"tension-lab: exact partition functions, surface tensions, samplers and limit shapes for random "
                 "height functions"};
    app.name("tension-lab");
    app.require_subcommand(1, 1);
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::string config_path;
    bool dry_run = false;
    std::map<std::string, CLI::App*> subs;
    for (const auto& cmd : commands()) {
        auto* sub = app.add_subcommand(cmd, command_help(cmd));
        sub->add_option("--config", config_path, "JSON config file; flags override it");
        sub->add_flag("--dry-run", dry_run, "validate the resolved config and print it");
        for (const auto& k : command_keys().at(cmd)) {
            const Key& spec = key(k);
            if (spec.type == Type::flag)
                sub->add_flag(flag_name(k), flags[k], spec.help);
            else if (k == "output")
                sub->add_option("-o," + flag_name(k), raw[k], spec.help);
            else
                sub->add_option(flag_name(k), raw[k], spec.help);
        }
        subs[cmd] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }
    std::string cmd;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) cmd = name;
    CLI::App* sub = subs.at(cmd);

    try {
        json file_layer;
        if (!config_path.empty()) file_layer = parse_json_text(read_file(config_path, "config"), "config");
        json flag_layer = json::object();
        for (const auto& k : command_keys().at(cmd)) {
            if (sub->count(flag_name(k)) == 0) continue;
            const Key& spec = key(k);
            flag_layer[k] = spec.type == Type::flag ? json(flags[k]) : flag_to_json(spec, raw[k]);
        }
        const json config = resolve_config(cmd, file_layer, flag_layer);
        const auto violations = validate(config);
        if (!violations.empty()) {
            for (const auto& v : violations) err << "error: " << v << "\n";
            return kExitValidation;
        }
        if (dry_run) {
            out << config.dump(2) << "\n";
            return kExitOk;
        }
        return run(config, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NotExtendableError& e) {
        err << "error: boundary: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const json::exception& e) {
        err << "error: config: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace tension_lab::cli
