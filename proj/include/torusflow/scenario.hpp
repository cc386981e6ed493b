// Experiment configuration and reporting. Configs are strict JSON: every
// object rejects keys it does not know, naming the offending key, and every
// omitted optional field falls back to a documented default that is echoed
// into the report. Reports are canonical JSON bodies (sorted keys, no
// volatile data) plus CSV sidecars; the wall-clock measurement is kept out
// of the body so that byte comparison of bodies is the determinism check.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "torusflow/closure.hpp"
#include "torusflow/counting.hpp"
#include "torusflow/special.hpp"

namespace torusflow {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

/// Invalid or ill-typed configuration; CLI exit code 2.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Failure inside an experiment (precondition violations, guards); exit 3.
class ExperimentError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Failure writing outputs; exit 4.
class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfg {

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
    return *it;
}

inline double get_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    return v.get<double>();
}

inline std::int64_t get_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
    return v.get<std::int64_t>();
}

inline std::string get_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + " must be a string");
    return v.get<std::string>();
}

inline Vec get_vector(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<int>(i)] = get_number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

inline IntMat get_int_matrix(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + " must be an array of integer rows");
    IntMat m(0, 0);
    for (std::size_t r = 0; r < v.size(); ++r) {
        const json& row = v[r];
        std::string rw = where + "[" + std::to_string(r) + "]";
        if (!row.is_array()) throw ConfigError(rw + " must be an array of integers");
        std::vector<Int> out;
        for (std::size_t c = 0; c < row.size(); ++c)
            out.push_back(get_integer(row[c], rw + "[" + std::to_string(c) + "]"));
        m.rows.push_back(std::move(out));
    }
    return m;
}

inline Lattice parse_lattice(const json& spec) {
    check_keys(spec, "lattice", {"dimension_n", "preset", "preset_seed", "basis"});
    int n = static_cast<int>(get_integer(require(spec, "dimension_n", "lattice"),
                                         "lattice.dimension_n"));
    if (n < 1 || n > 8) throw ConfigError("lattice.dimension_n must be in [1, 8]");
    bool has_preset = spec.contains("preset"), has_basis = spec.contains("basis");
    if (has_preset == has_basis)
        throw ConfigError("lattice needs exactly one of \"preset\" or \"basis\"");
    try {
        if (has_basis) {
            const json& rows = spec["basis"];
            if (!rows.is_array() || rows.size() != static_cast<std::size_t>(2 * n))
                throw ConfigError("lattice.basis must have 2n rows");
            Mat b(2 * n, 2 * n);
            for (int r = 0; r < 2 * n; ++r) {
                Vec row = get_vector(rows[r], "lattice.basis[" + std::to_string(r) + "]");
                if (row.size() != 2 * n)
                    throw ConfigError("lattice.basis rows must have 2n entries");
                b.row(r) = row.transpose();
            }
            return Lattice(n, b);
        }
        std::string preset = get_string(spec["preset"], "lattice.preset");
        if (preset == "identity") {
            if (spec.contains("preset_seed"))
                throw ConfigError("lattice.preset_seed only applies to random_unimodular");
            return Lattice::identity(n);
        }
        if (preset == "random_unimodular") {
            auto seed = static_cast<std::uint64_t>(get_integer(
                require(spec, "preset_seed", "lattice"), "lattice.preset_seed"));
            return Lattice::random_unimodular(n, seed);
        }
        throw ConfigError("lattice.preset must be \"identity\" or \"random_unimodular\"");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("lattice: ") + e.what());
    }
}

inline ParamSet parse_family(const json& spec, const std::string& where) {
    try {
        std::string kind = get_string(require(spec, "kind", where), where + ".kind");
        if (kind == "linear_flow" || kind == "ray_flow") {
            check_keys(spec, where, {"kind", "direction", "offset"});
            Vec dir = get_vector(require(spec, "direction", where), where + ".direction");
            Vec off = spec.contains("offset")
                          ? get_vector(spec["offset"], where + ".offset")
                          : Vec(Vec::Zero(dir.size()));
            return kind == "linear_flow" ? ParamSet::linear_flow(dir, off)
                                         : ParamSet::ray_flow(dir, off);
        }
        if (kind == "exp_spiral") {
            check_keys(spec, where, {"kind", "linear_coords", "exponential_coords"});
            int s = static_cast<int>(get_integer(require(spec, "linear_coords", where),
                                                 where + ".linear_coords"));
            int r = static_cast<int>(get_integer(require(spec, "exponential_coords", where),
                                                 where + ".exponential_coords"));
            return ParamSet::exp_spiral(s, r);
        }
        if (kind == "graph_curve") {
            check_keys(spec, where, {"kind", "fn", "coeffs", "t_min", "t_max"});
            std::string fn = get_string(require(spec, "fn", where), where + ".fn");
            GraphFn g;
            if (fn == "poly")
                g.kind = GraphFn::Kind::Poly;
            else if (fn == "exp")
                g.kind = GraphFn::Kind::Exp;
            else if (fn == "sin")
                g.kind = GraphFn::Kind::Sin;
            else if (fn == "cos")
                g.kind = GraphFn::Kind::Cos;
            else
                throw ConfigError(where + ".fn must be poly, exp, sin, or cos");
            Vec coeffs = get_vector(require(spec, "coeffs", where), where + ".coeffs");
            g.coeffs.assign(coeffs.data(), coeffs.data() + coeffs.size());
            double lo = spec.contains("t_min")
                            ? get_number(spec["t_min"], where + ".t_min")
                            : -std::numeric_limits<double>::infinity();
            double hi = spec.contains("t_max")
                            ? get_number(spec["t_max"], where + ".t_max")
                            : std::numeric_limits<double>::infinity();
            return ParamSet::graph_curve(std::move(g), lo, hi);
        }
        if (kind == "bounded_blob") {
            check_keys(spec, where, {"kind", "center", "radius"});
            Vec center = get_vector(require(spec, "center", where), where + ".center");
            double radius = get_number(require(spec, "radius", where), where + ".radius");
            return ParamSet::bounded_blob(center, radius);
        }
        if (kind == "union") {
            check_keys(spec, where, {"kind", "members"});
            const json& members = require(spec, "members", where);
            if (!members.is_array() || members.empty())
                throw ConfigError(where + ".members must be a nonempty array");
            std::vector<ParamSet> parts;
            for (std::size_t i = 0; i < members.size(); ++i)
                parts.push_back(
                    parse_family(members[i], where + ".members[" + std::to_string(i) + "]"));
            return ParamSet::union_of(std::move(parts));
        }
        throw ConfigError(where + ".kind \"" + kind + "\" is not a known family");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline std::vector<AffineTranslate> parse_translates(const json& spec, int ambient_dim) {
    if (!spec.is_array() || spec.empty())
        throw ConfigError("translates must be a nonempty array");
    std::vector<AffineTranslate> out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        std::string where = "translates[" + std::to_string(i) + "]";
        check_keys(spec[i], where, {"base", "generators"});
        Vec base = get_vector(require(spec[i], "base", where), where + ".base");
        if (base.size() != ambient_dim)
            throw ConfigError(where + ".base must have 2n entries");
        IntMat gens = spec[i].contains("generators")
                          ? get_int_matrix(spec[i]["generators"], where + ".generators")
                          : IntMat(0, 0);
        for (const auto& row : gens.rows)
            if (row.size() != static_cast<std::size_t>(ambient_dim))
                throw ConfigError(where + ".generators rows must have 2n entries");
        try {
            out.push_back(AffineTranslate{torus_reduce(base),
                                          RationalSubtorus::from_rows(ambient_dim, gens)});
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace cfg

struct Scenario {
    std::string kind;
    json lattice_spec;
    json family_spec;      // null unless the kind samples a set
    json translates_spec;  // null unless the kind starts from translates
    Int t_max = 50;
    std::uint64_t budget = 100'000;
    std::vector<double> r_schedule;
    int relation_bound = kDefaultRelationBound;
    int torsion_bound = kDefaultTorsionBound;
    int arity = 3;
    std::uint64_t trials = 100;
    std::uint64_t seed = 1;
    int max_workers = 1;
    double membership_tol = kMembershipTol;
    double reconstruction_tol = kReconstructionTol;
    std::string out = "out";  // report directory, CLI --out wins

    std::optional<Lattice> lattice;   // constructed during parsing
    std::optional<ParamSet> family;
    std::vector<AffineTranslate> translates;
};

/// Parses and validates a strict-JSON scenario config.
inline Scenario parse_scenario(const json& root) {
    cfg::check_keys(root, "config",
                    {"kind", "lattice", "family", "translates", "t_max", "budget",
                     "r_schedule", "relation_bound", "torsion_bound", "arity", "trials",
                     "seed", "max_workers", "tolerance", "out"});
    Scenario sc;
    sc.kind = cfg::get_string(cfg::require(root, "kind", "config"), "config.kind");
    const bool wants_family =
        sc.kind == "counting" || sc.kind == "essential_closure" || sc.kind == "pipeline";
    const bool wants_translates =
        sc.kind == "stabilizer" || sc.kind == "decompose" || sc.kind == "phi_probe";
    if (!wants_family && !wants_translates)
        throw ConfigError("config.kind \"" + sc.kind + "\" is not a known experiment");

    sc.lattice_spec = cfg::require(root, "lattice", "config");
    sc.lattice = cfg::parse_lattice(sc.lattice_spec);
    const int d = sc.lattice->dim();

    if (wants_family) {
        sc.family_spec = cfg::require(root, "family", "config");
        sc.family = cfg::parse_family(sc.family_spec, "family");
        if (sc.family->ambient_dim() != d)
            throw ConfigError("family ambient dimension does not match the lattice");
        if (root.contains("translates"))
            throw ConfigError("unknown key \"translates\" in config for kind " + sc.kind);
    } else {
        sc.translates_spec = cfg::require(root, "translates", "config");
        sc.translates = cfg::parse_translates(sc.translates_spec, d);
        if (root.contains("family"))
            throw ConfigError("unknown key \"family\" in config for kind " + sc.kind);
    }

    if (root.contains("t_max")) {
        sc.t_max = cfg::get_integer(root["t_max"], "config.t_max");
        if (sc.t_max < 0) throw ConfigError("config.t_max must be >= 0");
    }
    if (root.contains("budget")) {
        auto b = cfg::get_integer(root["budget"], "config.budget");
        if (b < 1) throw ConfigError("config.budget must be >= 1");
        sc.budget = static_cast<std::uint64_t>(b);
    }
    if (root.contains("r_schedule")) {
        Vec sched = cfg::get_vector(root["r_schedule"], "config.r_schedule");
        sc.r_schedule.assign(sched.data(), sched.data() + sched.size());
    } else if (sc.kind == "essential_closure" || sc.kind == "pipeline") {
        sc.r_schedule = {1.0, 4.0, 16.0};
    }
    if (root.contains("relation_bound")) {
        sc.relation_bound =
            static_cast<int>(cfg::get_integer(root["relation_bound"], "config.relation_bound"));
        if (sc.relation_bound < 1) throw ConfigError("config.relation_bound must be >= 1");
    }
    if (root.contains("torsion_bound")) {
        sc.torsion_bound =
            static_cast<int>(cfg::get_integer(root["torsion_bound"], "config.torsion_bound"));
        if (sc.torsion_bound < 1) throw ConfigError("config.torsion_bound must be >= 1");
    }
    if (root.contains("arity")) {
        sc.arity = static_cast<int>(cfg::get_integer(root["arity"], "config.arity"));
        if (sc.arity < 2) throw ConfigError("config.arity must be >= 2");
    }
    if (root.contains("trials")) {
        auto t = cfg::get_integer(root["trials"], "config.trials");
        if (t < 1) throw ConfigError("config.trials must be >= 1");
        sc.trials = static_cast<std::uint64_t>(t);
    }
    if (root.contains("seed"))
        sc.seed = static_cast<std::uint64_t>(cfg::get_integer(root["seed"], "config.seed"));
    if (root.contains("out")) {
        sc.out = cfg::get_string(root["out"], "config.out");
        if (sc.out.empty()) throw ConfigError("config.out must be a non-empty path");
    }
    if (root.contains("max_workers")) {
        sc.max_workers =
            static_cast<int>(cfg::get_integer(root["max_workers"], "config.max_workers"));
        if (sc.max_workers < 1 || sc.max_workers > 256)
            throw ConfigError("config.max_workers must be in [1, 256]");
    }
    if (root.contains("tolerance")) {
        const json& tol = root["tolerance"];
        cfg::check_keys(tol, "tolerance", {"membership", "reconstruction"});
        if (tol.contains("membership")) {
            sc.membership_tol = cfg::get_number(tol["membership"], "tolerance.membership");
            if (!(sc.membership_tol > 0.0 && sc.membership_tol < 0.5))
                throw ConfigError("tolerance.membership must be in (0, 0.5)");
        }
        if (tol.contains("reconstruction")) {
            sc.reconstruction_tol =
                cfg::get_number(tol["reconstruction"], "tolerance.reconstruction");
            if (!(sc.reconstruction_tol > 0.0))
                throw ConfigError("tolerance.reconstruction must be positive");
        }
    }
    return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_scenario(root);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenario_text(text);
}

// ---------------------------------------------------------------------------
// Serialization helpers.

namespace ser {

inline json vec_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json intmat_json(const IntMat& m) {
    json a = json::array();
    for (const auto& row : m.rows) {
        json r = json::array();
        for (Int v : row) r.push_back(v);
        a.push_back(r);
    }
    return a;
}

inline json subtorus_json(const RationalSubtorus& s) {
    return json{{"rank", s.rank()},
                {"generators", intmat_json(s.generators())},
                {"annihilator", intmat_json(s.annihilator())}};
}

inline json translate_json(const AffineTranslate& t) {
    return json{{"base", vec_json(t.base.coords)},
                {"rank", t.rank()},
                {"generators", intmat_json(t.direction.generators())}};
}

inline json closure_json(const DetectedClosure& c) {
    json comps = json::array();
    for (const auto& comp : c.components) comps.push_back(translate_json(comp));
    json out{{"components", comps},
             {"residual", c.residual},
             {"relation_bound", c.relation_bound},
             {"stabilized", c.stabilized},
             {"r_at_detection", c.r_at_detection},
             {"primary_relation_count", c.primary_relations.row_count()}};
    if (!c.fit_warning.empty()) out["fit_warning"] = c.fit_warning;
    return out;
}

inline json scenario_echo(const Scenario& sc) {
    // Execution plumbing (max_workers, out directory, wall clock) stays out
    // of the echo so report bodies are byte-identical across worker counts
    // and output locations.
    json echo{{"kind", sc.kind},
              {"lattice", sc.lattice_spec},
              {"seed", sc.seed},
              {"tolerance",
               {{"membership", sc.membership_tol},
                {"reconstruction", sc.reconstruction_tol}}}};
    const bool wants_family =
        sc.kind == "counting" || sc.kind == "essential_closure" || sc.kind == "pipeline";
    if (wants_family) echo["family"] = sc.family_spec;
    if (!wants_family) echo["translates"] = sc.translates_spec;
    if (sc.kind == "counting" || sc.kind == "pipeline") {
        echo["t_max"] = sc.t_max;
    }
    if (wants_family) echo["budget"] = sc.budget;
    if (sc.kind == "essential_closure" || sc.kind == "pipeline") {
        echo["r_schedule"] = sc.r_schedule;
        echo["relation_bound"] = sc.relation_bound;
    }
    if (sc.kind == "stabilizer" || sc.kind == "pipeline") echo["torsion_bound"] = sc.torsion_bound;
    if (sc.kind == "phi_probe") {
        echo["arity"] = sc.arity;
        echo["trials"] = sc.trials;
    }
    return echo;
}

}  // namespace ser

struct Report {
    json body;             // canonical content, no volatile fields
    double wall_ms = 0.0;  // measured separately, injected only on emission
};

// ---------------------------------------------------------------------------
// Experiment drivers.

namespace run_detail {

inline json counting_json(const SigmaSample& census, const CountingReport& rep) {
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back(json{{"T", r.T},
                            {"cumulative", r.cumulative},
                            {"bound", r.bound},
                            {"pass", r.pass}});
    json out{{"rows", rows},
             {"discovered", census.witnesses.size()},
             {"evaluations", census.evaluations},
             {"t_max", census.t_max},
             {"truncated", census.truncated},
             {"empty", census.empty_flagged}};
    if (rep.t0)
        out["t0"] = *rep.t0;
    else
        out["t0"] = nullptr;
    return out;
}

inline json closure_result_json(const EssentialClosureResult& res) {
    json entries = json::array();
    for (const auto& e : res.entries)
        entries.push_back(json{{"r_inner", e.r_inner},
                               {"r_outer", e.r_outer},
                               {"samples", e.sample_count},
                               {"closure", ser::closure_json(e.closure)}});
    return json{{"entries", entries},
                {"stabilized", res.stabilized},
                {"truncated", res.truncated}};
}

inline json stabilizer_json(const StabilizerResult& st) {
    json finite = json::array();
    for (const auto& t : st.finite_part) finite.push_back(ser::vec_json(t.coords));
    return json{{"connected", ser::subtorus_json(st.connected)},
                {"finite_part", finite},
                {"finite_order", st.finite_part.size()}};
}

inline json decomposition_json(const Decomposition& dec, double jaccard) {
    json vp = json::array();
    for (const auto& c : dec.vprime) vp.push_back(ser::translate_json(c));
    return json{{"b", ser::subtorus_json(dec.b)},
                {"bprime", ser::subtorus_json(dec.bprime)},
                {"vprime", vp},
                {"recomposition_jaccard", jaccard}};
}

inline json probe_json(const InjectivityProbe& probe, int arity) {
    auto tuple_json = [](const std::vector<TorusPoint>& t) {
        json a = json::array();
        for (const auto& p : t) a.push_back(ser::vec_json(p.coords));
        return a;
    };
    json out{{"arity", arity},
             {"collision_found", probe.collision_found},
             {"trials_used", probe.trials_used},
             {"exhausted", probe.exhausted}};
    if (probe.collision_found) {
        out["tuple_a"] = tuple_json(probe.tuple_a);
        out["tuple_b"] = tuple_json(probe.tuple_b);
        out["phi_value"] = tuple_json(phi_m(probe.tuple_a));
    }
    return out;
}

}  // namespace run_detail

/// Runs the configured experiment and assembles the canonical report body.
/// Library precondition violations surface as ExperimentError.
inline Report run_scenario(const Scenario& sc) {
    auto t_start = std::chrono::steady_clock::now();
    json results;
    try {
        const Lattice& lat = *sc.lattice;
        if (sc.kind == "counting") {
            SigmaSample census = sigma_census(*sc.family, lat, sc.t_max, sc.budget, sc.seed,
                                              sc.max_workers);
            CountingReport rep = counting_bound_report(census);
            results = run_detail::counting_json(census, rep);
            json wit = json::array();
            for (const auto& [coeffs, point] : census.witnesses)
                wit.push_back(json{{"lambda", coeffs}, {"witness", ser::vec_json(point)}});
            results["witnesses"] = wit;
        } else if (sc.kind == "essential_closure") {
            EssentialClosureResult res =
                essential_closure_estimate(*sc.family, lat, sc.r_schedule, sc.budget,
                                           sc.relation_bound, sc.seed, sc.max_workers,
                                           sc.membership_tol);
            results = run_detail::closure_result_json(res);
        } else if (sc.kind == "stabilizer") {
            UnionOfTranslates v(sc.translates, sc.membership_tol);
            StabilizerResult st = stabilizer(v, sc.torsion_bound, sc.membership_tol);
            results = run_detail::stabilizer_json(st);
        } else if (sc.kind == "decompose") {
            UnionOfTranslates v(sc.translates, sc.membership_tol);
            Decomposition dec = decompose(v, lat, sc.membership_tol);
            double jac = recomposition_jaccard(v, dec, 1e-2, sc.membership_tol);
            results = run_detail::decomposition_json(dec, jac);
        } else if (sc.kind == "phi_probe") {
            UnionOfTranslates v(sc.translates, sc.membership_tol);
            InjectivityProbe probe = phi_injectivity_probe(v, sc.arity, sc.trials, sc.seed);
            results = run_detail::probe_json(probe, sc.arity);
        } else if (sc.kind == "pipeline") {
            SigmaSample census = sigma_census(*sc.family, lat, sc.t_max, sc.budget, sc.seed,
                                              sc.max_workers);
            results["counting"] =
                census.witnesses.empty()
                    ? json{{"empty", true}}
                    : run_detail::counting_json(census, counting_bound_report(census));
            EssentialClosureResult res =
                essential_closure_estimate(*sc.family, lat, sc.r_schedule, sc.budget,
                                           sc.relation_bound, sc.seed, sc.max_workers,
                                           sc.membership_tol);
            results["closure"] = run_detail::closure_result_json(res);
            if (!res.entries.empty()) {
                const auto& last = res.entries.back();
                SampleResult s = sample_annulus(*sc.family, last.r_inner, last.r_outer,
                                                sc.budget,
                                                sc.seed + (res.entries.size() - 1),
                                                sc.max_workers);
                std::vector<TorusPoint> projected;
                for (const Vec& p : s.points) projected.push_back(torus_project(p, lat));
                json witnesses = json::array();
                std::size_t take = std::min<std::size_t>(projected.size(), 10);
                std::size_t stride = take > 0 ? projected.size() / take : 1;
                for (std::size_t i = 0; i < take; ++i) {
                    const TorusPoint& p = projected[i * stride];
                    json w{{"point", ser::vec_json(p.coords)}};
                    try {
                        auto dir = weakly_special_witness(last.closure, p, sc.membership_tol);
                        w["special"] = dir ? ser::subtorus_json(*dir) : json(nullptr);
                    } catch (const std::exception& e) {
                        w["error"] = e.what();
                    }
                    witnesses.push_back(std::move(w));
                }
                results["special_witnesses"] = witnesses;
                if (!projected.empty())
                    results["equidistribution"] = [&] {
                        EquidistStats st = equidistribution_stats(projected, 0.1);
                        return json{{"coverage", st.coverage},
                                    {"star_discrepancy", st.star_discrepancy}};
                    }();
                UnionOfTranslates detected(last.closure.components, sc.membership_tol);
                StabilizerResult st = stabilizer(detected, sc.torsion_bound,
                                                 sc.membership_tol);
                results["stabilizer"] = run_detail::stabilizer_json(st);
                if (st.connected.rank() > 0) {
                    Decomposition dec = decompose(detected, lat, sc.membership_tol);
                    double jac = recomposition_jaccard(detected, dec, 1e-2,
                                                       sc.membership_tol);
                    results["decomposition"] = run_detail::decomposition_json(dec, jac);
                } else {
                    results["decomposition"] = json{{"skipped", "finite stabilizer"}};
                }
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ExperimentError(e.what());
    }
    Report report;
    report.body = json{{"tool", "torusflow"},
                       {"version", kToolVersion},
                       {"kind", sc.kind},
                       {"config", ser::scenario_echo(sc)},
                       {"results", results}};
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return report;
}

// ---------------------------------------------------------------------------
// Emission: JSON report plus CSV sidecars.

namespace emit_detail {

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

inline void write_counting_csv(const json& counting, const std::filesystem::path& dir) {
    auto csv = open_out(dir / "counting.csv");
    csv << "T,cumulative,bound,pass\n";
    for (const auto& row : counting["rows"])
        csv << row["T"].get<Int>() << ',' << row["cumulative"].get<std::uint64_t>() << ','
            << fmt(row["bound"].get<double>()) << ',' << (row["pass"].get<bool>() ? 1 : 0)
            << '\n';
    if (!csv) throw IoError("failed writing counting.csv");
}

inline void write_witness_csv(const json& witnesses, const std::filesystem::path& dir) {
    auto csv = open_out(dir / "witnesses.csv");
    if (witnesses.empty()) {
        csv << "lambda,witness\n";
        return;
    }
    std::size_t d = witnesses[0]["lambda"].size();
    for (std::size_t i = 0; i < d; ++i) csv << "lambda_" << i << ',';
    for (std::size_t i = 0; i < d; ++i) csv << "witness_" << i << (i + 1 < d ? ',' : '\n');
    for (const auto& w : witnesses) {
        for (const auto& c : w["lambda"]) csv << c.get<Int>() << ',';
        const auto& pt = w["witness"];
        for (std::size_t i = 0; i < d; ++i)
            csv << fmt(pt[i].get<double>()) << (i + 1 < d ? ',' : '\n');
    }
    if (!csv) throw IoError("failed writing witnesses.csv");
}

inline void write_closure_csv(const json& closure, const std::filesystem::path& dir) {
    auto csv = open_out(dir / "closure.csv");
    csv << "r_inner,r_outer,samples,components,residual,stabilized\n";
    for (const auto& e : closure["entries"]) {
        const auto& c = e["closure"];
        csv << fmt(e["r_inner"].get<double>()) << ',' << fmt(e["r_outer"].get<double>()) << ','
            << e["samples"].get<std::uint64_t>() << ',' << c["components"].size() << ','
            << fmt(c["residual"].get<double>()) << ','
            << (c["stabilized"].get<bool>() ? 1 : 0) << '\n';
    }
    if (!csv) throw IoError("failed writing closure.csv");
}

inline void write_finite_part_csv(const json& stab, const std::filesystem::path& dir) {
    auto csv = open_out(dir / "stabilizer_finite.csv");
    csv << "index,coords\n";
    std::size_t i = 0;
    for (const auto& t : stab["finite_part"]) {
        csv << i++;
        for (const auto& c : t) csv << ',' << fmt(c.get<double>());
        csv << '\n';
    }
    if (!csv) throw IoError("failed writing stabilizer_finite.csv");
}

}  // namespace emit_detail

/// Writes report.json (body plus the wall-clock field) and the CSV sidecars
/// appropriate for the experiment kind into out_dir.
inline void emit_report(const Report& report, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    json full = report.body;
    full["wall_clock_ms"] = report.wall_ms;
    {
        auto out = emit_detail::open_out(out_dir / "report.json");
        out << full.dump(2) << '\n';
        if (!out) throw IoError("failed writing report.json");
    }
    const json& results = report.body["results"];
    const std::string kind = report.body["kind"].get<std::string>();
    if (kind == "counting") {
        emit_detail::write_counting_csv(results, out_dir);
        emit_detail::write_witness_csv(results["witnesses"], out_dir);
    } else if (kind == "essential_closure") {
        emit_detail::write_closure_csv(results, out_dir);
    } else if (kind == "stabilizer") {
        emit_detail::write_finite_part_csv(results, out_dir);
    } else if (kind == "pipeline") {
        if (results.contains("counting") && results["counting"].contains("rows"))
            emit_detail::write_counting_csv(results["counting"], out_dir);
        if (results.contains("closure"))
            emit_detail::write_closure_csv(results["closure"], out_dir);
        if (results.contains("stabilizer"))
            emit_detail::write_finite_part_csv(results["stabilizer"], out_dir);
    }
}

/// Byte-comparison form of a report: the canonical body only.
inline std::string canonical_report(const Report& report) { return report.body.dump(2); }

}  // namespace torusflow
