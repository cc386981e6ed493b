#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "torusflow/scenario.hpp"

namespace {

using namespace torusflow;
namespace fs = std::filesystem;

json minimal_counting() {
    return json{{"kind", "counting"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"family", {{"kind", "ray_flow"}, {"direction", {1.0, 0.6180339887498949}}}}};
}

json minimal_stabilizer() {
    return json{{"kind", "stabilizer"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"translates",
                 json::array({json{{"base", {0.25, 0.375}}},
                              json{{"base", {0.75, 0.375}}}})}};
}

std::string error_text(const json& cfg) {
    try {
        parse_scenario(cfg);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(ScenarioParse, FillsDocumentedDefaults) {
    Scenario sc = parse_scenario(minimal_counting());
    EXPECT_EQ(sc.kind, "counting");
    EXPECT_EQ(sc.t_max, 50);
    EXPECT_EQ(sc.budget, 100000u);
    EXPECT_EQ(sc.relation_bound, 50);
    EXPECT_EQ(sc.torsion_bound, 12);
    EXPECT_EQ(sc.arity, 3);
    EXPECT_EQ(sc.trials, 100u);
    EXPECT_EQ(sc.seed, 1u);
    EXPECT_EQ(sc.max_workers, 1);
    EXPECT_EQ(sc.membership_tol, 1e-6);
    EXPECT_EQ(sc.reconstruction_tol, 1e-9);
    EXPECT_EQ(sc.out, "out");
    ASSERT_TRUE(sc.lattice.has_value());
    ASSERT_TRUE(sc.family.has_value());
    EXPECT_EQ(sc.lattice->dim(), 2);

    json closure = {{"kind", "essential_closure"},
                    {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                    {"family", {{"kind", "linear_flow"}, {"direction", {1.0, 1.5}}}}};
    Scenario c = parse_scenario(closure);
    ASSERT_EQ(c.r_schedule.size(), 3u);
    EXPECT_EQ(c.r_schedule[0], 1.0);
    EXPECT_EQ(c.r_schedule[1], 4.0);
    EXPECT_EQ(c.r_schedule[2], 16.0);
}

TEST(ScenarioParse, UnknownKeyIsNamedWithLocation) {
    json cfg = minimal_counting();
    cfg["fooo"] = 1;
    std::string msg = error_text(cfg);
    EXPECT_NE(msg.find("fooo"), std::string::npos);
    EXPECT_NE(msg.find("config"), std::string::npos);

    json nested = minimal_counting();
    nested["family"]["spin"] = true;
    msg = error_text(nested);
    EXPECT_NE(msg.find("spin"), std::string::npos);
    EXPECT_NE(msg.find("family"), std::string::npos);
}

TEST(ScenarioParse, RejectsKeysFromOtherKinds) {
    json cfg = minimal_counting();
    cfg["translates"] = json::array({json{{"base", {0.0, 0.0}}}});
    EXPECT_NE(error_text(cfg).find("translates"), std::string::npos);

    json st = minimal_stabilizer();
    st["family"] = {{"kind", "ray_flow"}, {"direction", {1.0, 0.0}}};
    EXPECT_NE(error_text(st).find("family"), std::string::npos);
}

TEST(ScenarioParse, RejectsOutOfRangeValues) {
    auto broken = [](const char* key, json value) {
        json cfg = minimal_counting();
        cfg[key] = std::move(value);
        return cfg;
    };
    EXPECT_THROW(parse_scenario(broken("budget", 0)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("t_max", -1)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("arity", 1)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("torsion_bound", 0)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("relation_bound", 0)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("trials", 0)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("max_workers", 0)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("max_workers", 500)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("seed", 1.5)), ConfigError);
    EXPECT_THROW(parse_scenario(broken("out", "")), ConfigError);
    EXPECT_THROW(parse_scenario(broken("tolerance", {{"membership", 0.7}})), ConfigError);
    EXPECT_THROW(parse_scenario(broken("tolerance", {{"membership", -1e-6}})), ConfigError);
    EXPECT_THROW(parse_scenario(broken("tolerance", {{"reconstruction", 0.0}})), ConfigError);
    EXPECT_THROW(parse_scenario(broken("kind", "sorcery")), ConfigError);
}

TEST(ScenarioParse, LatticeSpecIsStrict) {
    auto with_lattice = [](json lat) {
        json cfg = minimal_counting();
        cfg["lattice"] = std::move(lat);
        return cfg;
    };
    EXPECT_THROW(parse_scenario(with_lattice({{"dimension_n", 0}, {"preset", "identity"}})),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_lattice({{"dimension_n", 1}})), ConfigError);
    EXPECT_THROW(parse_scenario(with_lattice({{"dimension_n", 1},
                                              {"preset", "identity"},
                                              {"basis", {{1.0, 0.0}, {0.0, 1.0}}}})),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_lattice({{"dimension_n", 1}, {"preset", "diagonal"}})),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_lattice(
                     {{"dimension_n", 1}, {"preset", "identity"}, {"preset_seed", 3}})),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_lattice(
                     {{"dimension_n", 1}, {"basis", {{1.0, 0.0}}}})),
                 ConfigError);
    // Dependent basis rows are a construction failure mapped to ConfigError.
    EXPECT_THROW(parse_scenario(with_lattice(
                     {{"dimension_n", 1}, {"basis", {{1.0, 0.0}, {2.0, 0.0}}}})),
                 ConfigError);

    json seeded = with_lattice(
        {{"dimension_n", 2}, {"preset", "random_unimodular"}, {"preset_seed", 9}});
    seeded["family"] = {{"kind", "ray_flow"}, {"direction", {1.0, 0.0, 0.0, 0.0}}};
    EXPECT_EQ(parse_scenario(seeded).lattice->dim(), 4);
}

TEST(ScenarioParse, FamilySpecIsStrict) {
    auto with_family = [](json fam) {
        json cfg = minimal_counting();
        cfg["family"] = std::move(fam);
        return cfg;
    };
    EXPECT_NE(error_text(with_family({{"kind", "wavelet"}})).find("wavelet"),
              std::string::npos);
    EXPECT_THROW(parse_scenario(with_family(
                     {{"kind", "graph_curve"}, {"fn", "tan"}, {"coeffs", {1.0}}})),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_family({{"kind", "union"}, {"members", json::array()}})),
                 ConfigError);
    // Ambient dimension mismatch against the n = 1 lattice.
    EXPECT_THROW(parse_scenario(with_family(
                     {{"kind", "ray_flow"}, {"direction", {1.0, 0.0, 0.0, 0.0}}})),
                 ConfigError);
    // Family-level invariants surface as ConfigError too.
    EXPECT_THROW(parse_scenario(with_family(
                     {{"kind", "bounded_blob"}, {"center", {0.0, 0.0}}, {"radius", 0.0}})),
                 ConfigError);
}

TEST(ScenarioParse, TranslatesAreStrict) {
    auto with_translates = [](json tr) {
        json cfg = minimal_stabilizer();
        cfg["translates"] = std::move(tr);
        return cfg;
    };
    EXPECT_THROW(parse_scenario(with_translates(json::array())), ConfigError);
    EXPECT_THROW(parse_scenario(with_translates(json::array({json{{"base", {0.1}}}}))),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_translates(json::array(
                     {json{{"base", {0.1, 0.2}}, {"generators", {{1, 2, 3}}}}}))),
                 ConfigError);
    EXPECT_THROW(parse_scenario(with_translates(json::array(
                     {json{{"base", {0.1, 0.2}}, {"generators", {{1, 2}, {2, 4}}}}}))),
                 ConfigError);
}

TEST(ScenarioParse, TextAndFileEntryPoints) {
    EXPECT_THROW(parse_scenario_text("{ not json"), ConfigError);
    try {
        parse_scenario_text("[1, 2]");
        FAIL() << "arrays are not configs";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("object"), std::string::npos);
    }
    EXPECT_THROW(load_scenario("/nonexistent/torusflow.json"), ConfigError);
    Scenario sc = parse_scenario_text(minimal_counting().dump());
    EXPECT_EQ(sc.kind, "counting");
}

TEST(ScenarioEcho, OmitsExecutionPlumbingAndIrrelevantKnobs) {
    Scenario sc = parse_scenario(minimal_counting());
    sc.max_workers = 8;
    sc.out = "/tmp/somewhere";
    json echo = ser::scenario_echo(sc);
    EXPECT_FALSE(echo.contains("max_workers"));
    EXPECT_FALSE(echo.contains("out"));
    EXPECT_FALSE(echo.contains("r_schedule"));
    EXPECT_FALSE(echo.contains("torsion_bound"));
    EXPECT_FALSE(echo.contains("arity"));
    EXPECT_EQ(echo["t_max"].get<Int>(), 50);
    EXPECT_EQ(echo["budget"].get<std::uint64_t>(), 100000u);
    EXPECT_EQ(echo["seed"].get<std::uint64_t>(), 1u);
    EXPECT_EQ(echo["kind"], "counting");
    EXPECT_TRUE(echo.contains("family"));
    EXPECT_TRUE(echo.contains("lattice"));
    EXPECT_EQ(echo["tolerance"]["membership"].get<double>(), 1e-6);

    Scenario st = parse_scenario(minimal_stabilizer());
    json stecho = ser::scenario_echo(st);
    EXPECT_TRUE(stecho.contains("torsion_bound"));
    EXPECT_TRUE(stecho.contains("translates"));
    EXPECT_FALSE(stecho.contains("budget"));
    EXPECT_FALSE(stecho.contains("t_max"));
    EXPECT_FALSE(stecho.contains("family"));
}

TEST(ScenarioRun, CountingReportIsByteStableAcrossRunsAndWorkers) {
    json cfg = minimal_counting();
    cfg["t_max"] = 12;
    cfg["budget"] = 20000;
    cfg["seed"] = 5;
    Scenario sc = parse_scenario(cfg);
    Report a = run_scenario(sc);
    Report b = run_scenario(sc);
    Scenario wide = parse_scenario(cfg);
    wide.max_workers = 8;
    Report c = run_scenario(wide);
    EXPECT_EQ(canonical_report(a), canonical_report(b));
    EXPECT_EQ(canonical_report(a), canonical_report(c));

    const json& results = a.body["results"];
    ASSERT_FALSE(results["rows"].empty());
    EXPECT_FALSE(results["t0"].is_null());
    for (const auto& row : results["rows"]) EXPECT_TRUE(row["pass"].get<bool>());
    EXPECT_FALSE(a.body.contains("wall_clock_ms"));
}

TEST(ScenarioRun, StabilizerFindsTorsionPair) {
    Scenario sc = parse_scenario(minimal_stabilizer());
    Report r = run_scenario(sc);
    const json& results = r.body["results"];
    EXPECT_EQ(results["finite_order"].get<std::size_t>(), 2u);
    EXPECT_EQ(results["connected"]["rank"].get<int>(), 0);
}

TEST(ScenarioRun, PhiProbeReportsWitnessTuples) {
    json cfg = {{"kind", "phi_probe"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"translates",
                 json::array({json{{"base", {0.37, 0.58}}, {"generators", {{1, 2}}}}})},
                {"arity", 3}};
    Report r = run_scenario(parse_scenario(cfg));
    const json& res = r.body["results"];
    EXPECT_TRUE(res["collision_found"].get<bool>());
    EXPECT_EQ(res["trials_used"].get<std::uint64_t>(), 1u);
    ASSERT_TRUE(res.contains("tuple_a"));
    EXPECT_EQ(res["tuple_a"].size(), 3u);
    EXPECT_EQ(res["phi_value"].size(), 2u);
}

TEST(ScenarioRun, DecomposeSplitsAxisLine) {
    json cfg = {{"kind", "decompose"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"translates",
                 json::array({json{{"base", {0.37, 0.58}}, {"generators", {{1, 0}}}}})}};
    Report r = run_scenario(parse_scenario(cfg));
    const json& res = r.body["results"];
    EXPECT_EQ(res["b"]["rank"].get<int>(), 1);
    ASSERT_EQ(res["vprime"].size(), 1u);
    EXPECT_EQ(res["vprime"][0]["rank"].get<int>(), 0);
    EXPECT_NEAR(res["vprime"][0]["base"][1].get<double>(), 0.58, 1e-12);
    EXPECT_GE(res["recomposition_jaccard"].get<double>(), 0.999);

    // Finite stabilizer is an experiment failure, not a config failure.
    json rigid = {{"kind", "decompose"},
                  {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                  {"translates",
                   json::array({json{{"base", {0.2, 0.3}}}, json{{"base", {0.55, 0.8}}}})}};
    EXPECT_THROW(run_scenario(parse_scenario(rigid)), ExperimentError);
}

TEST(ScenarioRun, EssentialClosureOfIrrationalFlowFillsTorus) {
    json cfg = {{"kind", "essential_closure"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"family",
                 {{"kind", "linear_flow"}, {"direction", {1.0, 1.4142135623730951}}}},
                {"budget", 3000},
                {"relation_bound", 20},
                {"seed", 3}};
    Report r = run_scenario(parse_scenario(cfg));
    const json& res = r.body["results"];
    EXPECT_TRUE(res["stabilized"].get<bool>());
    ASSERT_EQ(res["entries"].size(), 3u);
    const json& last = res["entries"].back()["closure"];
    ASSERT_EQ(last["components"].size(), 1u);
    EXPECT_EQ(last["components"][0]["rank"].get<int>(), 2);
}

TEST(ScenarioRun, PipelineProducesAllStages) {
    json cfg = {{"kind", "pipeline"},
                {"lattice", {{"dimension_n", 1}, {"preset", "identity"}}},
                {"family",
                 {{"kind", "exp_spiral"}, {"linear_coords", 0}, {"exponential_coords", 1}}},
                {"t_max", 10},
                {"budget", 4000},
                {"r_schedule", {1.0, 4.0, 16.0}},
                {"relation_bound", 10},
                {"torsion_bound", 4},
                {"seed", 2}};
    Report r = run_scenario(parse_scenario(cfg));
    const json& res = r.body["results"];
    EXPECT_TRUE(res.contains("counting"));
    EXPECT_TRUE(res.contains("closure"));
    EXPECT_TRUE(res.contains("special_witnesses"));
    EXPECT_TRUE(res.contains("equidistribution"));
    EXPECT_TRUE(res.contains("stabilizer"));
    EXPECT_TRUE(res.contains("decomposition"));
}

TEST(ScenarioEmit, WritesReportAndSidecars) {
    json cfg = minimal_counting();
    cfg["t_max"] = 8;
    cfg["budget"] = 8000;
    Scenario sc = parse_scenario(cfg);
    Report r = run_scenario(sc);

    fs::path dir = fs::temp_directory_path() /
                   ("torusflow_scenario_test_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    emit_report(r, dir);

    std::ifstream in(dir / "report.json");
    ASSERT_TRUE(in.good());
    json full = json::parse(in);
    EXPECT_TRUE(full.contains("wall_clock_ms"));
    EXPECT_EQ(full["tool"], "torusflow");
    EXPECT_EQ(full["version"], kToolVersion);
    full.erase("wall_clock_ms");
    EXPECT_EQ(full.dump(2), canonical_report(r));

    std::ifstream csv(dir / "counting.csv");
    ASSERT_TRUE(csv.good());
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "T,cumulative,bound,pass");
    std::size_t data_lines = 0;
    for (std::string line; std::getline(csv, line);)
        if (!line.empty()) ++data_lines;
    EXPECT_EQ(data_lines, r.body["results"]["rows"].size());
    EXPECT_TRUE(fs::exists(dir / "witnesses.csv"));

    Report st = run_scenario(parse_scenario(minimal_stabilizer()));
    emit_report(st, dir);
    std::ifstream fcsv(dir / "stabilizer_finite.csv");
    ASSERT_TRUE(fcsv.good());
    std::getline(fcsv, header);
    EXPECT_EQ(header, "index,coords");
    data_lines = 0;
    for (std::string line; std::getline(fcsv, line);)
        if (!line.empty()) ++data_lines;
    EXPECT_EQ(data_lines, 2u);

    fs::remove_all(dir);
}

}  // namespace
