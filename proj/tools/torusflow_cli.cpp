// Command-line driver: loads a scenario config, applies flag overrides,
// runs the experiment, and writes the report bundle.
//
// Exit codes: 0 success, 2 invalid config, 3 experiment failure, 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "torusflow/torusflow.hpp"

int main(int argc, char** argv) {
    CLI::App app{"torusflow: lattice counting and essential-closure laboratory"};
    app.set_version_flag("--version", std::string("torusflow ") + torusflow::kToolVersion);

    std::string config_path;
    std::string out_dir;  // empty: use the config's "out", default "out"
    std::int64_t seed = -1;
    int max_workers = 0;
    double membership_tol = 0.0;

    app.add_option("--config", config_path, "Scenario config (strict JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory for report.json and CSV sidecars");
    app.add_option("--seed", seed, "Override the config seed")->check(CLI::NonNegativeNumber);
    app.add_option("--max-workers", max_workers, "Override the config worker count")
        ->check(CLI::PositiveNumber);
    app.add_option("--tolerance", membership_tol, "Override the membership tolerance")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        torusflow::Scenario sc = torusflow::load_scenario(config_path);
        if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
        if (max_workers > 0) sc.max_workers = max_workers;
        if (!out_dir.empty()) sc.out = out_dir;
        if (membership_tol > 0.0) {
            if (membership_tol >= 0.5) {
                std::fprintf(stderr, "error: --tolerance must be below 0.5\n");
                return 2;
            }
            sc.membership_tol = membership_tol;
        }
        torusflow::Report report = torusflow::run_scenario(sc);
        torusflow::emit_report(report, sc.out);
        std::printf("%s: wrote %s/report.json (%.1f ms)\n", sc.kind.c_str(), sc.out.c_str(),
                    report.wall_ms);
        return 0;
    } catch (const torusflow::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const torusflow::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const torusflow::ExperimentError& e) {
        std::fprintf(stderr, "experiment error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "experiment error: %s\n", e.what());
        return 3;
    }
}
