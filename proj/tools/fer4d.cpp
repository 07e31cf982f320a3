// Command-line driver for the staged pipeline.
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "fer4d/error.hpp"
#include "fer4d/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Landmark-assisted multi-view 4D facial expression recognition pipeline"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string workspace;
    std::uint64_t seed = 0;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;

    app.add_option("--config", config_path, "key = value configuration file (defaults apply when omitted)");
    app.add_option("--workspace", workspace, "workspace directory (default: $FER4D_WORKSPACE, else ./workspace)");
    auto* seed_opt = app.add_option("--seed", seed, "overrides the configured seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "suppress progress output");

    for (fer4d::Stage s : fer4d::all_stages()) {
        app.add_subcommand(std::string(fer4d::to_string(s)), "run the " + std::string(fer4d::to_string(s)) + " stage");
    }
    app.add_subcommand("all", "run every stage in order (cached stages are skipped)");
    app.add_subcommand("print-config", "print the effective configuration");
    app.fallthrough();

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        fer4d::PipelineConfig cfg = config_path.empty() ? fer4d::PipelineConfig{} : fer4d::load_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        cfg.validate();
        if (command == "print-config") {
            std::cout << cfg.to_text();
            return 0;
        }
        if (workspace.empty()) {
            const char* env = std::getenv("FER4D_WORKSPACE");
            workspace = env && *env ? env : "workspace";
        }
        fer4d::WorkspaceLock lock(workspace);
        fer4d::Pipeline pipeline(cfg, {workspace, jobs, quiet, nullptr});
        if (command == "all") {
            pipeline.run_all();
        } else {
            pipeline.run(*fer4d::parse_stage(command));
        }
    } catch (const fer4d::Error& e) {
        std::cerr << "fer4d: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fer4d: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
