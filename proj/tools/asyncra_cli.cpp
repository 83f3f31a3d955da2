// asyncra: Monte Carlo runner for asynchronous grant-free activity/delay detection.
//
//   asyncra run --config plan.cfg [--override key=value ...] [--out dir] [--threads n] [--fixed-pilots]
//   asyncra validate --config plan.cfg [--override key=value ...]

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asyncra/harness.hpp"
#include "asyncra/version.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitIoError = 3;

asyncra::ExperimentPlan build_plan(const std::string& config, const std::vector<std::string>& overrides) {
    asyncra::ExperimentPlan plan = asyncra::load_plan(config);
    for (const auto& o : overrides) asyncra::apply_override(plan, o);
    return plan;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asynchronous grant-free random access: OAMP / MAMP / AMP Monte Carlo runner"};
    app.set_version_flag("--version", std::string(asyncra::version_string()));
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    std::string out_dir;
    int threads = 0;
    bool fixed_pilots = false;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Run an experiment plan and write trials.csv, summary.csv, meta.txt");
    run->add_option("--config", config, "Plan file (key = value lines)")->required()->check(CLI::ExistingFile);
    run->add_option("--override", overrides, "Override a plan key, e.g. --override n_trials=20");
    run->add_option("--out", out_dir, "Output directory (overrides out_dir)");
    run->add_option("--threads", threads, "Worker threads (overrides threads)")->check(CLI::PositiveNumber);
    run->add_flag("--fixed-pilots", fixed_pilots, "Draw one pilot matrix for the whole plan");
    run->add_flag("-q,--quiet", quiet, "No progress output");

    auto* validate = app.add_subcommand("validate", "Parse and check a plan file without running it");
    validate->add_option("--config", config, "Plan file")->required()->check(CLI::ExistingFile);
    validate->add_option("--override", overrides, "Override a plan key");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    asyncra::ExperimentPlan plan;
    try {
        plan = build_plan(config, overrides);
        if (!out_dir.empty()) plan.out_dir = out_dir;
        if (threads > 0) plan.threads = threads;
        if (fixed_pilots) plan.fixed_pilots = true;
        plan.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    if (*validate) {
        std::cout << asyncra::describe_plan(plan);
        std::cout << "# ok: " << plan.sweep().size() * plan.n_trials << " scenarios, " << plan.algorithms.size()
                  << " algorithm(s)\n";
        return 0;
    }

    asyncra::ProgressFn progress;
    if (!quiet) {
        progress = [](int done, int total) {
            if (done == total || done % 10 == 0) std::cerr << "\r" << done << "/" << total << " scenarios" << std::flush;
            if (done == total) std::cerr << "\n";
        };
    }

    asyncra::ExperimentResult result;
    try {
        result = asyncra::run_experiment(plan, progress);
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
    try {
        asyncra::write_outputs(plan, result);
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIoError;
    }
    std::cout << asyncra::format_summary_table(result.summary);
    std::cout << "wrote " << plan.out_dir << "/{trials.csv,summary.csv,meta.txt}\n";
    return 0;
}
