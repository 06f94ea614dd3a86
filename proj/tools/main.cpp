#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vrftlab/config.hpp"
#include "vrftlab/error.hpp"
#include "vrftlab/experiment.hpp"

namespace {

using namespace vrftlab;

struct Flags {
    std::string config;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scenario;
    std::optional<std::size_t> n;
    std::optional<double> eps_u;
    std::optional<double> eps_y;
    bool all = false;
    bool quiet = false;
};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
            return kExitConfig;
        case ErrorKind::IoError:
        case ErrorKind::ParseError:
        case ErrorKind::MissingArtifacts:
        case ErrorKind::NonMonotonicTimestamps:
            return kExitIo;
        default:
            return 1;
    }
}

ExperimentConfig resolve_config(const Flags& f) {
    ExperimentConfig cfg = f.config.empty() ? default_config() : load_config(f.config);
    if (f.seed) cfg.master_seed = *f.seed;
    return cfg;
}

CommandOptions resolve_options(const Flags& f) {
    CommandOptions opt;
    opt.jobs = f.jobs;
    if (f.scenario) opt.scenario = scenario_from_string(*f.scenario);
    if (f.n) opt.n_points = *f.n;
    if (f.eps_u || f.eps_y) opt.eps = std::make_pair(f.eps_u.value_or(0.0), f.eps_y.value_or(0.0));
    if (!f.quiet) opt.progress = [](const std::string& line) { std::cerr << line << '\n'; };
    return opt;
}

int finish(const CommandStatus& s) {
    std::cout << s.runs << " runs, " << s.failures << " failed\n";
    return s.failures > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven PID tuning study with data-poisoning attacks"};
    app.require_subcommand(1);
    Flags f;

    const auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--jobs", f.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
        sub->add_option("--seed", f.seed, "Master seed (overrides the config)");
        sub->add_option("--scenario", f.scenario, "Restrict to one scenario")->check(CLI::IsMember({"A", "B"}));
        sub->add_option("--n", f.n, "Restrict to one record length");
        sub->add_flag("--quiet", f.quiet, "No per-run progress on stderr");
    };

    auto* experiment = app.add_subcommand("experiment", "Generate open-loop training datasets");
    common(experiment);
    experiment->add_flag("--all", f.all, "Also synthesize, validate, attack and report");
    auto* synthesize = app.add_subcommand("synthesize", "Fit one controller per dataset");
    common(synthesize);
    auto* validate = app.add_subcommand("validate", "Closed-loop validation of every controller");
    common(validate);
    auto* attack = app.add_subcommand("attack", "Poison datasets over the budget grid and re-validate");
    common(attack);
    attack->add_option("--eps-u", f.eps_u, "Relative input budget (replaces the grid)")->check(CLI::Range(0.0, 1.0));
    attack->add_option("--eps-y", f.eps_y, "Relative output budget (replaces the grid)")->check(CLI::Range(0.0, 1.0));
    auto* report = app.add_subcommand("report", "Consolidate outputs into report.json and report.md");
    common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        const ExperimentConfig cfg = resolve_config(f);
        const CommandOptions opt = resolve_options(f);
        if (experiment->parsed()) {
            return finish(f.all ? run_study(cfg, opt) : cmd_experiment(cfg, opt));
        }
        if (synthesize->parsed()) return finish(cmd_synthesize(cfg, opt));
        if (validate->parsed()) return finish(cmd_validate(cfg, opt));
        if (attack->parsed()) return finish(cmd_attack(cfg, opt));
        if (report->parsed()) {
            cmd_report(cfg.output_dir);
            std::cout << "wrote " << (cfg.output_dir / "report.json").string() << '\n';
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
