#include "vrftlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vrftlab/csv.hpp"
#include "vrftlab/error.hpp"
#include "vrftlab/poison.hpp"
#include "vrftlab/seed.hpp"

#ifndef VRFTLAB_VERSION
#define VRFTLAB_VERSION "0.0.0"
#endif

namespace vrftlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Tag {
    Scenario scenario;
    std::size_t n;
    [[nodiscard]] std::string name() const { return config_tag(scenario, n); }
};

std::vector<Tag> selected_tags(const ExperimentConfig& cfg, const CommandOptions& opt) {
    std::vector<Tag> out;
    for (const Scenario s : cfg.scenarios) {
        if (opt.scenario && *opt.scenario != s) continue;
        for (const std::size_t n : cfg.n_points) {
            if (opt.n_points && *opt.n_points != n) continue;
            out.push_back({s, n});
        }
    }
    if (out.empty()) {
        throw Error(ErrorKind::ConfigError, "no scenario/record length left after applying --scenario/--n");
    }
    return out;
}

std::string run_name(std::size_t run) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%03zu", run);
    return buf;
}

std::string budget_name(double eu, double ey) { return "eu" + format_double(eu) + "_ey" + format_double(ey); }

// Runs fn(0..count-1) on up to `jobs` threads; the first exception by index is rethrown.
void parallel_for(std::size_t jobs, std::size_t count, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    const auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) guarded(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

json versions() {
    const std::string v(library_version());
    return {{"lti_core", v}, {"plant_sim", v}, {"vrft_synth", v}, {"poison_attack", v}, {"eval_metrics", v},
            {"exp_cli", v}};
}

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    if (!fs::exists(path)) {
        throw Error(ErrorKind::MissingArtifacts, "missing " + path.string());
    }
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, json body) {
    body["config_hash"] = config_hash(cfg);
    body["master_seed"] = cfg.master_seed;
    body["versions"] = versions();
    write_json(dir / "manifest.json", body);
}

void report_progress(const CommandOptions& opt, std::mutex& mu, const std::string& line) {
    if (!opt.progress) return;
    const std::lock_guard<std::mutex> lock(mu);
    opt.progress(line);
}

bool is_run_failure(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::RankDeficient:
        case ErrorKind::UnstableLoop:
        case ErrorKind::UnstableSystem:
        case ErrorKind::StateOutOfRange:
            return true;
        default:
            return false;
    }
}

ExogenousTraces zero_occupancy(SignalSeries t_out) {
    SignalSeries occ(std::vector<double>(t_out.size(), 0.0), t_out.ts());
    return {std::move(t_out), std::move(occ)};
}

SignalSeries weather_trace(const ExperimentConfig& cfg, std::size_t n, std::uint64_t seed) {
    if (cfg.weather_csv.empty()) {
        return generate_weather(n, seed, cfg.weather, cfg.plant.ts);
    }
    const SignalSeries full = load_weather_csv(cfg.weather_csv, cfg.plant.ts);
    if (full.size() < n) {
        throw Error(ErrorKind::ConfigError, cfg.weather_csv.string() + " covers " + std::to_string(full.size()) +
                                                " samples, " + std::to_string(n) + " needed");
    }
    return {std::vector<double>(full.samples().begin(), full.samples().begin() + static_cast<long>(n)),
            cfg.plant.ts};
}

std::size_t weather_run(const ExperimentConfig& cfg, std::size_t run) { return cfg.shared_weather ? 0 : run; }

MeanCi mean_ci_or_nan(const std::vector<double>& v) {
    if (v.size() >= 2) return mean_ci95(v);
    MeanCi m;
    m.mean = v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.front();
    m.half_width = std::numeric_limits<double>::quiet_NaN();
    return m;
}

struct Summary {
    MeanCi rmse;
    MeanCi psd;
    double percent_good = 0.0;
    std::size_t runs = 0;
};

Summary summarize_reports(const std::vector<MetricsReport>& reports) {
    std::vector<double> rm;
    std::vector<double> ps;
    std::size_t good = 0;
    for (const auto& r : reports) {
        rm.push_back(r.e_rmse);
        ps.push_back(r.e_psd);
        good += r.good ? 1 : 0;
    }
    Summary s;
    s.rmse = mean_ci_or_nan(rm);
    s.psd = mean_ci_or_nan(ps);
    s.runs = reports.size();
    s.percent_good = reports.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(reports.size());
    return s;
}

MetricsReport failed_report(std::size_t steps) {
    MetricsReport r;
    r.e_rmse = kUnstableRmse;
    r.e_psd = kUnstableRmse;
    r.good = false;
    r.n_samples = steps;
    return r;
}

struct DatasetEntry {
    std::size_t run;
    std::uint64_t seed;
    fs::path file;
};

std::vector<DatasetEntry> dataset_entries(const ExperimentConfig& cfg, const Tag& tag) {
    const fs::path dir = cfg.output_dir / "datasets" / tag.name();
    const json manifest = read_json(dir / "manifest.json");
    std::vector<DatasetEntry> out;
    for (const auto& r : manifest.at("runs")) {
        out.push_back({r.at("run").get<std::size_t>(), r.at("seed").get<std::uint64_t>(),
                       dir / r.at("file").get<std::string>()});
    }
    return out;
}

DatasetMeta dataset_meta(const Tag& tag, std::uint64_t seed) {
    DatasetMeta m;
    m.scenario = std::string(1, to_char(tag.scenario));
    m.seed = seed;
    return m;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

double csv_value(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_double(s);
}

// Rows of a CSV keyed by column name.
std::vector<std::map<std::string, std::string>> read_records(const fs::path& path) {
    if (!fs::exists(path)) {
        throw Error(ErrorKind::MissingArtifacts, "missing " + path.string());
    }
    const CsvTable t = read_csv(path);
    std::vector<std::map<std::string, std::string>> out;
    for (const auto& row : t.rows) {
        std::map<std::string, std::string> rec;
        for (std::size_t c = 0; c < t.header.size() && c < row.size(); ++c) rec[t.header[c]] = row[c];
        out.push_back(std::move(rec));
    }
    return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view library_version() noexcept { return VRFTLAB_VERSION; }

std::uint64_t run_seed(std::uint64_t master_seed, Scenario scenario, std::size_t n_points, std::size_t run,
                       Stage stage) {
    return derive_seed({master_seed, static_cast<std::uint64_t>(to_char(scenario)), n_points, run,
                        static_cast<std::uint64_t>(stage)});
}

std::string config_tag(Scenario scenario, std::size_t n_points) {
    return std::string(1, to_char(scenario)) + std::to_string(n_points);
}

IoDataset generate_training_dataset(const ExperimentConfig& cfg, Scenario scenario, std::size_t n_points,
                                    std::size_t run) {
    const std::uint64_t exc_seed = run_seed(cfg.master_seed, scenario, n_points, run, Stage::excitation);
    const ExcitationConfig exc = scenario == Scenario::A ? scenario_a_excitation(n_points, exc_seed)
                                                         : scenario_b_excitation(n_points, exc_seed);
    const SignalSeries u = generate_excitation(exc, cfg.plant.ts);
    const std::uint64_t w_seed =
        run_seed(cfg.master_seed, scenario, n_points, weather_run(cfg, run), Stage::training_weather);
    const ExogenousTraces traces = zero_occupancy(weather_trace(cfg, n_points, w_seed));
    const PlantState init = steady_state(cfg.plant, cfg.training_u0, traces.t_out[0], 0.0);
    const IoDataset raw = run_open_loop(cfg.plant, u, traces, init);
    return {raw.u(), raw.y(), dataset_meta({scenario, n_points}, exc_seed)};
}

ExogenousTraces validation_traces(const ExperimentConfig& cfg, Scenario scenario, std::size_t n_points,
                                  std::size_t run) {
    const std::size_t steps = cfg.validation.steps;
    const std::size_t wr = weather_run(cfg, run);
    SignalSeries t_out = weather_trace(cfg, steps, run_seed(cfg.master_seed, scenario, n_points, wr,
                                                            Stage::validation_weather));
    const double week = 7.0 * 86400.0;
    const int weeks = static_cast<int>(std::ceil(static_cast<double>(steps) * cfg.plant.ts / week));
    const SignalSeries occ_full = generate_occupancy(
        std::max(weeks, 1), run_seed(cfg.master_seed, scenario, n_points, wr, Stage::occupancy), cfg.plant.ts);
    std::vector<double> occ(occ_full.samples().begin(),
                            occ_full.samples().begin() + static_cast<long>(std::min(steps, occ_full.size())));
    occ.resize(steps, occ.empty() ? 0.0 : occ.back());
    return {std::move(t_out), SignalSeries(std::move(occ), cfg.plant.ts)};
}

ValidationOutcome validate_controller(const ExperimentConfig& cfg, const ControllerParams& params,
                                      const ExogenousTraces& traces) {
    const double sp = cfg.validation.setpoint;
    const PlantState init{sp, wall_equilibrium(cfg.plant, sp, traces.t_out[0])};
    ClosedLoopOptions opt;
    opt.initial_control = holding_control(cfg.plant, sp, traces.t_out[0], traces.occupancy[0]);
    ValidationOutcome out;
    try {
        const SignalSeries t_air = run_closed_loop(cfg.plant, realize_controller(params, cfg.plant.ts), sp, traces,
                                                   init, cfg.validation.steps, opt);
        out.metrics = evaluate_tracking(t_air, sp, cfg.validation.welch);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnstableLoop) throw;
        out.unstable = true;
        out.metrics = failed_report(cfg.validation.steps);
    }
    return out;
}

CommandStatus cmd_experiment(const ExperimentConfig& cfg, const CommandOptions& options) {
    cfg.validate();
    const auto tags = selected_tags(cfg, options);
    write_json(cfg.output_dir / "study.json",
               {{"config", to_json(cfg)}, {"config_hash", config_hash(cfg)}, {"versions", versions()}});
    CommandStatus status;
    std::mutex mu;
    for (const Tag& tag : tags) {
        const fs::path dir = cfg.output_dir / "datasets" / tag.name();
        std::vector<std::uint64_t> seeds(cfg.n_seeds);
        parallel_for(options.jobs, cfg.n_seeds, [&](std::size_t run) {
            const IoDataset ds = generate_training_dataset(cfg, tag.scenario, tag.n, run);
            seeds[run] = ds.meta().seed;
            write_dataset_csv(dir / (run_name(run) + ".csv"), ds);
            report_progress(options, mu, "dataset " + tag.name() + " " + run_name(run));
        });
        json runs = json::array();
        for (std::size_t run = 0; run < cfg.n_seeds; ++run) {
            runs.push_back({{"run", run}, {"seed", seeds[run]}, {"file", run_name(run) + ".csv"}});
        }
        write_manifest(dir, cfg,
                       {{"kind", "datasets"},
                        {"scenario", std::string(1, to_char(tag.scenario))},
                        {"n_points", tag.n},
                        {"occupancy", "empty"},
                        {"shared_weather", cfg.shared_weather},
                        {"prefiltered", false},
                        {"poisoned", false},
                        {"runs", runs}});
        status.runs += cfg.n_seeds;
    }
    return status;
}

CommandStatus cmd_synthesize(const ExperimentConfig& cfg, const CommandOptions& options) {
    cfg.validate();
    const ReferenceModel mr = make_reference_model(cfg.omega0, cfg.plant.ts);
    CommandStatus status;
    std::mutex mu;
    for (const Tag& tag : selected_tags(cfg, options)) {
        const auto entries = dataset_entries(cfg, tag);
        const fs::path dir = cfg.output_dir / "controllers" / tag.name();
        struct Row {
            double loss = std::numeric_limits<double>::quiet_NaN();
            double condition = std::numeric_limits<double>::quiet_NaN();
            std::string status = "ok";
        };
        std::vector<Row> rows(entries.size());
        parallel_for(options.jobs, entries.size(), [&](std::size_t i) {
            const auto& e = entries[i];
            const IoDataset ds = read_dataset_csv(e.file, dataset_meta(tag, e.seed));
            try {
                const SynthesisResult syn = synthesize(ds, mr);
                rows[i].loss = syn.loss;
                rows[i].condition = syn.condition;
                json doc = controller_to_json(syn.params, mr);
                doc["loss"] = syn.loss;
                doc["condition"] = syn.condition;
                doc["run"] = e.run;
                doc["seed"] = e.seed;
                write_json(dir / (run_name(e.run) + ".json"), doc);
            } catch (const Error& err) {
                if (!is_run_failure(err)) throw;
                rows[i].status = std::string(to_string(err.kind()));
            }
            report_progress(options, mu, "synthesize " + tag.name() + " " + run_name(e.run) + " " + rows[i].status);
        });
        CsvTable table;
        table.header = {"run", "seed", "loss", "condition", "status"};
        json runs = json::array();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            table.rows.push_back({std::to_string(entries[i].run), std::to_string(entries[i].seed),
                                  csv_number(rows[i].loss), csv_number(rows[i].condition), rows[i].status});
            if (rows[i].status != "ok") ++status.failures;
            runs.push_back({{"run", entries[i].run},
                            {"seed", entries[i].seed},
                            {"status", rows[i].status},
                            {"file", rows[i].status == "ok" ? json(run_name(entries[i].run) + ".json") : json()}});
        }
        write_csv(dir / "losses.csv", table);
        write_manifest(dir, cfg,
                       {{"kind", "controllers"},
                        {"scenario", std::string(1, to_char(tag.scenario))},
                        {"n_points", tag.n},
                        {"reference", {{"omega0", cfg.omega0}, {"ts", cfg.plant.ts}}},
                        {"runs", runs}});
        status.runs += entries.size();
    }
    return status;
}

CommandStatus cmd_validate(const ExperimentConfig& cfg, const CommandOptions& options) {
    cfg.validate();
    CommandStatus status;
    std::mutex mu;
    for (const Tag& tag : selected_tags(cfg, options)) {
        const fs::path cdir = cfg.output_dir / "controllers" / tag.name();
        const json cman = read_json(cdir / "manifest.json");
        const auto& runs = cman.at("runs");
        const fs::path dir = cfg.output_dir / "validation" / tag.name();
        std::vector<MetricsReport> reports(runs.size());
        std::vector<std::string> states(runs.size(), "ok");
        parallel_for(options.jobs, runs.size(), [&](std::size_t i) {
            const auto& r = runs[i];
            if (r.at("status").get<std::string>() != "ok") {
                reports[i] = failed_report(cfg.validation.steps);
                states[i] = "no_controller";
            } else {
                const ControllerFile cf = controller_from_json(read_json(cdir / r.at("file").get<std::string>()));
                const ExogenousTraces tr =
                    validation_traces(cfg, tag.scenario, tag.n, r.at("run").get<std::size_t>());
                const ValidationOutcome out = validate_controller(cfg, cf.params, tr);
                reports[i] = out.metrics;
                if (out.unstable) states[i] = "unstable";
            }
            report_progress(options, mu, "validate " + tag.name() + " " + run_name(i) + " " + states[i]);
        });
        CsvTable scatter;
        scatter.header = {"seed", "rmse", "avg_psd", "good"};
        for (std::size_t i = 0; i < runs.size(); ++i) {
            scatter.rows.push_back({std::to_string(runs[i].at("seed").get<std::uint64_t>()),
                                    csv_number(reports[i].e_rmse), csv_number(reports[i].e_psd),
                                    reports[i].good ? "1" : "0"});
            if (states[i] != "ok") ++status.failures;
        }
        write_csv(dir / "scatter.csv", scatter);
        const Summary s = summarize_reports(reports);
        std::size_t failed = 0;
        for (const auto& st : states) failed += st != "ok" ? 1 : 0;
        CsvTable summary;
        summary.header = {"scenario", "n_points",     "rmse_mean", "rmse_ci95", "avg_psd_mean",
                          "avg_psd_ci95", "percent_good", "runs",      "failed"};
        summary.rows.push_back({std::string(1, to_char(tag.scenario)), std::to_string(tag.n), csv_number(s.rmse.mean),
                                csv_number(s.rmse.half_width), csv_number(s.psd.mean), csv_number(s.psd.half_width),
                                csv_number(s.percent_good), std::to_string(s.runs), std::to_string(failed)});
        write_csv(dir / "summary.csv", summary);
        write_manifest(dir, cfg,
                       {{"kind", "validation"},
                        {"scenario", std::string(1, to_char(tag.scenario))},
                        {"n_points", tag.n},
                        {"setpoint", cfg.validation.setpoint},
                        {"steps", cfg.validation.steps},
                        {"occupancy", "single"},
                        {"welch", to_json(cfg.validation.welch)},
                        {"unstable_rmse", kUnstableRmse},
                        {"files", {"scatter.csv", "summary.csv"}}});
        status.runs += runs.size();
    }
    return status;
}

CommandStatus cmd_attack(const ExperimentConfig& cfg, const CommandOptions& options) {
    cfg.validate();
    const ReferenceModel mr = make_reference_model(cfg.omega0, cfg.plant.ts);
    std::vector<std::pair<double, double>> grid = cfg.attack.grid;
    if (options.eps) {
        const auto [eu, ey] = *options.eps;
        if (!(eu >= 0.0 && eu <= 1.0 && ey >= 0.0 && ey <= 1.0)) {
            throw Error(ErrorKind::ConfigError, "--eps-u and --eps-y must lie in [0, 1]");
        }
        grid = {*options.eps};
    }
    CommandStatus status;
    std::mutex mu;
    for (const Tag& tag : selected_tags(cfg, options)) {
        auto entries = dataset_entries(cfg, tag);
        const std::size_t limit = cfg.attack.runs == 0 ? entries.size() : std::min(cfg.attack.runs, entries.size());
        entries.resize(limit);
        const fs::path tag_dir = cfg.output_dir / "attack" / tag.name();
        CsvTable table;
        table.header = {"eps_u",        "eps_y",        "delta_u_mean", "delta_y_mean", "objective_mean",
                        "rmse_mean",    "rmse_ci95",    "avg_psd_mean", "avg_psd_ci95", "percent_good",
                        "runs",         "failed"};
        for (const auto& [eu, ey] : grid) {
            const std::string bname = budget_name(eu, ey);
            const fs::path dir = tag_dir / bname;
            struct Outcome {
                MetricsReport metrics;
                double delta_u = 0.0;
                double delta_y = 0.0;
                double objective = std::numeric_limits<double>::quiet_NaN();
                std::string status = "ok";
            };
            std::vector<Outcome> outs(entries.size());
            parallel_for(options.jobs, entries.size(), [&](std::size_t i) {
                const auto& e = entries[i];
                Outcome& o = outs[i];
                const IoDataset clean = prefilter(read_dataset_csv(e.file, dataset_meta(tag, e.seed)), mr);
                const AttackBudget budget = make_budget(eu, ey, clean, cfg.attack.y_reference);
                o.delta_u = budget.delta_u;
                o.delta_y = budget.delta_y;
                AttackOptions ao;
                ao.eta = cfg.attack.eta;
                ao.max_iter = cfg.attack.max_iter;
                ao.restarts = cfg.attack.restarts;
                ao.seed = run_seed(cfg.master_seed, tag.scenario, tag.n, e.run, Stage::attack);
                json doc;
                try {
                    const AttackResult res = run_attack(clean, mr, budget, ao);
                    o.objective = res.objective_trace.back();
                    const IoDataset poisoned = apply_perturbation(clean, res);
                    write_dataset_csv(dir / (run_name(e.run) + ".csv"), poisoned);
                    doc = to_json(res);
                    const ControllerParams cp = synthesize_prefiltered(poisoned, mr).params;
                    doc["theta_resynthesized"] = {cp.theta(0), cp.theta(1), cp.theta(2)};
                    const ValidationOutcome v =
                        validate_controller(cfg, cp, validation_traces(cfg, tag.scenario, tag.n, e.run));
                    o.metrics = v.metrics;
                    if (v.unstable) o.status = "unstable";
                } catch (const Error& err) {
                    if (!is_run_failure(err)) throw;
                    o.status = std::string(to_string(err.kind()));
                    o.metrics = failed_report(cfg.validation.steps);
                }
                doc["run"] = e.run;
                doc["status"] = o.status;
                doc["metrics"] = to_json(o.metrics);
                write_json(dir / (run_name(e.run) + ".json"), doc);
                report_progress(options, mu, "attack " + tag.name() + " " + bname + " " + run_name(e.run) + " " + o.status);
            });
            std::vector<MetricsReport> reports;
            double du = 0.0;
            double dy = 0.0;
            double obj = 0.0;
            std::size_t obj_n = 0;
            std::size_t failed = 0;
            json runs = json::array();
            for (std::size_t i = 0; i < outs.size(); ++i) {
                reports.push_back(outs[i].metrics);
                du += outs[i].delta_u;
                dy += outs[i].delta_y;
                if (std::isfinite(outs[i].objective)) {
                    obj += outs[i].objective;
                    ++obj_n;
                }
                if (outs[i].status != "ok") ++failed;
                runs.push_back({{"run", entries[i].run},
                                {"seed", entries[i].seed},
                                {"status", outs[i].status},
                                {"result", run_name(entries[i].run) + ".json"},
                                {"dataset", run_name(entries[i].run) + ".csv"}});
            }
            const double cnt = std::max<double>(1.0, static_cast<double>(outs.size()));
            const Summary s = summarize_reports(reports);
            table.rows.push_back({csv_number(eu), csv_number(ey), csv_number(du / cnt), csv_number(dy / cnt),
                                  csv_number(obj_n ? obj / static_cast<double>(obj_n)
                                                   : std::numeric_limits<double>::quiet_NaN()),
                                  csv_number(s.rmse.mean), csv_number(s.rmse.half_width), csv_number(s.psd.mean),
                                  csv_number(s.psd.half_width), csv_number(s.percent_good), std::to_string(s.runs),
                                  std::to_string(failed)});
            write_manifest(dir, cfg,
                           {{"kind", "attack"},
                            {"scenario", std::string(1, to_char(tag.scenario))},
                            {"n_points", tag.n},
                            {"eps_u", eu},
                            {"eps_y", ey},
                            {"budget_y_reference", to_string(cfg.attack.y_reference)},
                            {"prefiltered", true},
                            {"poisoned", true},
                            {"runs", runs}});
            status.runs += outs.size();
            status.failures += failed;
        }
        write_csv(tag_dir / "grid.csv", table);
        write_manifest(tag_dir, cfg,
                       {{"kind", "attack_grid"},
                        {"scenario", std::string(1, to_char(tag.scenario))},
                        {"n_points", tag.n},
                        {"files", {"grid.csv"}}});
    }
    return status;
}

void cmd_report(const fs::path& dir) {
    if (!fs::exists(dir / "study.json")) {
        throw Error(ErrorKind::MissingArtifacts, "missing artifacts: " + (dir / "study.json").string());
    }
    const json study = read_json(dir / "study.json");
    const json& config = study.at("config");
    std::vector<std::string> tags;
    for (const auto& s : config.at("study").at("scenarios")) {
        for (const auto& n : config.at("study").at("n_points")) {
            tags.push_back(s.get<std::string>() + std::to_string(n.get<std::size_t>()));
        }
    }
    std::vector<std::string> missing;
    for (const auto& t : tags) {
        for (const fs::path& p : {dir / "controllers" / t / "losses.csv", dir / "validation" / t / "summary.csv",
                                 dir / "validation" / t / "scatter.csv"}) {
            if (!fs::exists(p)) missing.push_back(p.string());
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing artifacts:";
        for (const auto& m : missing) msg += " " + m;
        throw Error(ErrorKind::MissingArtifacts, msg);
    }

    json table = json::array();
    json scatter = json::object();
    json grids = json::object();
    json traces = json::object();
    std::ostringstream md;
    md << "# Study report\n\n"
       << "Config hash `" << study.at("config_hash").get<std::string>() << "`, master seed "
       << config.at("study").at("master_seed").get<std::uint64_t>() << ", library "
       << study.at("versions").at("vrft_synth").get<std::string>() << ".\n\n"
       << "## Validation\n\n"
       << "| config | loss | rmse | avg psd | good | failed |\n|---|---|---|---|---|---|\n";
    const auto fmt = [](double v, int prec) {
        if (!std::isfinite(v)) return std::string("n/a");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", prec, v);
        return std::string(buf);
    };
    for (const auto& t : tags) {
        std::vector<double> losses;
        std::size_t synth_failed = 0;
        for (const auto& r : read_records(dir / "controllers" / t / "losses.csv")) {
            if (r.at("status") == "ok") {
                losses.push_back(csv_value(r.at("loss")));
            } else {
                ++synth_failed;
            }
        }
        const MeanCi loss = mean_ci_or_nan(losses);
        const auto summary = read_records(dir / "validation" / t / "summary.csv").at(0);
        const double rm = csv_value(summary.at("rmse_mean"));
        const double rc = csv_value(summary.at("rmse_ci95"));
        const double pm = csv_value(summary.at("avg_psd_mean"));
        const double pc = csv_value(summary.at("avg_psd_ci95"));
        const double good = csv_value(summary.at("percent_good"));
        const auto failed = static_cast<std::size_t>(csv_value(summary.at("failed")));
        table.push_back({{"config", t},
                         {"loss_mean", number_or_null(loss.mean)},
                         {"loss_ci95", number_or_null(loss.half_width)},
                         {"rmse_mean", number_or_null(rm)},
                         {"rmse_ci95", number_or_null(rc)},
                         {"avg_psd_mean", number_or_null(pm)},
                         {"avg_psd_ci95", number_or_null(pc)},
                         {"percent_good", good},
                         {"runs", static_cast<std::size_t>(csv_value(summary.at("runs")))},
                         {"synthesis_failed", synth_failed},
                         {"validation_failed", failed}});
        md << "| " << t << " | " << fmt(loss.mean, 5) << " ± " << fmt(loss.half_width, 5) << " | " << fmt(rm, 3)
           << " ± " << fmt(rc, 3) << " | " << fmt(pm, 2) << " ± " << fmt(pc, 2) << " | " << fmt(100.0 * good, 0)
           << "% | " << failed << " |\n";

        json pts = json::array();
        for (const auto& r : read_records(dir / "validation" / t / "scatter.csv")) {
            pts.push_back({{"seed", std::stoull(r.at("seed"))},
                           {"rmse", number_or_null(csv_value(r.at("rmse")))},
                           {"avg_psd", number_or_null(csv_value(r.at("avg_psd")))},
                           {"good", r.at("good") == "1"}});
        }
        scatter[t] = pts;

        const fs::path gpath = dir / "attack" / t / "grid.csv";
        if (fs::exists(gpath)) {
            json g = json::array();
            json tr = json::object();
            for (const auto& r : read_records(gpath)) {
                const double eu = csv_value(r.at("eps_u"));
                const double ey = csv_value(r.at("eps_y"));
                g.push_back({{"eps_u", eu},
                             {"eps_y", ey},
                             {"objective_mean", number_or_null(csv_value(r.at("objective_mean")))},
                             {"rmse_mean", number_or_null(csv_value(r.at("rmse_mean")))},
                             {"avg_psd_mean", number_or_null(csv_value(r.at("avg_psd_mean")))},
                             {"percent_good", csv_value(r.at("percent_good"))},
                             {"failed", static_cast<std::size_t>(csv_value(r.at("failed")))}});
                const fs::path bdir = dir / "attack" / t / budget_name(eu, ey);
                json per_run = json::array();
                for (const auto& run : read_json(bdir / "manifest.json").at("runs")) {
                    const json res = read_json(bdir / run.at("result").get<std::string>());
                    per_run.push_back(res.contains("objective_trace") ? res.at("objective_trace") : json::array());
                }
                tr[budget_name(eu, ey)] = per_run;
            }
            grids[t] = g;
            traces[t] = tr;
        }
    }
    if (!grids.empty()) {
        md << "\n## Poisoning\n\n| config | eps_u | eps_y | rmse | avg psd | good |\n|---|---|---|---|---|---|\n";
        for (const auto& [t, g] : grids.items()) {
            for (const auto& row : g) {
                md << "| " << t << " | " << fmt(row.at("eps_u").get<double>(), 2) << " | "
                   << fmt(row.at("eps_y").get<double>(), 2) << " | "
                   << (row.at("rmse_mean").is_null() ? "n/a" : fmt(row.at("rmse_mean").get<double>(), 3)) << " | "
                   << (row.at("avg_psd_mean").is_null() ? "n/a" : fmt(row.at("avg_psd_mean").get<double>(), 2))
                   << " | " << fmt(100.0 * row.at("percent_good").get<double>(), 0) << "% |\n";
            }
        }
    }
    const json conventions = {
        {"welch", config.at("validation").at("welch")},
        {"psd_ellipse_scale", kPsdEllipseScale},
        {"setpoint", config.at("validation").at("setpoint")},
        {"validation_steps", config.at("validation").at("steps")},
        {"budget_y_reference", config.at("attack").at("budget_y_reference")},
        {"master_seed", config.at("study").at("master_seed")},
        {"n_seeds", config.at("study").at("n_seeds")},
        {"shared_weather", config.at("study").at("shared_weather")},
        {"reference", config.at("reference")},
        {"training_u0", config.at("study").at("training_u0")},
        {"unstable_rmse", kUnstableRmse},
    };
    md << "\n## Conventions\n\n```json\n" << conventions.dump(2) << "\n```\n";
    const json report = {
        {"config_hash", study.at("config_hash")},
        {"versions", study.at("versions")},
        {"conventions", conventions},
        {"table", table},
        {"scatter", scatter},
        {"attack_grid", grids},
        {"attack_traces", traces},
    };
    write_json(dir / "report.json", report);
    write_text_file(dir / "report.md", md.str());
}

CommandStatus run_study(const ExperimentConfig& cfg, const CommandOptions& options) {
    CommandStatus total;
    for (const auto& cmd : {cmd_experiment, cmd_synthesize, cmd_validate, cmd_attack}) {
        const CommandStatus s = cmd(cfg, options);
        total.runs += s.runs;
        total.failures += s.failures;
    }
    cmd_report(cfg.output_dir);
    return total;
}

}  // namespace vrftlab
