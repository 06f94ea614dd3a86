#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>

#include "vrftlab/csv.hpp"
#include "vrftlab/error.hpp"
#include "vrftlab/experiment.hpp"

using namespace vrftlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vrftlab_exp_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.master_seed = 11;
    cfg.n_seeds = 3;
    cfg.n_points = {40, 80};
    cfg.output_dir = out;
    cfg.validation.steps = 600;
    cfg.attack.grid = {{0.0, 0.0}, {0.1, 0.2}};
    cfg.attack.restarts = 3;
    return cfg;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("run seeds separate every component") {
    std::set<std::uint64_t> seen;
    for (const Scenario s : {Scenario::A, Scenario::B}) {
        for (const std::size_t n : {100UL, 1000UL}) {
            for (std::size_t run = 0; run < 5; ++run) {
                for (const Stage st : {Stage::excitation, Stage::training_weather, Stage::validation_weather}) {
                    seen.insert(run_seed(1, s, n, run, st));
                }
            }
        }
    }
    CHECK(seen.size() == 2 * 2 * 5 * 3);
    CHECK(run_seed(1, Scenario::A, 100, 0, Stage::excitation) == run_seed(1, Scenario::A, 100, 0, Stage::excitation));
    CHECK(run_seed(2, Scenario::A, 100, 0, Stage::excitation) != run_seed(1, Scenario::A, 100, 0, Stage::excitation));
    CHECK(config_tag(Scenario::B, 1000) == "B1000");
}

TEST_CASE("training records start in equilibrium with an empty apartment") {
    ExperimentConfig cfg;
    const IoDataset ds = generate_training_dataset(cfg, Scenario::A, 100, 0);
    CHECK(ds.size() == 100);
    const auto w = generate_weather(100, run_seed(cfg.master_seed, Scenario::A, 100, 0, Stage::training_weather));
    CHECK(ds.y()[0] == doctest::Approx(steady_state(cfg.plant, 0.5, w[0], 0.0).t_air));
}

TEST_CASE("shared weather reuses one realization across runs") {
    ExperimentConfig cfg;
    cfg.shared_weather = true;
    CHECK(validation_traces(cfg, Scenario::A, 100, 0).t_out.samples() ==
          validation_traces(cfg, Scenario::A, 100, 7).t_out.samples());
    cfg.shared_weather = false;
    CHECK(validation_traces(cfg, Scenario::A, 100, 0).t_out.samples() !=
          validation_traces(cfg, Scenario::A, 100, 7).t_out.samples());
}

TEST_CASE("experiment writes one dataset per seed") {
    const fs::path out = scratch("count");
    ExperimentConfig cfg = small_config(out);
    cfg.n_seeds = 2;
    CommandOptions opt;
    opt.scenario = Scenario::A;
    opt.n_points = 40;
    const CommandStatus s = cmd_experiment(cfg, opt);
    CHECK(s.runs == 2);
    const fs::path dir = out / "datasets" / "A40";
    CHECK(read_csv(dir / "run_000.csv").rows.size() == 40);
    CHECK(read_csv(dir / "run_001.csv").rows.size() == 40);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK_FALSE(fs::exists(out / "datasets" / "B40"));
}

TEST_CASE("scenario B records are mostly saturated") {
    const fs::path out = scratch("clip");
    ExperimentConfig cfg = small_config(out);
    cfg.n_points = {1000};
    cfg.n_seeds = 4;
    CommandOptions opt;
    opt.scenario = Scenario::B;
    cmd_experiment(cfg, opt);
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (int r = 0; r < 4; ++r) {
        const IoDataset ds = read_dataset_csv(out / "datasets" / "B1000" / ("run_00" + std::to_string(r) + ".csv"));
        for (double v : ds.u().samples()) {
            clipped += (v == 0.0 || v == 1.0) ? 1 : 0;
            ++total;
        }
    }
    CHECK(static_cast<double>(clipped) / static_cast<double>(total) == doctest::Approx(0.617).epsilon(0.05));
}

TEST_CASE("full pipeline is deterministic across reruns and job counts") {
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    CommandOptions opt;
    const CommandStatus sa = run_study(small_config(a), opt);
    opt.jobs = 3;
    run_study(small_config(b), opt);
    const auto snap_a = snapshot(a);
    CHECK(snap_a == snapshot(b));
    CHECK(sa.runs > 0);
    CHECK(snap_a.count("report.json") == 1);
    CHECK(snap_a.count("validation/A40/scatter.csv") == 1);
    CHECK(snap_a.at("validation/A40/scatter.csv").rfind("seed,rmse,avg_psd,good\n", 0) == 0);

    cmd_report(a);
    CHECK(snapshot(a) == snap_a);

    const auto report = nlohmann::json::parse(snap_a.at("report.json"));
    CHECK(report.at("table").size() == 4);
    CHECK(report.at("conventions").at("budget_y_reference") == "input_norm");
    CHECK(report.at("conventions").at("welch").at("segment_length") == 256);
}

TEST_CASE("zero-budget attack reproduces the unpoisoned validation") {
    const fs::path out = scratch("zero");
    run_study(small_config(out), {});
    for (const std::string tag : {"A40", "A80", "B40", "B80"}) {
        const CsvTable summary = read_csv(out / "validation" / tag / "summary.csv");
        const CsvTable grid = read_csv(out / "attack" / tag / "grid.csv");
        REQUIRE(grid.rows.size() == 2);
        CHECK(grid.rows[0][0] == "0");
        CHECK(grid.rows[0][5] == summary.rows[0][2]);
        CHECK(grid.rows[0][9] == summary.rows[0][6]);
    }
}

TEST_CASE("a rank-deficient run is recorded and the batch continues") {
    const fs::path out = scratch("fail");
    ExperimentConfig cfg = small_config(out);
    CommandOptions opt;
    opt.scenario = Scenario::A;
    opt.n_points = 40;
    cmd_experiment(cfg, opt);
    write_dataset_csv(out / "datasets" / "A40" / "run_001.csv",
                      IoDataset(SignalSeries(std::vector<double>(40, 0.5), 540.0),
                                SignalSeries(std::vector<double>(40, 20.0), 540.0)));
    const CommandStatus s = cmd_synthesize(cfg, opt);
    CHECK(s.runs == 3);
    CHECK(s.failures == 1);
    CHECK_FALSE(fs::exists(out / "controllers" / "A40" / "run_001.json"));
    const CsvTable losses = read_csv(out / "controllers" / "A40" / "losses.csv");
    CHECK(losses.rows[1][4] == "RankDeficient");
    CHECK(losses.rows[0][4] == "ok");
    const CommandStatus v = cmd_validate(cfg, opt);
    CHECK(v.failures == 1);
    const CsvTable scatter = read_csv(out / "validation" / "A40" / "scatter.csv");
    CHECK(scatter.rows[1][3] == "0");
}

TEST_CASE("missing inputs are reported") {
    const fs::path out = scratch("missing");
    fs::create_directories(out);
    CHECK(kind_of([&] { cmd_report(out); }) == ErrorKind::MissingArtifacts);
    CHECK(kind_of([&] { (void)cmd_synthesize(small_config(out), {}); }) == ErrorKind::MissingArtifacts);
    ExperimentConfig cfg = small_config(out);
    CommandOptions opt;
    opt.n_points = 999;
    CHECK(kind_of([&] { (void)cmd_experiment(cfg, opt); }) == ErrorKind::ConfigError);
}
