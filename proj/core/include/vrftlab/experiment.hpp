#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vrftlab/config.hpp"
#include "vrftlab/metrics.hpp"
#include "vrftlab/plant.hpp"
#include "vrftlab/vrft.hpp"

namespace vrftlab {

std::string_view library_version() noexcept;

enum class Stage : std::uint64_t {
    excitation = 1,
    training_weather = 2,
    validation_weather = 3,
    occupancy = 4,
    attack = 5,
};

// hash(master_seed, scenario, n_points, run_index, stage).
std::uint64_t run_seed(std::uint64_t master_seed, Scenario scenario, std::size_t n_points, std::size_t run,
                       Stage stage);

// "A100", "B1000", ...
std::string config_tag(Scenario scenario, std::size_t n_points);

// Open-loop record of the empty apartment for one run.
IoDataset generate_training_dataset(const ExperimentConfig& cfg, Scenario scenario, std::size_t n_points,
                                    std::size_t run);

// Weather and single-occupant schedule for the closed-loop check of one run.
ExogenousTraces validation_traces(const ExperimentConfig& cfg, Scenario scenario, std::size_t n_points,
                                  std::size_t run);

// RMSE recorded for loops that leave the plant's valid range.
inline constexpr double kUnstableRmse = 1.0e3;

struct ValidationOutcome {
    MetricsReport metrics;
    bool unstable = false;
};

// Closed loop from the setpoint with the wall in equilibrium and the
// controller started at the airflow that holds the setpoint.
ValidationOutcome validate_controller(const ExperimentConfig& cfg, const ControllerParams& params,
                                      const ExogenousTraces& traces);

struct CommandOptions {
    std::size_t jobs = 1;
    std::optional<Scenario> scenario;
    std::optional<std::size_t> n_points;
    std::optional<std::pair<double, double>> eps;  // replaces the attack grid
    // Called after every finished run with a short status line.
    std::function<void(const std::string&)> progress;
};

struct CommandStatus {
    std::size_t runs = 0;
    std::size_t failures = 0;
};

// Exit codes shared by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPartial = 3;
inline constexpr int kExitIo = 4;

// datasets/<tag>/run_XXX.csv plus manifest.json, and study.json at the root.
CommandStatus cmd_experiment(const ExperimentConfig& cfg, const CommandOptions& options = {});
// controllers/<tag>/run_XXX.json, losses.csv, manifest.json.
CommandStatus cmd_synthesize(const ExperimentConfig& cfg, const CommandOptions& options = {});
// validation/<tag>/scatter.csv, summary.csv, manifest.json.
CommandStatus cmd_validate(const ExperimentConfig& cfg, const CommandOptions& options = {});
// attack/<tag>/<budget>/run_XXX.{json,csv}, attack/<tag>/grid.csv, manifests.
CommandStatus cmd_attack(const ExperimentConfig& cfg, const CommandOptions& options = {});
// report.json and report.md from whatever the other commands left in `dir`.
void cmd_report(const std::filesystem::path& dir);

// experiment, synthesize, validate, attack and report in sequence.
CommandStatus run_study(const ExperimentConfig& cfg, const CommandOptions& options = {});

}  // namespace vrftlab
