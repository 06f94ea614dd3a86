#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrftlab/metrics.hpp"
#include "vrftlab/plant.hpp"
#include "vrftlab/poison.hpp"

namespace vrftlab {

enum class Scenario { A, B };

char to_char(Scenario s) noexcept;
Scenario scenario_from_string(std::string_view text);

struct ValidationSettings {
    double setpoint = 21.0;
    std::size_t steps = 2240;  // two weeks
    WelchConfig welch;
};

struct AttackSettings {
    std::vector<std::pair<double, double>> grid{{0.0, 0.0}, {0.05, 0.1}, {0.05, 0.2}, {0.1, 0.1}, {0.1, 0.2}};
    BudgetReference y_reference = BudgetReference::input_norm;
    std::size_t max_iter = 50;
    std::size_t restarts = 20;
    double eta = 0.0;      // 0: relative default
    std::size_t runs = 0;  // 0: every dataset of the configuration
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    std::size_t n_seeds = 50;
    std::vector<Scenario> scenarios{Scenario::A, Scenario::B};
    std::vector<std::size_t> n_points{100, 1000};
    bool shared_weather = false;
    std::filesystem::path output_dir = "vrftlab-out";

    // Training records start in equilibrium under this constant airflow.
    double training_u0 = 0.5;

    ThermalPlantConfig plant;
    WeatherModel weather;
    std::filesystem::path weather_csv;  // replaces the synthetic model when set
    double omega0 = 0.002;
    ValidationSettings validation;
    AttackSettings attack;

    void validate() const;
};

// INI text with sections [study], [plant], [weather], [reference], [validation]
// and [attack]. Unknown keys are rejected. Every failure is a ConfigError.
ExperimentConfig parse_config(std::string_view text);

// Reads the file, then applies VRFT_LAB_OUTPUT_DIR when it is set.
ExperimentConfig load_config(const std::filesystem::path& path);

// Default values with the same environment override as load_config.
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& cfg);

// Hex SHA-256 of the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(std::string_view data);

}  // namespace vrftlab
