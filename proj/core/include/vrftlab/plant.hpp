#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "vrftlab/dataset.hpp"
#include "vrftlab/lti.hpp"

namespace vrftlab {

inline constexpr double kSamplePeriod = 540.0;

// Two-node RC model of one ventilated apartment: an air node heated by
// supply air (bilinear in the airflow fraction u) and occupants, coupled to a
// wall node that loses heat to the outdoor air.
struct ThermalPlantConfig {
    double c_air = 2.5e6;     // J/K
    double c_wall = 8.0e6;    // J/K
    double r_aw = 2.0e-3;     // K/W
    double r_wo = 8.0e-3;     // K/W
    double t_supply = 35.0;   // degC
    double q_max = 300.0;     // W/K at u = 1
    double q_person = 100.0;  // W per occupant
    double ts = kSamplePeriod;
    int substeps = 9;

    void validate() const;
};

struct PlantState {
    double t_air = 15.0;
    double t_wall = 15.0;
};

inline constexpr double kMinAirTemperature = -50.0;
inline constexpr double kMaxAirTemperature = 60.0;

struct ExogenousTraces {
    SignalSeries t_out;
    SignalSeries occupancy;

    void validate() const;
    [[nodiscard]] std::size_t size() const noexcept { return t_out.size(); }
};

ExogenousTraces constant_traces(std::size_t n, double t_out, double occupants, double ts = kSamplePeriod);

struct ExcitationConfig {
    double mu = 0.5;
    double sigma = 1.0 / 6.0;
    std::size_t n = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

// Scenario A keeps u inside [0, 1] with ~99% probability; Scenario B ignores
// the saturation and clips most samples.
ExcitationConfig scenario_a_excitation(std::size_t n, std::uint64_t seed);
ExcitationConfig scenario_b_excitation(std::size_t n, std::uint64_t seed);

// Advances one sample period with fixed-step RK4 (cfg.substeps substeps).
// u is clipped to [0, 1].
PlantState step_plant(const ThermalPlantConfig& cfg, const PlantState& state, double u, double t_out,
                      double occupants);

// Wall temperature in balance with a given air and outdoor temperature.
double wall_equilibrium(const ThermalPlantConfig& cfg, double t_air, double t_out);

// Equilibrium of both nodes under constant u, outdoor temperature and occupancy.
PlantState steady_state(const ThermalPlantConfig& cfg, double u, double t_out, double occupants);

// Constant airflow fraction that keeps the air node at t_air in equilibrium,
// clipped to [0, 1].
double holding_control(const ThermalPlantConfig& cfg, double t_air, double t_out, double occupants);

SignalSeries generate_excitation(const ExcitationConfig& cfg, double ts = kSamplePeriod);

// y_t is the air temperature at the start of step t, before u_t acts.
IoDataset run_open_loop(const ThermalPlantConfig& cfg, const SignalSeries& excitation,
                        const ExogenousTraces& traces, const PlantState& init);

struct ClosedLoopOptions {
    // Output of the controller's internal state before the first sample.
    double initial_control = 0.0;
};

struct ClosedLoopRun {
    SignalSeries t_air;
    SignalSeries u;
};

ClosedLoopRun run_closed_loop_detailed(const ThermalPlantConfig& cfg, const RationalTransferFunction& controller,
                                       double setpoint, const ExogenousTraces& traces, const PlantState& init,
                                       std::size_t n, const ClosedLoopOptions& options = {});

SignalSeries run_closed_loop(const ThermalPlantConfig& cfg, const RationalTransferFunction& controller,
                             double setpoint, const ExogenousTraces& traces, const PlantState& init, std::size_t n,
                             const ClosedLoopOptions& options = {});

// Single occupant: home overnight and in the evening on weekdays, most of the
// day at weekends. Transition times carry +-2 samples of seeded jitter.
SignalSeries generate_occupancy(int weeks, std::uint64_t seed, double ts = kSamplePeriod);

struct WeatherModel {
    double mean = -3.0;          // degC
    double amplitude = 4.0;      // degC, daily swing
    double coldest_hour = 5.0;   // local hour of the daily minimum
    double ar_coefficient = 0.98;
    double ar_sigma = 0.2;       // degC innovation per sample
};

// Synthetic winter outdoor temperature: daily sinusoid plus AR(1) noise.
SignalSeries generate_weather(std::size_t n, std::uint64_t seed, const WeatherModel& model = {},
                              double ts = kSamplePeriod);

// Reads a `t_seconds,temp_c` CSV and resamples it onto a ts grid by linear
// interpolation, starting at the first timestamp.
SignalSeries load_weather_csv(const std::filesystem::path& path, double ts = kSamplePeriod);

}  // namespace vrftlab
