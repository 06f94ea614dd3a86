#include "vrftlab/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "vrftlab/csv.hpp"
#include "vrftlab/error.hpp"

namespace vrftlab {

namespace {

struct Derivative {
    double air;
    double wall;
};

Derivative thermal_rates(const ThermalPlantConfig& cfg, double t_air, double t_wall, double u, double t_out,
                         double occupants) {
    const double q_air = (t_wall - t_air) / cfg.r_aw + u * cfg.q_max * (cfg.t_supply - t_air) + occupants * cfg.q_person;
    const double q_wall = (t_out - t_wall) / cfg.r_wo + (t_air - t_wall) / cfg.r_aw;
    return {q_air / cfg.c_air, q_wall / cfg.c_wall};
}

void check_state(const PlantState& s) {
    if (!std::isfinite(s.t_air) || !std::isfinite(s.t_wall) || s.t_air < kMinAirTemperature ||
        s.t_air > kMaxAirTemperature) {
        throw Error(ErrorKind::StateOutOfRange,
                    "plant state left sanity bounds: t_air=" + std::to_string(s.t_air) +
                        " t_wall=" + std::to_string(s.t_wall));
    }
}

}  // namespace

void ThermalPlantConfig::validate() const {
    if (!(c_air > 0 && c_wall > 0 && r_aw > 0 && r_wo > 0 && q_max > 0 && q_person > 0)) {
        throw Error(ErrorKind::InvalidArgument, "plant capacities, resistances and gains must be positive");
    }
    if (!(ts > 0) || substeps < 1 || !std::isfinite(t_supply)) {
        throw Error(ErrorKind::InvalidArgument, "invalid plant sample period, substeps or supply temperature");
    }
}

void ExogenousTraces::validate() const {
    if (t_out.size() != occupancy.size()) {
        throw Error(ErrorKind::InvalidArgument, "weather and occupancy traces differ in length");
    }
    if (std::abs(t_out.ts() - occupancy.ts()) > 1e-9 * t_out.ts()) {
        throw Error(ErrorKind::SamplePeriodMismatch, "weather and occupancy traces differ in sample period");
    }
    for (double v : occupancy.samples()) {
        if (v < 0.0 || v != std::floor(v)) {
            throw Error(ErrorKind::InvalidArgument, "occupancy must be a non-negative integer count");
        }
    }
}

ExogenousTraces constant_traces(std::size_t n, double t_out, double occupants, double ts) {
    return {SignalSeries(std::vector<double>(n, t_out), ts), SignalSeries(std::vector<double>(n, occupants), ts)};
}

void ExcitationConfig::validate() const {
    if (!(mu >= 0.0 && mu <= 1.0) || !(sigma > 0.0) || n < kMinDatasetLength) {
        throw Error(ErrorKind::InvalidArgument, "excitation needs 0 <= mu <= 1, sigma > 0 and n >= 10");
    }
}

ExcitationConfig scenario_a_excitation(std::size_t n, std::uint64_t seed) {
    return {0.5, 1.0 / 6.0, n, seed};
}

ExcitationConfig scenario_b_excitation(std::size_t n, std::uint64_t seed) {
    return {0.5, 1.0, n, seed};
}

PlantState step_plant(const ThermalPlantConfig& cfg, const PlantState& state, double u, double t_out,
                      double occupants) {
    const double uc = std::clamp(u, 0.0, 1.0);
    const double h = cfg.ts / static_cast<double>(cfg.substeps);
    double a = state.t_air;
    double w = state.t_wall;
    for (int i = 0; i < cfg.substeps; ++i) {
        const auto k1 = thermal_rates(cfg, a, w, uc, t_out, occupants);
        const auto k2 = thermal_rates(cfg, a + 0.5 * h * k1.air, w + 0.5 * h * k1.wall, uc, t_out, occupants);
        const auto k3 = thermal_rates(cfg, a + 0.5 * h * k2.air, w + 0.5 * h * k2.wall, uc, t_out, occupants);
        const auto k4 = thermal_rates(cfg, a + h * k3.air, w + h * k3.wall, uc, t_out, occupants);
        a += h / 6.0 * (k1.air + 2.0 * k2.air + 2.0 * k3.air + k4.air);
        w += h / 6.0 * (k1.wall + 2.0 * k2.wall + 2.0 * k3.wall + k4.wall);
    }
    PlantState next{a, w};
    check_state(next);
    return next;
}

double wall_equilibrium(const ThermalPlantConfig& cfg, double t_air, double t_out) {
    return (t_air / cfg.r_aw + t_out / cfg.r_wo) / (1.0 / cfg.r_aw + 1.0 / cfg.r_wo);
}

PlantState steady_state(const ThermalPlantConfig& cfg, double u, double t_out, double occupants) {
    cfg.validate();
    const double g_aw = 1.0 / cfg.r_aw;
    const double g_wo = 1.0 / cfg.r_wo;
    const double q = std::clamp(u, 0.0, 1.0) * cfg.q_max;
    Eigen::Matrix2d a;
    a << g_aw + q, -g_aw, -g_aw, g_aw + g_wo;
    const Eigen::Vector2d b(q * cfg.t_supply + occupants * cfg.q_person, g_wo * t_out);
    const Eigen::Vector2d x = a.partialPivLu().solve(b);
    return {x(0), x(1)};
}

double holding_control(const ThermalPlantConfig& cfg, double t_air, double t_out, double occupants) {
    cfg.validate();
    const double loss = (t_air - wall_equilibrium(cfg, t_air, t_out)) / cfg.r_aw - occupants * cfg.q_person;
    const double span = cfg.q_max * (cfg.t_supply - t_air);
    if (span <= 0.0) {
        return loss > 0.0 ? 1.0 : 0.0;
    }
    return std::clamp(loss / span, 0.0, 1.0);
}

SignalSeries generate_excitation(const ExcitationConfig& cfg, double ts) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> dist(cfg.mu, cfg.sigma);
    std::vector<double> u(cfg.n);
    for (double& v : u) {
        v = std::clamp(dist(rng), 0.0, 1.0);
    }
    return {std::move(u), ts};
}

IoDataset run_open_loop(const ThermalPlantConfig& cfg, const SignalSeries& excitation, const ExogenousTraces& traces,
                        const PlantState& init) {
    cfg.validate();
    traces.validate();
    if (excitation.size() < kMinDatasetLength) {
        throw Error(ErrorKind::LengthTooShort,
                    "open-loop experiment needs at least 10 samples, got " + std::to_string(excitation.size()));
    }
    if (traces.size() < excitation.size()) {
        throw Error(ErrorKind::LengthTooShort, "exogenous traces shorter than the excitation");
    }
    if (std::abs(excitation.ts() - cfg.ts) > 1e-9 * cfg.ts || std::abs(traces.t_out.ts() - cfg.ts) > 1e-9 * cfg.ts) {
        throw Error(ErrorKind::SamplePeriodMismatch, "excitation, traces and plant must share a sample period");
    }
    check_state(init);
    const std::size_t n = excitation.size();
    std::vector<double> u(n);
    std::vector<double> y(n);
    PlantState s = init;
    for (std::size_t t = 0; t < n; ++t) {
        u[t] = std::clamp(excitation[t], 0.0, 1.0);
        y[t] = s.t_air;
        s = step_plant(cfg, s, u[t], traces.t_out[t], traces.occupancy[t]);
    }
    return {SignalSeries(std::move(u), cfg.ts), SignalSeries(std::move(y), cfg.ts)};
}

ClosedLoopRun run_closed_loop_detailed(const ThermalPlantConfig& cfg, const RationalTransferFunction& controller,
                                       double setpoint, const ExogenousTraces& traces, const PlantState& init,
                                       std::size_t n, const ClosedLoopOptions& options) {
    cfg.validate();
    traces.validate();
    if (n > traces.size()) {
        throw Error(ErrorKind::LengthTooShort, "closed-loop horizon exceeds exogenous traces");
    }
    if (std::abs(controller.ts() - cfg.ts) > 1e-9 * cfg.ts) {
        throw Error(ErrorKind::SamplePeriodMismatch, "controller and plant sample periods differ");
    }
    CausalFilter k(controller);
    std::vector<double> temps(n);
    std::vector<double> applied(n);
    PlantState s = init;
    try {
        check_state(s);
        for (std::size_t t = 0; t < n; ++t) {
            temps[t] = s.t_air;
            const double e = setpoint - s.t_air;
            applied[t] = std::clamp(options.initial_control + k.step(e), 0.0, 1.0);
            s = step_plant(cfg, s, applied[t], traces.t_out[t], traces.occupancy[t]);
        }
    } catch (const Error& err) {
        if (err.kind() == ErrorKind::StateOutOfRange) {
            throw Error(ErrorKind::UnstableLoop, err.what());
        }
        throw;
    }
    return {SignalSeries(std::move(temps), cfg.ts), SignalSeries(std::move(applied), cfg.ts)};
}

SignalSeries run_closed_loop(const ThermalPlantConfig& cfg, const RationalTransferFunction& controller,
                             double setpoint, const ExogenousTraces& traces, const PlantState& init, std::size_t n,
                             const ClosedLoopOptions& options) {
    return run_closed_loop_detailed(cfg, controller, setpoint, traces, init, n, options).t_air;
}

SignalSeries generate_occupancy(int weeks, std::uint64_t seed, double ts) {
    if (weeks < 1) {
        throw Error(ErrorKind::InvalidArgument, "occupancy schedule needs at least one week");
    }
    const auto per_day = static_cast<long>(std::lround(86400.0 / ts));
    const auto at_hour = [per_day](double hour) { return static_cast<long>(std::lround(hour * per_day / 24.0)); };
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> jitter(-2, 2);
    std::vector<double> occ(static_cast<std::size_t>(7L * weeks * per_day), 1.0);
    for (long day = 0; day < 7L * weeks; ++day) {
        const bool weekend = (day % 7) >= 5;
        const long leave = (weekend ? at_hour(11.0) : at_hour(8.0)) + jitter(rng);
        const long back = (weekend ? at_hour(15.0) : at_hour(17.0)) + jitter(rng);
        for (long i = std::max(leave, 0L); i < std::min(back, per_day); ++i) {
            occ[static_cast<std::size_t>(day * per_day + i)] = 0.0;
        }
    }
    return {std::move(occ), ts};
}

SignalSeries generate_weather(std::size_t n, std::uint64_t seed, const WeatherModel& model, double ts) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double phi = model.ar_coefficient;
    double noise = model.ar_sigma / std::sqrt(std::max(1.0 - phi * phi, 1e-12)) * gauss(rng);
    std::vector<double> temps(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double seconds = static_cast<double>(t) * ts;
        const double phase = 2.0 * std::numbers::pi * (seconds - model.coldest_hour * 3600.0) / 86400.0;
        temps[t] = model.mean - model.amplitude * std::cos(phase) + noise;
        noise = phi * noise + model.ar_sigma * gauss(rng);
    }
    return {std::move(temps), ts};
}

SignalSeries load_weather_csv(const std::filesystem::path& path, double ts) {
    const CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"t_seconds", "temp_c"}) {
        throw Error(ErrorKind::ParseError, path.string() + ": line 1: expected header 't_seconds,temp_c'");
    }
    if (table.rows.empty()) {
        throw Error(ErrorKind::ParseError, path.string() + ": no data rows");
    }
    std::vector<double> t;
    std::vector<double> v;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + ": line " + std::to_string(table.lines[r]);
        if (row.size() != 2) {
            throw Error(ErrorKind::ParseError, where + ": expected 2 fields");
        }
        double tv = 0.0;
        double vv = 0.0;
        try {
            tv = parse_double(row[0]);
            vv = parse_double(row[1]);
        } catch (const Error&) {
            throw Error(ErrorKind::ParseError, where + ": malformed number");
        }
        if (!std::isfinite(tv) || !std::isfinite(vv)) {
            throw Error(ErrorKind::ParseError, where + ": non-finite value");
        }
        if (!t.empty() && tv <= t.back()) {
            throw Error(ErrorKind::NonMonotonicTimestamps, where + ": timestamps must strictly increase");
        }
        t.push_back(tv);
        v.push_back(vv);
    }
    std::vector<double> out;
    const double span = t.back() - t.front();
    const auto count = static_cast<std::size_t>(std::floor(span / ts + 1e-9)) + 1;
    out.reserve(count);
    std::size_t j = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double tk = t.front() + static_cast<double>(k) * ts;
        while (j + 1 < t.size() && t[j + 1] <= tk) ++j;
        if (j + 1 >= t.size()) {
            out.push_back(v.back());
            continue;
        }
        const double frac = (tk - t[j]) / (t[j + 1] - t[j]);
        out.push_back(v[j] + frac * (v[j + 1] - v[j]));
    }
    return {std::move(out), ts};
}

}  // namespace vrftlab
