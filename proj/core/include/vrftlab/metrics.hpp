#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrftlab/lti.hpp"

namespace vrftlab {

// Welch estimator settings. Absolute PSD levels depend on all of these.
struct WelchConfig {
    std::size_t segment_length = 256;
    double overlap = 0.5;
};

struct PowerSpectrum {
    std::vector<double> frequencies;  // Hz
    std::vector<double> density;      // one-sided, units^2 / Hz
};

double rmse(const SignalSeries& t, double setpoint);

// Hann window, per-segment mean removal, one-sided density scaled so that the
// integral over [0, f_Nyquist] approximates the signal variance. The segment
// length drops to the largest power of two <= n/2 for short records.
PowerSpectrum welch_psd(const SignalSeries& t, const WelchConfig& cfg = {});

// Trapezoid integral of the Welch PSD over [0, f_Nyquist] divided by f_Nyquist.
double avg_psd(const SignalSeries& t, const WelchConfig& cfg = {});

inline constexpr double kPsdEllipseScale = 15.0;

// e_rmse^2 + (e_psd / 15)^2 <= 1
bool classify_good(double e_rmse, double e_psd);

struct MetricsReport {
    double e_rmse = 0.0;
    double e_psd = 0.0;
    bool good = false;
    std::size_t n_samples = 0;
};

MetricsReport evaluate_tracking(const SignalSeries& t, double setpoint, const WelchConfig& cfg = {});

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 s / sqrt(n)
};

MeanCi mean_ci95(std::span<const double> values);

struct BatchSummary {
    MeanCi rmse;
    MeanCi avg_psd;
    double percent_good = 0.0;  // fraction in [0, 1]
    std::size_t n_runs = 0;
};

BatchSummary summarize(std::span<const MetricsReport> reports);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const BatchSummary& s);
nlohmann::json to_json(const WelchConfig& w);

}  // namespace vrftlab
