#include "vrftlab/metrics.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "vrftlab/error.hpp"

namespace vrftlab {

double rmse(const SignalSeries& t, double setpoint) {
    if (t.empty()) {
        throw Error(ErrorKind::EmptySeries, "rmse of an empty series");
    }
    double acc = 0.0;
    for (double v : t.samples()) {
        acc += (v - setpoint) * (v - setpoint);
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
}

PowerSpectrum welch_psd(const SignalSeries& t, const WelchConfig& cfg) {
    const std::size_t n = t.size();
    std::size_t seg = cfg.segment_length;
    if (n < 2 * seg) {
        seg = 1;
        while (seg * 2 <= n / 2) seg *= 2;
    }
    if (seg < 8) {
        throw Error(ErrorKind::SeriesTooShort, "Welch PSD needs at least 16 samples, got " + std::to_string(n));
    }
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seg * (1.0 - cfg.overlap))));

    std::vector<double> window(seg);
    double window_power = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        // periodic Hann
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg));
        window_power += window[i] * window[i];
    }
    const double fs = 1.0 / t.ts();
    const std::size_t bins = seg / 2 + 1;
    std::vector<double> density(bins, 0.0);

    Eigen::FFT<double> fft;
    std::vector<double> buf(seg);
    std::vector<std::complex<double>> coeffs;
    std::size_t segments = 0;
    for (std::size_t start = 0; start + seg <= n; start += step) {
        double mean = 0.0;
        for (std::size_t i = 0; i < seg; ++i) mean += t[start + i];
        mean /= static_cast<double>(seg);
        for (std::size_t i = 0; i < seg; ++i) buf[i] = (t[start + i] - mean) * window[i];
        fft.fwd(coeffs, buf);
        for (std::size_t k = 0; k < bins; ++k) {
            const bool edge = (k == 0) || (k == seg / 2);
            density[k] += (edge ? 1.0 : 2.0) * std::norm(coeffs[k]) / (fs * window_power);
        }
        ++segments;
    }
    PowerSpectrum out;
    out.frequencies.resize(bins);
    out.density.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        out.frequencies[k] = static_cast<double>(k) * fs / static_cast<double>(seg);
        out.density[k] = density[k] / static_cast<double>(segments);
    }
    return out;
}

double avg_psd(const SignalSeries& t, const WelchConfig& cfg) {
    const PowerSpectrum p = welch_psd(t, cfg);
    double integral = 0.0;
    for (std::size_t k = 1; k < p.frequencies.size(); ++k) {
        integral += 0.5 * (p.density[k] + p.density[k - 1]) * (p.frequencies[k] - p.frequencies[k - 1]);
    }
    const double nyquist = 0.5 / t.ts();
    return integral / nyquist;
}

bool classify_good(double e_rmse, double e_psd) {
    const double r = e_psd / kPsdEllipseScale;
    return e_rmse * e_rmse + r * r <= 1.0;
}

MetricsReport evaluate_tracking(const SignalSeries& t, double setpoint, const WelchConfig& cfg) {
    MetricsReport r;
    r.e_rmse = rmse(t, setpoint);
    r.e_psd = avg_psd(t, cfg);
    r.good = classify_good(r.e_rmse, r.e_psd);
    r.n_samples = t.size();
    return r;
}

MeanCi mean_ci95(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error(ErrorKind::TooFewRuns, "confidence interval needs at least two values");
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double s = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * s / std::sqrt(n)};
}

BatchSummary summarize(std::span<const MetricsReport> reports) {
    if (reports.size() < 2) {
        throw Error(ErrorKind::TooFewRuns, "summary needs at least two runs, got " + std::to_string(reports.size()));
    }
    std::vector<double> rm;
    std::vector<double> ps;
    std::size_t good = 0;
    for (const auto& r : reports) {
        rm.push_back(r.e_rmse);
        ps.push_back(r.e_psd);
        good += r.good ? 1 : 0;
    }
    BatchSummary s;
    s.rmse = mean_ci95(rm);
    s.avg_psd = mean_ci95(ps);
    s.percent_good = static_cast<double>(good) / static_cast<double>(reports.size());
    s.n_runs = reports.size();
    return s;
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"e_rmse", r.e_rmse}, {"e_psd", r.e_psd}, {"good", r.good}, {"n_samples", r.n_samples}};
}

nlohmann::json to_json(const BatchSummary& s) {
    return {
        {"rmse_mean", s.rmse.mean},       {"rmse_ci", s.rmse.half_width},
        {"avg_psd_mean", s.avg_psd.mean}, {"avg_psd_ci", s.avg_psd.half_width},
        {"percent_good", s.percent_good}, {"n_runs", s.n_runs},
    };
}

nlohmann::json to_json(const WelchConfig& w) {
    return {{"window", "hann"}, {"segment_length", w.segment_length}, {"overlap", w.overlap}, {"detrend", "mean"},
            {"scaling", "one-sided density"}};
}

}  // namespace vrftlab
