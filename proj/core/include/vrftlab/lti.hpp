#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vrftlab {

// Uniformly sampled real signal. Samples are finite and ts > 0.
class SignalSeries {
public:
    SignalSeries() = default;
    SignalSeries(std::vector<double> samples, double ts);

    [[nodiscard]] const std::vector<double>& samples() const noexcept { return samples_; }
    [[nodiscard]] std::span<const double> view() const noexcept { return samples_; }
    [[nodiscard]] double ts() const noexcept { return ts_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
    [[nodiscard]] double operator[](std::size_t i) const { return samples_[i]; }

private:
    std::vector<double> samples_;
    double ts_ = 1.0;
};

// Coefficients in descending powers of z.
using Polynomial = std::vector<double>;

std::vector<std::complex<double>> polynomial_roots(const Polynomial& p);
std::complex<double> polynomial_eval(const Polynomial& p, std::complex<double> z);

// Discrete-time SISO rational function num(z)/den(z) with a monic denominator.
// Properness is not enforced here; improper values are legal (e.g. inverses)
// and are rejected only by operations that need a causal realization.
class RationalTransferFunction {
public:
    RationalTransferFunction(Polynomial num, Polynomial den, double ts);

    static RationalTransferFunction constant(double gain, double ts);
    // z^{-k}
    static RationalTransferFunction delay(int k, double ts);

    [[nodiscard]] const Polynomial& num() const noexcept { return num_; }
    [[nodiscard]] const Polynomial& den() const noexcept { return den_; }
    [[nodiscard]] double ts() const noexcept { return ts_; }

    [[nodiscard]] int num_degree() const noexcept { return static_cast<int>(num_.size()) - 1; }
    [[nodiscard]] int den_degree() const noexcept { return static_cast<int>(den_.size()) - 1; }
    [[nodiscard]] int relative_degree() const noexcept { return den_degree() - num_degree(); }
    [[nodiscard]] bool is_proper() const noexcept { return is_zero() || relative_degree() >= 0; }
    [[nodiscard]] bool is_zero() const noexcept;

    [[nodiscard]] std::complex<double> evaluate(std::complex<double> z) const;
    [[nodiscard]] double dc_gain() const;

    [[nodiscard]] std::vector<std::complex<double>> poles() const { return polynomial_roots(den_); }
    [[nodiscard]] std::vector<std::complex<double>> zeros() const { return polynomial_roots(num_); }

private:
    Polynomial num_;
    Polynomial den_;
    double ts_;
};

enum class TfOp { add, mul, feedback };

RationalTransferFunction tf_arith(const RationalTransferFunction& a,
                                  const RationalTransferFunction& b,
                                  TfOp op);

RationalTransferFunction add(const RationalTransferFunction& a, const RationalTransferFunction& b);
RationalTransferFunction subtract(const RationalTransferFunction& a, const RationalTransferFunction& b);
RationalTransferFunction multiply(const RationalTransferFunction& a, const RationalTransferFunction& b);
RationalTransferFunction scale(const RationalTransferFunction& tf, double c);

// Unity negative feedback around the series connection g*k: gk / (1 + gk).
RationalTransferFunction feedback(const RationalTransferFunction& g, const RationalTransferFunction& k);

// Cancels common numerator/denominator factors whose division remainders are
// below `tol` relative to the largest coefficient. Never called implicitly.
RationalTransferFunction reduce(const RationalTransferFunction& tf, double tol = 1e-10);

inline constexpr double kStabilityTolerance = 1e-9;

// All poles strictly inside the circle of radius 1 - rho_tol.
bool is_stable(const RationalTransferFunction& tf, double rho_tol = kStabilityTolerance);

// Streaming realization (transposed direct form II) with zero initial state.
class CausalFilter {
public:
    explicit CausalFilter(const RationalTransferFunction& tf);

    double step(double input);
    void reset();

private:
    std::vector<double> b_;
    std::vector<double> a_;
    std::vector<double> state_;
};

SignalSeries simulate_filter(const RationalTransferFunction& tf, const SignalSeries& input);

// Raw-sample variants; the adjoint applies the transpose of the zero-state
// convolution matrix (time reverse, filter, time reverse).
std::vector<double> filter_samples(const RationalTransferFunction& tf, std::span<const double> input);
std::vector<double> filter_samples_adjoint(const RationalTransferFunction& tf, std::span<const double> input);

struct InverseFilterResult {
    SignalSeries signal;
    // Samples outside [valid_begin, valid_end) would need data beyond the
    // record and are filled with zeros.
    std::size_t valid_begin = 0;
    std::size_t valid_end = 0;
    // Inversion of zeros on/outside the unit circle: the output may diverge.
    bool non_minimum_phase = false;
};

// Offline, non-causal solve of tf * s = output. With relative degree d > 0 the
// last d samples of s depend on unrecorded data and are left invalid.
InverseFilterResult inverse_filter(const RationalTransferFunction& tf, const SignalSeries& output);

std::vector<double> inverse_filter_samples(const RationalTransferFunction& tf, std::span<const double> output);
std::vector<double> inverse_filter_samples_adjoint(const RationalTransferFunction& tf, std::span<const double> input);

// Evaluates tf at z = exp(j * omega * ts), omega in rad/s within [0, pi/ts].
std::complex<double> frequency_response(const RationalTransferFunction& tf, double omega);

inline constexpr std::size_t kDefaultH2Grid = 8192;

// (1/2pi) * integral over [-pi, pi] of |tf(e^{jw})|^2, trapezoid rule on
// [0, pi] doubled by conjugate symmetry.
double h2_norm_sq(const RationalTransferFunction& tf, std::size_t grid_size = kDefaultH2Grid);

// x_{t+1} = A x_t + B u_t, y_t = C x_t + D u_t.
struct StateSpace {
    StateSpace(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c, Eigen::MatrixXd d);

    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    Eigen::MatrixXd d;

    // G(z) = C (zI - A)^{-1} B + D for single-input single-output systems.
    [[nodiscard]] RationalTransferFunction to_transfer_function(double ts) const;
};

}  // namespace vrftlab
