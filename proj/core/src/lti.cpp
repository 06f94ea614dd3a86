#include "vrftlab/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "vrftlab/error.hpp"

namespace vrftlab {

namespace {

void check_ts(double ts) {
    if (!(ts > 0.0) || !std::isfinite(ts)) {
        throw Error(ErrorKind::InvalidArgument, "sample period must be positive, got " + std::to_string(ts));
    }
}

void check_same_ts(double a, double b) {
    if (std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b))) {
        throw Error(ErrorKind::SamplePeriodMismatch,
                    "sample periods differ: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

Polynomial strip_leading_zeros(Polynomial p) {
    auto first = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
    if (first == p.end()) {
        return {0.0};
    }
    p.erase(p.begin(), first);
    return p;
}

double max_abs(const Polynomial& p) {
    double m = 0.0;
    for (double c : p) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

Polynomial poly_mul(const Polynomial& a, const Polynomial& b) {
    Polynomial out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

// Aligned at the constant term.
Polynomial poly_add(const Polynomial& a, const Polynomial& b, double sign_b = 1.0) {
    const std::size_t n = std::max(a.size(), b.size());
    Polynomial out(n, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[n - a.size() + i] += a[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        out[n - b.size() + i] += sign_b * b[i];
    }
    return out;
}

struct Division {
    Polynomial quotient;
    Polynomial remainder;
};

Division poly_div(const Polynomial& num, const Polynomial& divisor) {
    if (num.size() < divisor.size()) {
        return {{0.0}, num};
    }
    Polynomial rem = num;
    Polynomial q(num.size() - divisor.size() + 1, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double coef = rem[i] / divisor[0];
        q[i] = coef;
        for (std::size_t j = 0; j < divisor.size(); ++j) {
            rem[i + j] -= coef * divisor[j];
        }
    }
    Polynomial r(rem.end() - static_cast<std::ptrdiff_t>(divisor.size() - 1), rem.end());
    if (r.empty()) {
        r.push_back(0.0);
    }
    return {q, r};
}

Polynomial shift_up(const Polynomial& p, int k) {
    Polynomial out = p;
    out.insert(out.end(), static_cast<std::size_t>(k), 0.0);
    return out;
}

Polynomial poly_from_roots(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> acc{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(acc.size() + 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            next[i] += acc[i];
            next[i + 1] -= acc[i] * r;
        }
        acc = std::move(next);
    }
    Polynomial out(acc.size());
    std::transform(acc.begin(), acc.end(), out.begin(), [](auto c) { return c.real(); });
    return out;
}

Polynomial characteristic_polynomial(const Eigen::MatrixXd& a) {
    if (a.rows() == 0) {
        return {1.0};
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, false);
    std::vector<std::complex<double>> roots(solver.eigenvalues().begin(), solver.eigenvalues().end());
    return poly_from_roots(roots);
}

}  // namespace

SignalSeries::SignalSeries(std::vector<double> samples, double ts) : samples_(std::move(samples)), ts_(ts) {
    check_ts(ts);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i])) {
            throw Error(ErrorKind::InvalidArgument, "non-finite sample at index " + std::to_string(i));
        }
    }
}

std::vector<std::complex<double>> polynomial_roots(const Polynomial& p) {
    const Polynomial q = strip_leading_zeros(p);
    const auto n = static_cast<Eigen::Index>(q.size()) - 1;
    if (n <= 0) {
        return {};
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        companion(0, j) = -q[static_cast<std::size_t>(j + 1)] / q[0];
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        companion(i, i - 1) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return {solver.eigenvalues().begin(), solver.eigenvalues().end()};
}

std::complex<double> polynomial_eval(const Polynomial& p, std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (double c : p) {
        acc = acc * z + c;
    }
    return acc;
}

RationalTransferFunction::RationalTransferFunction(Polynomial num, Polynomial den, double ts) : ts_(ts) {
    check_ts(ts);
    if (den.empty()) {
        throw Error(ErrorKind::InvalidArgument, "denominator must be non-empty");
    }
    den = strip_leading_zeros(std::move(den));
    if (den.size() == 1 && den[0] == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "denominator is identically zero");
    }
    num = strip_leading_zeros(num.empty() ? Polynomial{0.0} : std::move(num));
    for (double c : num) {
        if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "non-finite numerator coefficient");
    }
    for (double c : den) {
        if (!std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "non-finite denominator coefficient");
    }
    const double lead = den[0];
    for (double& c : den) c /= lead;
    den[0] = 1.0;
    for (double& c : num) c /= lead;
    num_ = std::move(num);
    den_ = std::move(den);
}

RationalTransferFunction RationalTransferFunction::constant(double gain, double ts) {
    return {{gain}, {1.0}, ts};
}

RationalTransferFunction RationalTransferFunction::delay(int k, double ts) {
    if (k < 0) {
        throw Error(ErrorKind::InvalidArgument, "delay must be non-negative");
    }
    return {{1.0}, shift_up({1.0}, k), ts};
}

bool RationalTransferFunction::is_zero() const noexcept {
    return num_.size() == 1 && num_[0] == 0.0;
}

std::complex<double> RationalTransferFunction::evaluate(std::complex<double> z) const {
    return polynomial_eval(num_, z) / polynomial_eval(den_, z);
}

double RationalTransferFunction::dc_gain() const {
    return evaluate(1.0).real();
}

RationalTransferFunction add(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    check_same_ts(a.ts(), b.ts());
    if (a.den() == b.den()) {
        return {poly_add(a.num(), b.num()), a.den(), a.ts()};
    }
    return {poly_add(poly_mul(a.num(), b.den()), poly_mul(b.num(), a.den())), poly_mul(a.den(), b.den()), a.ts()};
}

RationalTransferFunction subtract(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    return add(a, scale(b, -1.0));
}

RationalTransferFunction multiply(const RationalTransferFunction& a, const RationalTransferFunction& b) {
    check_same_ts(a.ts(), b.ts());
    return {poly_mul(a.num(), b.num()), poly_mul(a.den(), b.den()), a.ts()};
}

RationalTransferFunction scale(const RationalTransferFunction& tf, double c) {
    Polynomial num = tf.num();
    for (double& v : num) v *= c;
    return {std::move(num), tf.den(), tf.ts()};
}

RationalTransferFunction feedback(const RationalTransferFunction& g, const RationalTransferFunction& k) {
    check_same_ts(g.ts(), k.ts());
    Polynomial open_num = poly_mul(g.num(), k.num());
    Polynomial open_den = poly_mul(g.den(), k.den());
    return {open_num, poly_add(open_den, open_num), g.ts()};
}

RationalTransferFunction tf_arith(const RationalTransferFunction& a, const RationalTransferFunction& b, TfOp op) {
    switch (op) {
        case TfOp::add: return add(a, b);
        case TfOp::mul: return multiply(a, b);
        case TfOp::feedback: return feedback(a, b);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown transfer-function operation");
}

RationalTransferFunction reduce(const RationalTransferFunction& tf, double tol) {
    Polynomial num = tf.num();
    Polynomial den = tf.den();
    if (tf.is_zero()) {
        return RationalTransferFunction::constant(0.0, tf.ts());
    }
    bool changed = true;
    while (changed && num.size() > 1 && den.size() > 1) {
        changed = false;
        const auto roots = polynomial_roots(num);
        for (const auto& r : roots) {
            Polynomial factor;
            if (std::abs(r.imag()) <= 1e-8 * std::max(1.0, std::abs(r))) {
                factor = {1.0, -r.real()};
            } else if (r.imag() > 0.0) {
                factor = {1.0, -2.0 * r.real(), std::norm(r)};
            } else {
                continue;  // handled with its conjugate
            }
            if (factor.size() > den.size() || factor.size() > num.size()) {
                continue;
            }
            const Division dn = poly_div(num, factor);
            const Division dd = poly_div(den, factor);
            if (max_abs(dn.remainder) <= tol * max_abs(num) && max_abs(dd.remainder) <= tol * max_abs(den)) {
                num = dn.quotient;
                den = dd.quotient;
                changed = true;
                break;
            }
        }
    }
    // Leading numerator noise from the division is dropped with the same tolerance.
    const double scale_num = max_abs(num);
    while (num.size() > 1 && std::abs(num.front()) <= tol * scale_num) {
        num.erase(num.begin());
    }
    return {num, den, tf.ts()};
}

bool is_stable(const RationalTransferFunction& tf, double rho_tol) {
    for (const auto& p : tf.poles()) {
        if (std::abs(p) >= 1.0 - rho_tol) {
            return false;
        }
    }
    return true;
}

CausalFilter::CausalFilter(const RationalTransferFunction& tf) {
    if (!tf.is_proper()) {
        throw Error(ErrorKind::ImproperFilter, "numerator degree " + std::to_string(tf.num_degree()) +
                                                   " exceeds denominator degree " + std::to_string(tf.den_degree()));
    }
    const std::size_t n = tf.den().size();
    a_ = tf.den();
    b_.assign(n, 0.0);
    if (!tf.is_zero()) {
        std::copy(tf.num().begin(), tf.num().end(), b_.end() - static_cast<std::ptrdiff_t>(tf.num().size()));
    }
    state_.assign(n > 0 ? n - 1 : 0, 0.0);
}

double CausalFilter::step(double input) {
    const double out = b_[0] * input + (state_.empty() ? 0.0 : state_[0]);
    const std::size_t n = state_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double next = (i + 1 < n) ? state_[i + 1] : 0.0;
        state_[i] = b_[i + 1] * input - a_[i + 1] * out + next;
    }
    return out;
}

void CausalFilter::reset() {
    std::fill(state_.begin(), state_.end(), 0.0);
}

std::vector<double> filter_samples(const RationalTransferFunction& tf, std::span<const double> input) {
    CausalFilter filter(tf);
    std::vector<double> out(input.size());
    for (std::size_t t = 0; t < input.size(); ++t) {
        out[t] = filter.step(input[t]);
    }
    return out;
}

std::vector<double> filter_samples_adjoint(const RationalTransferFunction& tf, std::span<const double> input) {
    std::vector<double> reversed(input.rbegin(), input.rend());
    std::vector<double> out = filter_samples(tf, reversed);
    std::reverse(out.begin(), out.end());
    return out;
}

SignalSeries simulate_filter(const RationalTransferFunction& tf, const SignalSeries& input) {
    check_same_ts(tf.ts(), input.ts());
    return {filter_samples(tf, input.view()), input.ts()};
}

namespace {

// den / (z^d num): proper whenever d >= 0.
RationalTransferFunction advance_compensated_inverse(const RationalTransferFunction& tf, int d) {
    if (tf.is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "cannot invert the zero transfer function");
    }
    return {tf.den(), shift_up(tf.num(), std::max(d, 0)), tf.ts()};
}

}  // namespace

std::vector<double> inverse_filter_samples(const RationalTransferFunction& tf, std::span<const double> output) {
    const int d = tf.relative_degree();
    const auto inverse = advance_compensated_inverse(tf, d);
    std::vector<double> w = filter_samples(inverse, output);
    if (d <= 0) {
        return w;
    }
    const std::size_t shift = static_cast<std::size_t>(d);
    std::vector<double> s(output.size(), 0.0);
    for (std::size_t t = 0; t + shift < output.size(); ++t) {
        s[t] = w[t + shift];
    }
    return s;
}

std::vector<double> inverse_filter_samples_adjoint(const RationalTransferFunction& tf, std::span<const double> input) {
    const int d = tf.relative_degree();
    const auto inverse = advance_compensated_inverse(tf, d);
    if (d <= 0) {
        return filter_samples_adjoint(inverse, input);
    }
    const std::size_t shift = static_cast<std::size_t>(d);
    std::vector<double> delayed(input.size(), 0.0);
    for (std::size_t t = shift; t < input.size(); ++t) {
        delayed[t] = input[t - shift];
    }
    return filter_samples_adjoint(inverse, delayed);
}

InverseFilterResult inverse_filter(const RationalTransferFunction& tf, const SignalSeries& output) {
    check_same_ts(tf.ts(), output.ts());
    InverseFilterResult result;
    result.signal = SignalSeries(inverse_filter_samples(tf, output.view()), output.ts());
    const std::size_t d = static_cast<std::size_t>(std::max(tf.relative_degree(), 0));
    result.valid_begin = 0;
    result.valid_end = output.size() > d ? output.size() - d : 0;
    for (const auto& z : tf.zeros()) {
        if (std::abs(z) >= 1.0 - kStabilityTolerance) {
            result.non_minimum_phase = true;
        }
    }
    return result;
}

std::complex<double> frequency_response(const RationalTransferFunction& tf, double omega) {
    const double nyquist = std::numbers::pi / tf.ts();
    if (omega < 0.0 || omega > nyquist * (1.0 + 1e-12)) {
        throw Error(ErrorKind::InvalidArgument, "frequency outside [0, pi/ts]: " + std::to_string(omega));
    }
    const std::complex<double> z = std::polar(1.0, omega * tf.ts());
    const std::complex<double> den = polynomial_eval(tf.den(), z);
    if (std::abs(den) < 1e-12 * std::max(1.0, max_abs(tf.den()))) {
        throw Error(ErrorKind::PoleOnUnitCircle, "denominator vanishes at omega = " + std::to_string(omega));
    }
    return polynomial_eval(tf.num(), z) / den;
}

double h2_norm_sq(const RationalTransferFunction& tf, std::size_t grid_size) {
    if (grid_size < 2) {
        throw Error(ErrorKind::InvalidArgument, "h2 grid needs at least two points");
    }
    if (!is_stable(tf)) {
        throw Error(ErrorKind::UnstableSystem, "H2 norm requested for an unstable transfer function");
    }
    if (tf.is_zero()) {
        return 0.0;
    }
    const double h = std::numbers::pi / static_cast<double>(grid_size - 1);
    double acc = 0.0;
    for (std::size_t k = 0; k < grid_size; ++k) {
        const double w = (k == 0 || k + 1 == grid_size) ? 0.5 : 1.0;
        acc += w * std::norm(tf.evaluate(std::polar(1.0, h * static_cast<double>(k))));
    }
    // (1/2pi) * 2 * integral_0^pi
    return acc * h / std::numbers::pi;
}

StateSpace::StateSpace(Eigen::MatrixXd a_, Eigen::MatrixXd b_, Eigen::MatrixXd c_, Eigen::MatrixXd d_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
    const auto n = a.rows();
    if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != c.rows() || d.cols() != b.cols()) {
        throw Error(ErrorKind::InvalidArgument, "state-space matrices are not conformable");
    }
}

RationalTransferFunction StateSpace::to_transfer_function(double ts) const {
    if (b.cols() != 1 || c.rows() != 1) {
        throw Error(ErrorKind::InvalidArgument, "transfer function conversion supports SISO systems only");
    }
    // C adj(zI - A) B = det(zI - A + BC) - det(zI - A)
    const Polynomial char_a = characteristic_polynomial(a);
    const Polynomial char_abc = characteristic_polynomial(a - b * c);
    Polynomial num = poly_add(char_abc, char_a, -1.0);
    Polynomial scaled_char = char_a;
    for (double& v : scaled_char) v *= d(0, 0);
    num = poly_add(num, scaled_char);
    // Eigenvalue round-off leaves ~1e-16 leading terms where the exact value is zero.
    const double ref = std::max(max_abs(num), 1.0);
    for (double& v : num) {
        if (std::abs(v) < 1e-13 * ref) v = 0.0;
    }
    return {num, char_a, ts};
}

}  // namespace vrftlab
