#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library's numerical code.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Direct difference equation for num(z)/den(z), coefficients in descending
// powers of z, den[0] != 0, zero initial conditions.
inline std::vector<double> difference_equation(const std::vector<double>& num, const std::vector<double>& den,
                                               const std::vector<double>& x) {
    const long n = static_cast<long>(den.size()) - 1;
    const long m = static_cast<long>(num.size()) - 1;
    const long lag = n - m;
    std::vector<double> y(x.size(), 0.0);
    for (long t = 0; t < static_cast<long>(x.size()); ++t) {
        double acc = 0.0;
        for (long i = 0; i <= m; ++i) {
            const long k = t - lag - i;
            if (k >= 0) acc += num[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(k)];
        }
        for (long j = 1; j <= n; ++j) {
            if (t - j >= 0) acc -= den[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(t - j)];
        }
        y[static_cast<std::size_t>(t)] = acc / den[0];
    }
    return y;
}

inline std::complex<double> horner(const std::vector<double>& p, std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (double c : p) acc = acc * z + c;
    return acc;
}

inline std::complex<double> rational(const std::vector<double>& num, const std::vector<double>& den,
                                     std::complex<double> z) {
    return horner(num, z) / horner(den, z);
}

// theta = (A^T A)^{-1} A^T b by an explicit inverse of the Gram matrix.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const Eigen::MatrixXd gram = a.transpose() * a;
    return gram.inverse() * (a.transpose() * b);
}

struct Equilibrium {
    double t_air;
    double t_wall;
};

// Both node balances set to zero and solved with Cramer's rule:
//   -(g_aw + q) Ta + g_aw Tw = -(q Ts + occ P)
//    g_aw Ta - (g_aw + g_wo) Tw = -g_wo To
inline Equilibrium rc_steady_state(double r_aw, double r_wo, double q_max, double t_supply, double q_person,
                                   double u, double t_out, double occupants) {
    const double ga = 1.0 / r_aw;
    const double gw = 1.0 / r_wo;
    const double q = u * q_max;
    const double a11 = -(ga + q);
    const double a12 = ga;
    const double a21 = ga;
    const double a22 = -(ga + gw);
    const double b1 = -(q * t_supply + occupants * q_person);
    const double b2 = -gw * t_out;
    const double det = a11 * a22 - a12 * a21;
    return {(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Sample variance with divisor n.
inline double variance(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

}  // namespace oracle
