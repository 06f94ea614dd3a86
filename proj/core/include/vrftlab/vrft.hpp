#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vrftlab/dataset.hpp"
#include "vrftlab/lti.hpp"

namespace vrftlab {

// Desired closed loop (1 - lambda)^2 / (z - lambda)^2 with lambda = exp(-ts * omega0).
struct ReferenceModel {
    double omega0;
    double ts;
    double lambda;
    RationalTransferFunction tf;
};

ReferenceModel make_reference_model(double omega0, double ts);

// L(z) = (1 - M_r(z)) M_r(z).
RationalTransferFunction make_prefilter(const ReferenceModel& mr);

// Applies L(z) to both signals. Each signal is referenced to its first sample
// first, i.e. the record is treated as starting from rest at its initial value.
IoDataset prefilter(const IoDataset& ds, const ReferenceModel& mr);

struct ValidRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

struct VirtualError {
    SignalSeries e;
    ValidRange valid;
};

// e = (M_r^{-1} - 1) y. The trailing relative-degree samples need y beyond the
// record and fall outside `valid`.
VirtualError virtual_error(const IoDataset& ds, const ReferenceModel& mr);

// beta_k(z) = z^{2-k} / (z - 1), k = 1..3.
std::vector<RationalTransferFunction> pid_basis(double ts);

// Leading rows dropped from every regression (basis delay transient).
inline constexpr std::size_t kRegressorHeadSkip = 2;

// Rows of the regression used for a record of n samples.
ValidRange regression_rows(std::size_t n, const ReferenceModel& mr);

// Column k is basis[k] applied to e, restricted to `rows`.
Eigen::MatrixXd build_regressor(const SignalSeries& e, std::span<const RationalTransferFunction> basis,
                                ValidRange rows);

struct ControllerParams {
    Eigen::Vector3d theta = Eigen::Vector3d::Zero();
};

inline constexpr double kMaxConditionNumber = 1e10;

struct LeastSquaresFit {
    Eigen::VectorXd theta;
    double loss = 0.0;  // ||u - phi theta||^2 / rows
    double condition = 0.0;
};

// Householder QR; RankDeficient when cond(phi) > 1e10.
LeastSquaresFit solve_theta(const Eigen::MatrixXd& phi, const Eigen::VectorXd& u);

// J_VR for given parameters on a prepared regression.
double vr_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& phi, const Eigen::VectorXd& u);

struct Regression {
    Eigen::MatrixXd phi;
    Eigen::VectorXd target;
    ValidRange rows;
};

// Virtual error, regressor and target for an already prefiltered dataset.
Regression assemble_regression(const IoDataset& prefiltered, const ReferenceModel& mr);

struct SynthesisResult {
    ControllerParams params;
    double loss = 0.0;
    double condition = 0.0;
};

// Full pipeline: prefilter, virtual error, regressor, least squares.
SynthesisResult synthesize(const IoDataset& ds, const ReferenceModel& mr);
SynthesisResult synthesize_prefiltered(const IoDataset& prefiltered, const ReferenceModel& mr);

// (theta1 z^2 + theta2 z + theta3) / (z (z - 1))
RationalTransferFunction realize_controller(const ControllerParams& cp, double ts);

// ||M_r - g K / (1 + g K)||_2^2; +infinity when the loop is unstable.
double model_reference_gap(const RationalTransferFunction& g, const ControllerParams& cp, const ReferenceModel& mr,
                           std::size_t grid_size = kDefaultH2Grid);

struct ControllerFile {
    ControllerParams params;
    double omega0 = 0.0;
    double ts = 0.0;
};

nlohmann::json controller_to_json(const ControllerParams& cp, const ReferenceModel& mr);
ControllerFile controller_from_json(const nlohmann::json& doc);

}  // namespace vrftlab
