#include "vrftlab/vrft.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vrftlab/error.hpp"

namespace vrftlab {

IoDataset::IoDataset(SignalSeries u, SignalSeries y, DatasetMeta meta)
    : u_(std::move(u)), y_(std::move(y)), meta_(std::move(meta)) {
    if (u_.size() != y_.size()) {
        throw Error(ErrorKind::InvalidArgument, "input and output records differ in length");
    }
    if (u_.size() < kMinDatasetLength) {
        throw Error(ErrorKind::LengthTooShort, "dataset needs at least 10 samples, got " + std::to_string(u_.size()));
    }
    if (std::abs(u_.ts() - y_.ts()) > 1e-9 * u_.ts()) {
        throw Error(ErrorKind::SamplePeriodMismatch, "input and output records differ in sample period");
    }
}

ReferenceModel make_reference_model(double omega0, double ts) {
    if (!(omega0 > 0.0) || !(ts > 0.0) || !(ts * omega0 < 10.0)) {
        throw Error(ErrorKind::InvalidArgument, "reference model needs omega0 > 0, ts > 0 and ts*omega0 < 10");
    }
    const double lambda = std::exp(-ts * omega0);
    if (lambda >= 1.0 - 1e-12) {
        throw Error(ErrorKind::DegenerateBandwidth, "reference pole too close to the unit circle");
    }
    const double g = (1.0 - lambda) * (1.0 - lambda);
    return {omega0, ts, lambda, RationalTransferFunction({g}, {1.0, -2.0 * lambda, lambda * lambda}, ts)};
}

RationalTransferFunction make_prefilter(const ReferenceModel& mr) {
    const auto one = RationalTransferFunction::constant(1.0, mr.ts);
    return reduce(multiply(subtract(one, mr.tf), mr.tf));
}

IoDataset prefilter(const IoDataset& ds, const ReferenceModel& mr) {
    if (ds.meta().prefiltered) {
        throw Error(ErrorKind::AlreadyPrefiltered, "dataset has already been filtered by L(z)");
    }
    const auto filter = make_prefilter(mr);
    const auto referenced = [&](const SignalSeries& s) {
        std::vector<double> x = s.samples();
        const double x0 = x.front();
        for (double& v : x) v -= x0;
        return SignalSeries(filter_samples(filter, x), s.ts());
    };
    DatasetMeta meta = ds.meta();
    meta.prefiltered = true;
    if (std::abs(ds.ts() - mr.ts) > 1e-9 * mr.ts) {
        throw Error(ErrorKind::SamplePeriodMismatch, "dataset and reference model sample periods differ");
    }
    return {referenced(ds.u()), referenced(ds.y()), std::move(meta)};
}

VirtualError virtual_error(const IoDataset& ds, const ReferenceModel& mr) {
    const auto inv = inverse_filter(mr.tf, ds.y());
    std::vector<double> e = inv.signal.samples();
    for (std::size_t t = 0; t < e.size(); ++t) {
        e[t] = (t < inv.valid_end) ? e[t] - ds.y()[t] : 0.0;
    }
    return {SignalSeries(std::move(e), ds.ts()), {inv.valid_begin, inv.valid_end}};
}

std::vector<RationalTransferFunction> pid_basis(double ts) {
    return {
        RationalTransferFunction({1.0, 0.0}, {1.0, -1.0}, ts),
        RationalTransferFunction({1.0}, {1.0, -1.0}, ts),
        RationalTransferFunction({1.0}, {1.0, -1.0, 0.0}, ts),
    };
}

ValidRange regression_rows(std::size_t n, const ReferenceModel& mr) {
    const auto d = static_cast<std::size_t>(std::max(mr.tf.relative_degree(), 0));
    return {kRegressorHeadSkip, n > d ? n - d : 0};
}

Eigen::MatrixXd build_regressor(const SignalSeries& e, std::span<const RationalTransferFunction> basis,
                                ValidRange rows) {
    if (rows.end > e.size()) {
        throw Error(ErrorKind::InvalidArgument, "regressor rows exceed the signal length");
    }
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const auto col = simulate_filter(basis[k], e);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            phi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = col[rows.begin + r];
        }
    }
    return phi;
}

LeastSquaresFit solve_theta(const Eigen::MatrixXd& phi, const Eigen::VectorXd& u) {
    if (phi.rows() != u.size() || phi.rows() < phi.cols() || phi.cols() == 0) {
        throw Error(ErrorKind::InvalidArgument, "least squares needs a tall regressor matching the target length");
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(phi);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(phi.cols()).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
    const double smin = sv(sv.size() - 1);
    const double condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(condition <= kMaxConditionNumber)) {
        throw Error(ErrorKind::RankDeficient, "regressor condition number " + std::to_string(condition));
    }
    LeastSquaresFit fit;
    fit.theta = qr.solve(u);
    fit.loss = vr_loss(fit.theta, phi, u);
    fit.condition = condition;
    return fit;
}

double vr_loss(const Eigen::VectorXd& theta, const Eigen::MatrixXd& phi, const Eigen::VectorXd& u) {
    return (u - phi * theta).squaredNorm() / static_cast<double>(phi.rows());
}

Regression assemble_regression(const IoDataset& prefiltered, const ReferenceModel& mr) {
    if (std::abs(prefiltered.ts() - mr.ts) > 1e-9 * mr.ts) {
        throw Error(ErrorKind::SamplePeriodMismatch, "dataset and reference model sample periods differ");
    }
    const VirtualError ve = virtual_error(prefiltered, mr);
    const ValidRange rows = regression_rows(prefiltered.size(), mr);
    const auto basis = pid_basis(mr.ts);
    Regression reg;
    reg.rows = rows;
    reg.phi = build_regressor(ve.e, basis, rows);
    reg.target.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        reg.target(static_cast<Eigen::Index>(r)) = prefiltered.u()[rows.begin + r];
    }
    return reg;
}

SynthesisResult synthesize_prefiltered(const IoDataset& prefiltered, const ReferenceModel& mr) {
    const Regression reg = assemble_regression(prefiltered, mr);
    const LeastSquaresFit fit = solve_theta(reg.phi, reg.target);
    SynthesisResult out;
    out.params.theta = fit.theta;
    out.loss = fit.loss;
    out.condition = fit.condition;
    return out;
}

SynthesisResult synthesize(const IoDataset& ds, const ReferenceModel& mr) {
    return synthesize_prefiltered(prefilter(ds, mr), mr);
}

RationalTransferFunction realize_controller(const ControllerParams& cp, double ts) {
    const auto& th = cp.theta;
    if (!th.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "controller parameters must be finite");
    }
    return {{th(0), th(1), th(2)}, {1.0, -1.0, 0.0}, ts};
}

double model_reference_gap(const RationalTransferFunction& g, const ControllerParams& cp, const ReferenceModel& mr,
                           std::size_t grid_size) {
    const auto closed = feedback(g, realize_controller(cp, mr.ts));
    if (!is_stable(closed)) {
        return std::numeric_limits<double>::infinity();
    }
    return h2_norm_sq(subtract(mr.tf, closed), grid_size);
}

nlohmann::json controller_to_json(const ControllerParams& cp, const ReferenceModel& mr) {
    return {
        {"theta", {cp.theta(0), cp.theta(1), cp.theta(2)}},
        {"omega0", mr.omega0},
        {"ts", mr.ts},
        {"basis", "pid-z"},
    };
}

ControllerFile controller_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("basis").get<std::string>() != "pid-z") {
            throw Error(ErrorKind::ParseError, "unsupported controller basis");
        }
        const auto theta = doc.at("theta").get<std::vector<double>>();
        if (theta.size() != 3) {
            throw Error(ErrorKind::ParseError, "controller theta must have 3 entries");
        }
        ControllerFile out;
        out.params.theta = Eigen::Vector3d(theta[0], theta[1], theta[2]);
        out.omega0 = doc.at("omega0").get<double>();
        out.ts = doc.at("ts").get<double>();
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("controller document: ") + e.what());
    }
}

}  // namespace vrftlab
