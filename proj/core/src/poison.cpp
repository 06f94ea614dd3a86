#include "vrftlab/poison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vrftlab/error.hpp"
#include "vrftlab/seed.hpp"

namespace vrftlab {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

void check_dims(const AttackProblem& p, const VectorXd& a_u, const VectorXd& a_y) {
    if (a_u.size() != p.input_dim || a_y.size() != p.output_dim) {
        throw Error(ErrorKind::InvalidArgument, "perturbation sizes do not match the attack problem");
    }
}

struct Poisoned {
    MatrixXd phi;
    VectorXd target;
    VectorXd theta;
};

Poisoned poisoned_solve(const AttackProblem& p, const VectorXd& a_u, const VectorXd& a_y) {
    check_dims(p, a_u, a_y);
    Poisoned out;
    out.phi = p.phi + p.output_apply(a_y);
    out.target = p.target + p.input_apply(a_u);
    out.theta = solve_theta(out.phi, out.target).theta;
    return out;
}

VectorXd project_ball(const VectorXd& a, double delta) {
    const double n = a.norm();
    return n > delta ? VectorXd(a * (delta / n)) : a;
}

VectorXd random_direction(std::mt19937_64& rng, Index dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    VectorXd v(dim);
    double n = 0.0;
    while (n == 0.0) {
        for (Index i = 0; i < dim; ++i) v(i) = g(rng);
        n = v.norm();
    }
    return v / n;
}

// Objective that reports rank-deficient points as -inf so ascent never accepts them.
template <typename F>
double guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
        return -std::numeric_limits<double>::infinity();
    }
}

constexpr std::uint64_t kInputStream = 1;
constexpr std::uint64_t kOutputStream = 2;

}  // namespace

AttackProblem make_attack_problem(const IoDataset& prefiltered, const ReferenceModel& mr) {
    if (!prefiltered.meta().prefiltered) {
        throw Error(ErrorKind::InvalidArgument, "the attack works on the L(z)-filtered record");
    }
    const Regression reg = assemble_regression(prefiltered, mr);
    const std::size_t n = prefiltered.size();
    const ValidRange rows = reg.rows;
    const std::size_t d = static_cast<std::size_t>(std::max(mr.tf.relative_degree(), 0));
    const std::size_t valid_end = n > d ? n - d : 0;
    const auto basis = pid_basis(mr.ts);
    const RationalTransferFunction model = mr.tf;

    AttackProblem p;
    p.phi = reg.phi;
    p.target = reg.target;
    p.input_dim = static_cast<Index>(n);
    p.output_dim = static_cast<Index>(n);
    p.input_apply = [rows](const VectorXd& a) -> VectorXd {
        return a.segment(static_cast<Index>(rows.begin), static_cast<Index>(rows.size()));
    };
    p.input_adjoint = [rows, n](const VectorXd& r) -> VectorXd {
        VectorXd a = VectorXd::Zero(static_cast<Index>(n));
        a.segment(static_cast<Index>(rows.begin), static_cast<Index>(rows.size())) = r;
        return a;
    };
    p.output_apply = [rows, valid_end, basis, model](const VectorXd& a) -> MatrixXd {
        const std::vector<double> y = to_std(a);
        std::vector<double> e = inverse_filter_samples(model, y);
        for (std::size_t t = 0; t < e.size(); ++t) {
            e[t] = t < valid_end ? e[t] - y[t] : 0.0;
        }
        MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(basis.size()));
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const std::vector<double> col = filter_samples(basis[k], e);
            out.col(static_cast<Index>(k)) =
                to_eigen(col).segment(static_cast<Index>(rows.begin), static_cast<Index>(rows.size()));
        }
        return out;
    };
    p.output_adjoint = [rows, n, valid_end, basis, model](const MatrixXd& c) -> VectorXd {
        std::vector<double> m(n, 0.0);
        std::vector<double> scattered(n, 0.0);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            for (std::size_t r = 0; r < rows.size(); ++r) {
                scattered[rows.begin + r] = c(static_cast<Index>(r), static_cast<Index>(k));
            }
            const std::vector<double> back = filter_samples_adjoint(basis[k], scattered);
            for (std::size_t t = 0; t < n; ++t) m[t] += back[t];
        }
        for (std::size_t t = valid_end; t < n; ++t) m[t] = 0.0;
        std::vector<double> out = inverse_filter_samples_adjoint(model, m);
        for (std::size_t t = 0; t < n; ++t) out[t] -= m[t];
        return to_eigen(out);
    };
    return p;
}

AttackProblem make_linear_attack_problem(MatrixXd phi, VectorXd target, MatrixXd input_map,
                                         std::vector<MatrixXd> output_maps) {
    const Index rows = phi.rows();
    if (target.size() != rows || input_map.rows() != rows ||
        output_maps.size() != static_cast<std::size_t>(phi.cols()) || output_maps.empty()) {
        throw Error(ErrorKind::InvalidArgument, "linear attack problem has inconsistent shapes");
    }
    const Index out_dim = output_maps.front().cols();
    for (const auto& b : output_maps) {
        if (b.rows() != rows || b.cols() != out_dim) {
            throw Error(ErrorKind::InvalidArgument, "output maps must share one shape");
        }
    }
    AttackProblem p;
    p.phi = std::move(phi);
    p.target = std::move(target);
    p.input_dim = input_map.cols();
    p.output_dim = out_dim;
    p.input_apply = [input_map](const VectorXd& a) -> VectorXd { return input_map * a; };
    p.input_adjoint = [input_map](const VectorXd& r) -> VectorXd { return input_map.transpose() * r; };
    p.output_apply = [output_maps, rows](const VectorXd& a) -> MatrixXd {
        MatrixXd out(rows, static_cast<Index>(output_maps.size()));
        for (std::size_t k = 0; k < output_maps.size(); ++k) out.col(static_cast<Index>(k)) = output_maps[k] * a;
        return out;
    };
    p.output_adjoint = [output_maps, out_dim](const MatrixXd& c) -> VectorXd {
        VectorXd g = VectorXd::Zero(out_dim);
        for (std::size_t k = 0; k < output_maps.size(); ++k) {
            g += output_maps[k].transpose() * c.col(static_cast<Index>(k));
        }
        return g;
    };
    return p;
}

VectorXd inner_solve(const AttackProblem& p, const VectorXd& a_u, const VectorXd& a_y) {
    return poisoned_solve(p, a_u, a_y).theta;
}

ControllerParams inner_solve(const IoDataset& poisoned_prefiltered, const ReferenceModel& mr) {
    return synthesize_prefiltered(poisoned_prefiltered, mr).params;
}

double outer_objective(const AttackProblem& p, const VectorXd& a_u, const VectorXd& a_y) {
    return vr_loss(inner_solve(p, a_u, a_y), p.phi, p.target);
}

double outer_objective(const VectorXd& a_u, const VectorXd& a_y, const IoDataset& clean_prefiltered,
                       const ReferenceModel& mr) {
    return outer_objective(make_attack_problem(clean_prefiltered, mr), a_u, a_y);
}

OuterGradient grad_outer(const AttackProblem& p, const VectorXd& a_u, const VectorXd& a_y) {
    const Poisoned q = poisoned_solve(p, a_u, a_y);
    const double nv = static_cast<double>(p.phi.rows());
    const VectorXd clean_residual = p.phi * q.theta - p.target;
    const VectorXd g_theta = (2.0 / nv) * (p.phi.transpose() * clean_residual);

    // w = (phi'^T phi')^{-1} g_theta through the triangular factor of phi'.
    const Eigen::HouseholderQR<MatrixXd> qr(q.phi);
    const Index m = q.phi.cols();
    const MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const VectorXd w = r.triangularView<Eigen::Upper>().solve(r.transpose().triangularView<Eigen::Lower>().solve(g_theta));

    const VectorXd phi_w = q.phi * w;
    const VectorXd residual = q.target - q.phi * q.theta;

    OuterGradient g;
    g.value = clean_residual.squaredNorm() / nv;
    g.a_u = p.input_adjoint(phi_w);
    MatrixXd c(residual.size(), m);
    for (Index k = 0; k < m; ++k) {
        c.col(k) = w(k) * residual - q.theta(k) * phi_w;
    }
    g.a_y = p.output_adjoint(c);
    return g;
}

std::string to_string(BudgetReference r) { return r == BudgetReference::input_norm ? "input_norm" : "output_norm"; }

BudgetReference budget_reference_from_string(const std::string& text) {
    if (text == "input_norm") return BudgetReference::input_norm;
    if (text == "output_norm") return BudgetReference::output_norm;
    throw Error(ErrorKind::ConfigError, "budget_y_reference must be input_norm or output_norm, got '" + text + "'");
}

AttackBudget make_budget(double eps_u, double eps_y, const IoDataset& prefiltered, BudgetReference y_reference) {
    if (!(eps_u >= 0.0 && eps_u <= 1.0) || !(eps_y >= 0.0 && eps_y <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "attack budgets eps_u, eps_y must lie in [0, 1]");
    }
    const auto norm = [](const SignalSeries& s) { return to_eigen(s.samples()).norm(); };
    AttackBudget b;
    b.eps_u = eps_u;
    b.eps_y = eps_y;
    b.y_reference = y_reference;
    b.delta_u = eps_u * norm(prefiltered.u());
    b.delta_y = eps_y * (y_reference == BudgetReference::input_norm ? norm(prefiltered.u()) : norm(prefiltered.y()));
    return b;
}

VectorXd input_step(const AttackProblem& p, const VectorXd& a_y, double delta, const StepOptions& options,
                    const VectorXd& warm) {
    if (!(delta >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "input budget must be non-negative");
    }
    const Index dim = p.input_dim;
    if (delta == 0.0) {
        return VectorXd::Zero(dim);
    }
    const std::size_t max_it = options.max_iterations > 0 ? options.max_iterations : 200;
    std::mt19937_64 rng(derive_seed({options.seed, kInputStream}));

    std::vector<VectorXd> starts;
    if (warm.size() == dim && warm.norm() > 0.0) {
        starts.push_back(delta * warm / warm.norm());
    }
    for (std::size_t r = 0; r < options.restarts; ++r) {
        starts.push_back(delta * random_direction(rng, dim));
    }

    VectorXd best = starts.empty() ? VectorXd(delta * random_direction(rng, dim)) : starts.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (const VectorXd& start : starts) {
        VectorXd a = start;
        OuterGradient g = grad_outer(p, a, a_y);
        for (std::size_t it = 0; it < max_it; ++it) {
            const double gn = g.a_u.norm();
            if (gn == 0.0) break;
            const VectorXd next = delta * g.a_u / gn;
            const OuterGradient gn_next = grad_outer(p, next, a_y);
            const double change = gn_next.value - g.value;
            if (change < 0.0) break;
            a = next;
            g = gn_next;
            if (change < options.tolerance) break;
        }
        if (g.value > best_value) {
            best_value = g.value;
            best = a;
        }
    }
    return best;
}

VectorXd output_step(const AttackProblem& p, const VectorXd& a_u, double delta, const StepOptions& options,
                     const VectorXd& warm) {
    if (!(delta >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "output budget must be non-negative");
    }
    const Index dim = p.output_dim;
    if (delta == 0.0) {
        return VectorXd::Zero(dim);
    }
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxHalvings = 40;
    const std::size_t max_it = options.max_iterations > 0 ? options.max_iterations : 500;
    std::mt19937_64 rng(derive_seed({options.seed, kOutputStream}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<VectorXd> starts;
    if (warm.size() == dim) {
        starts.push_back(project_ball(warm, delta));
    }
    for (std::size_t r = 0; r < options.restarts; ++r) {
        const double radius = delta * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
        starts.push_back(radius * random_direction(rng, dim));
    }
    if (starts.empty()) {
        starts.push_back(VectorXd::Zero(dim));
    }

    VectorXd best = VectorXd::Zero(dim);
    double best_value = -std::numeric_limits<double>::infinity();
    for (const VectorXd& start : starts) {
        VectorXd a = start;
        OuterGradient g;
        const double v0 = guarded([&] {
            g = grad_outer(p, a_u, a);
            return g.value;
        });
        if (!std::isfinite(v0)) continue;
        for (std::size_t it = 0; it < max_it; ++it) {
            const double gn = g.a_y.norm();
            if (gn == 0.0) break;
            double step = 0.1 * delta / gn;
            bool accepted = false;
            VectorXd next;
            double next_value = 0.0;
            for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
                next = project_ball(a + step * g.a_y, delta);
                next_value = guarded([&] { return outer_objective(p, a_u, next); });
                if (next_value >= g.value + kArmijo * g.a_y.dot(next - a)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            const double improvement = next_value - g.value;
            a = next;
            g = grad_outer(p, a_u, a);
            if (improvement < options.tolerance) break;
        }
        if (g.value > best_value) {
            best_value = g.value;
            best = a;
        }
    }
    return best;
}

AttackResult run_attack(const AttackProblem& p, const AttackBudget& budget, const AttackOptions& options) {
    if (!(budget.delta_u >= 0.0) || !(budget.delta_y >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "attack budgets must be non-negative");
    }
    AttackResult res;
    res.budget = budget;
    res.seed = options.seed;
    res.a_u = VectorXd::Zero(p.input_dim);
    res.a_y = VectorXd::Zero(p.output_dim);
    res.theta_clean.theta = inner_solve(p, res.a_u, res.a_y);
    res.theta_poisoned = res.theta_clean;
    const double clean = vr_loss(res.theta_clean.theta, p.phi, p.target);
    res.objective_trace.push_back(clean);
    if (budget.delta_u == 0.0 && budget.delta_y == 0.0) {
        return res;
    }
    const double eta = options.eta > 0.0 ? options.eta : 1e-4 * (1.0 + clean);

    double current = clean;
    for (std::size_t i = 0; i < options.max_iter; ++i) {
        StepOptions step;
        step.restarts = options.restarts;
        step.seed = derive_seed({options.seed, i});
        VectorXd a_u;
        VectorXd a_y;
        VectorXd theta;
        try {
            a_u = input_step(p, res.a_y, budget.delta_u, step, res.a_u);
            a_y = output_step(p, a_u, budget.delta_y, step, res.a_y);
            theta = inner_solve(p, a_u, a_y);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::RankDeficient) throw;
            break;
        }
        res.restarts_used += 2 * options.restarts;
        const double value = vr_loss(theta, p.phi, p.target);
        if (!(value >= current)) break;
        res.a_u = std::move(a_u);
        res.a_y = std::move(a_y);
        res.theta_poisoned.theta = theta;
        res.objective_trace.push_back(value);
        ++res.iterations;
        const double gain = value - current;
        current = value;
        if (gain <= eta) break;
    }
    return res;
}

AttackResult run_attack(const IoDataset& clean_prefiltered, const ReferenceModel& mr, const AttackBudget& budget,
                        const AttackOptions& options) {
    return run_attack(make_attack_problem(clean_prefiltered, mr), budget, options);
}

IoDataset apply_perturbation(const IoDataset& clean_prefiltered, const AttackResult& result) {
    const std::size_t n = clean_prefiltered.size();
    if (static_cast<std::size_t>(result.a_u.size()) != n || static_cast<std::size_t>(result.a_y.size()) != n) {
        throw Error(ErrorKind::InvalidArgument, "perturbation length differs from the dataset");
    }
    std::vector<double> u = clean_prefiltered.u().samples();
    std::vector<double> y = clean_prefiltered.y().samples();
    for (std::size_t t = 0; t < n; ++t) {
        u[t] += result.a_u(static_cast<Index>(t));
        y[t] += result.a_y(static_cast<Index>(t));
    }
    DatasetMeta meta = clean_prefiltered.meta();
    meta.poisoned = true;
    return {SignalSeries(std::move(u), clean_prefiltered.ts()), SignalSeries(std::move(y), clean_prefiltered.ts()),
            std::move(meta)};
}

nlohmann::json to_json(const AttackResult& r) {
    const auto vec = [](const VectorXd& v) { return to_std(v); };
    return {
        {"eps_u", r.budget.eps_u},
        {"eps_y", r.budget.eps_y},
        {"delta_u", r.budget.delta_u},
        {"delta_y", r.budget.delta_y},
        {"budget_y_reference", to_string(r.budget.y_reference)},
        {"a_u", vec(r.a_u)},
        {"a_y", vec(r.a_y)},
        {"theta_clean", vec(r.theta_clean.theta)},
        {"theta_poisoned", vec(r.theta_poisoned.theta)},
        {"objective_trace", r.objective_trace},
        {"iterations", r.iterations},
        {"restarts_used", r.restarts_used},
        {"seed", r.seed},
    };
}

}  // namespace vrftlab
