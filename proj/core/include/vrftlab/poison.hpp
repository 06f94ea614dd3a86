#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vrftlab/dataset.hpp"
#include "vrftlab/vrft.hpp"

namespace vrftlab {

// The bilevel attack only needs the clean regression and the linear maps
// through which perturbations reach it:
//   target' = target + input_apply(a_u)
//   phi'    = phi + output_apply(a_y)
// Keeping it abstract lets small hand-built problems exercise the same solver.
struct AttackProblem {
    Eigen::MatrixXd phi;
    Eigen::VectorXd target;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> input_apply;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> input_adjoint;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> output_apply;
    // sum_k B_k^T c.col(k), where column k of output_apply(a) is B_k a.
    std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> output_adjoint;
};

// Perturbations of a prefiltered record: a_u shifts the regression target, a_y
// moves every regressor column through the virtual error and PID basis.
AttackProblem make_attack_problem(const IoDataset& prefiltered, const ReferenceModel& mr);

// Dense variant; output_maps[k] is B_k.
AttackProblem make_linear_attack_problem(Eigen::MatrixXd phi, Eigen::VectorXd target, Eigen::MatrixXd input_map,
                                         std::vector<Eigen::MatrixXd> output_maps);

// Learner's response on poisoned data. RankDeficient when a_y destroys excitation.
Eigen::VectorXd inner_solve(const AttackProblem& p, const Eigen::VectorXd& a_u, const Eigen::VectorXd& a_y);
ControllerParams inner_solve(const IoDataset& poisoned_prefiltered, const ReferenceModel& mr);

// Clean-data loss of the poisoned parameters.
double outer_objective(const AttackProblem& p, const Eigen::VectorXd& a_u, const Eigen::VectorXd& a_y);
double outer_objective(const Eigen::VectorXd& a_u, const Eigen::VectorXd& a_y, const IoDataset& clean_prefiltered,
                       const ReferenceModel& mr);

struct OuterGradient {
    double value = 0.0;
    Eigen::VectorXd a_u;
    Eigen::VectorXd a_y;
};

OuterGradient grad_outer(const AttackProblem& p, const Eigen::VectorXd& a_u, const Eigen::VectorXd& a_y);

enum class BudgetReference { input_norm, output_norm };

std::string to_string(BudgetReference r);
BudgetReference budget_reference_from_string(const std::string& text);

struct AttackBudget {
    double eps_u = 0.0;
    double eps_y = 0.0;
    double delta_u = 0.0;
    double delta_y = 0.0;
    BudgetReference y_reference = BudgetReference::input_norm;
};

// delta_u = eps_u ||U_N||, delta_y = eps_y ||U_N|| (or ||Y_N|| with output_norm),
// norms taken on the prefiltered record that is being attacked.
AttackBudget make_budget(double eps_u, double eps_y, const IoDataset& prefiltered,
                         BudgetReference y_reference = BudgetReference::input_norm);

struct StepOptions {
    std::size_t restarts = 20;
    std::size_t max_iterations = 0;  // 0: 200 for the input step, 500 for the output step
    double tolerance = 1e-9;
    std::uint64_t seed = 0;
};

// Maximizes the (convex in a_u) objective over ||a_u|| <= delta by repeatedly
// jumping to the boundary point along the gradient. `warm` is tried alongside
// the random boundary restarts when non-empty.
Eigen::VectorXd input_step(const AttackProblem& p, const Eigen::VectorXd& a_y, double delta,
                           const StepOptions& options = {}, const Eigen::VectorXd& warm = {});

// Projected gradient ascent with backtracking over ||a_y|| <= delta, restarts
// drawn uniformly in the ball.
Eigen::VectorXd output_step(const AttackProblem& p, const Eigen::VectorXd& a_u, double delta,
                            const StepOptions& options = {}, const Eigen::VectorXd& warm = {});

struct AttackOptions {
    double eta = 0.0;  // <= 0 selects 1e-4 * (1 + clean loss)
    std::size_t max_iter = 50;
    std::size_t restarts = 20;
    std::uint64_t seed = 0;
};

struct AttackResult {
    AttackBudget budget;
    Eigen::VectorXd a_u;
    Eigen::VectorXd a_y;
    ControllerParams theta_clean;
    ControllerParams theta_poisoned;
    std::vector<double> objective_trace;
    std::size_t iterations = 0;
    std::size_t restarts_used = 0;
    std::uint64_t seed = 0;
};

// Alternates input and output steps until the clean-data loss improves by at
// most eta. An iterate that lowers the loss or makes the inner problem rank
// deficient ends the run with the best accepted point.
AttackResult run_attack(const AttackProblem& p, const AttackBudget& budget, const AttackOptions& options = {});
AttackResult run_attack(const IoDataset& clean_prefiltered, const ReferenceModel& mr, const AttackBudget& budget,
                        const AttackOptions& options = {});

// U_N + a_u, Y_N + a_y, flagged as poisoned.
IoDataset apply_perturbation(const IoDataset& clean_prefiltered, const AttackResult& result);

nlohmann::json to_json(const AttackResult& r);

}  // namespace vrftlab
