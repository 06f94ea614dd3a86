// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero only on
// an internal error, or on any FAIL when run with --strict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "oracles.hpp"
#include "vrftlab/csv.hpp"
#include "vrftlab/error.hpp"
#include "vrftlab/experiment.hpp"
#include "vrftlab/metrics.hpp"
#include "vrftlab/plant.hpp"
#include "vrftlab/poison.hpp"
#include "vrftlab/vrft.hpp"

using namespace vrftlab;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

constexpr double kTs = 540.0;
constexpr double kOmega0 = 0.002;

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Verdict()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const ReferenceModel& model() {
    static const ReferenceModel mr = make_reference_model(kOmega0, kTs);
    return mr;
}

VectorXd gaussian(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

IoDataset filtered_record(std::size_t n, std::uint64_t seed) {
    const ThermalPlantConfig cfg;
    const auto u = generate_excitation(scenario_a_excitation(n, seed));
    const auto w = generate_weather(n, seed + 101);
    const ExogenousTraces tr{w, SignalSeries(std::vector<double>(n, 0.0), cfg.ts)};
    return prefilter(run_open_loop(cfg, u, tr, steady_state(cfg, 0.5, w[0], 0.0)), model());
}

// Clean loss of the parameters fitted on a perturbed regression, by normal equations.
double oracle_objective(const MatrixXd& phi, const VectorXd& target, const MatrixXd& phi_p, const VectorXd& target_p) {
    const VectorXd th = oracle::normal_equations(phi_p, target_p);
    return (target - phi * th).squaredNorm() / static_cast<double>(phi.rows());
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension();
        if (ext != ".csv" && ext != ".json") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
    return out;
}

double number(const std::string& s) { return std::stod(s); }

// 1. Plant whose ideal controller is a PID: G = M / ((1 - M) K*).
Verdict exact_recovery() {
    const double l = model().lambda;
    const double g = (1 - l) * (1 - l);
    const double p = 2 * l - 1;
    const Eigen::Vector3d th(1.0, -1.2, 0.4);
    const std::vector<double> num{g, 0.0};
    const std::vector<double> den{th(0), th(1) - p * th(0), th(2) - p * th(1), -p * th(2)};
    const std::size_t n = 1000;
    const auto u = generate_excitation(scenario_a_excitation(n, 2024)).samples();
    std::vector<double> du(n);
    for (std::size_t t = 0; t < n; ++t) du[t] = u[t] - u[0];
    auto y = oracle::difference_equation(num, den, du);
    const double dc = oracle::horner(num, 1.0).real() / oracle::horner(den, 1.0).real();
    for (double& v : y) v += dc * u[0];

    const auto res = synthesize(IoDataset(SignalSeries(u, kTs), SignalSeries(y, kTs)), model());
    const auto& k = res.params.theta;
    double err = 0.0;
    const std::size_t grid = 1024;
    for (std::size_t i = 0; i < grid; ++i) {
        const double w = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        const std::complex<double> z = std::polar(1.0, w);
        const auto gz = oracle::rational(num, den, z);
        const auto kz = (k(0) * z * z + k(1) * z + k(2)) / (z * (z - 1.0));
        const auto t = gz * kz / (1.0 + gz * kz);
        const auto m = g / ((z - l) * (z - l));
        err = std::max(err, std::abs(t - m));
    }
    const double gap = model_reference_gap(RationalTransferFunction(num, den, kTs), res.params, model());
    return {err < 1e-6 && gap < 1e-6, "max |T-M| " + fmt("%.2e", err) + ", gap " + fmt("%.2e", gap)};
}

// 2.
Verdict ls_oracle() {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> rows(3, 500);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial == 0 ? 500 : rows(rng);
        MatrixXd a(n, 3);
        VectorXd b(n);
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) a(i, j) = g(rng);
            b(i) = g(rng);
        }
        worst = std::max(worst, (solve_theta(a, b).theta - oracle::normal_equations(a, b)).norm());
    }
    return {worst < 1e-8, "max |theta - normal eq| " + fmt("%.2e", worst)};
}

// 3.
Verdict gradient_check() {
    double worst = 0.0;
    int probes = 0;
    for (const std::size_t n : {20UL, 100UL}) {
        const AttackProblem p = make_attack_problem(filtered_record(n, 300 + n), model());
        std::mt19937_64 rng(n);
        const double scale = std::sqrt(p.target.squaredNorm() / static_cast<double>(p.target.size()));
        for (int probe = 0; probe < 25; ++probe, ++probes) {
            const VectorXd a_u = gaussian(p.input_dim, rng, 0.05 * scale);
            const VectorXd a_y = gaussian(p.output_dim, rng, 0.05 * scale);
            const OuterGradient g = grad_outer(p, a_u, a_y);
            const double h = 1e-6;
            VectorXd fu(p.input_dim);
            VectorXd fy(p.output_dim);
            for (Eigen::Index i = 0; i < p.input_dim; ++i) {
                VectorXd e = VectorXd::Zero(p.input_dim);
                e(i) = h;
                fu(i) = (outer_objective(p, a_u + e, a_y) - outer_objective(p, a_u - e, a_y)) / (2 * h);
            }
            for (Eigen::Index i = 0; i < p.output_dim; ++i) {
                VectorXd e = VectorXd::Zero(p.output_dim);
                e(i) = h;
                fy(i) = (outer_objective(p, a_u, a_y + e) - outer_objective(p, a_u, a_y - e)) / (2 * h);
            }
            worst = std::max(worst, (fu - g.a_u).norm() / g.a_u.norm());
            worst = std::max(worst, (fy - g.a_y).norm() / g.a_y.norm());
        }
    }
    return {worst < 1e-4 && probes == 50, std::to_string(probes) + " probes, max rel err " + fmt("%.2e", worst)};
}

// 4.
Verdict attack_oracles() {
    std::mt19937_64 rng(7);
    int mismatches = 0;
    int decided = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const MatrixXd phi = gaussian(3, rng);
        const VectorXd target = gaussian(3, rng);
        const MatrixXd v = gaussian(3, rng);
        const MatrixXd b = gaussian(3, rng);
        const VectorXd a_y = VectorXd::Constant(1, 0.5);
        const AttackProblem p = make_linear_attack_problem(phi, target, v, {b});
        const double delta = 0.3 + trial * 0.1;
        const VectorXd a = input_step(p, a_y, delta, {20, 0, 1e-9, static_cast<std::uint64_t>(trial)});
        // The boundary of a 1-D ball is {-delta, +delta}.
        const MatrixXd phi_p = phi + b * a_y;
        const double plus = oracle_objective(phi, target, phi_p, target + delta * v);
        const double minus = oracle_objective(phi, target, phi_p, target - delta * v);
        const double best = std::max(plus, minus);
        if (std::abs(std::abs(a(0)) - delta) > 1e-12 * delta) ++mismatches;
        if (std::abs(plus - minus) > 1e-9 * best) {
            ++decided;
            if ((a(0) > 0) != (plus > minus)) ++mismatches;
        }
    }

    double worst_ratio = 1e300;
    for (std::uint64_t inst = 0; inst < 3; ++inst) {
        std::mt19937_64 r(11 + inst);
        const Eigen::Index n = 6;
        MatrixXd phi(n, 2);
        phi.col(0) = gaussian(n, r);
        phi.col(1) = gaussian(n, r);
        const VectorXd target = gaussian(n, r);
        const Eigen::HouseholderQR<MatrixXd> qr(gaussian(n * 3, r).reshaped(n, 3));
        const MatrixXd basis = qr.householderQ() * MatrixXd::Identity(n, 3);
        const MatrixXd r0 = 0.3 * gaussian(n * n, r).reshaped(n, n) * basis;
        const MatrixXd r1 = 0.3 * gaussian(n * n, r).reshaped(n, n) * basis;
        const AttackProblem p = make_linear_attack_problem(phi, target, MatrixXd::Identity(n, n), {r0, r1});
        const double delta = 1.0;
        const VectorXd a = output_step(p, VectorXd::Zero(n), delta, {20, 0, 1e-9, 3});
        const double pga = a.norm() <= delta + 1e-8 ? outer_objective(p, VectorXd::Zero(n), a) : -1.0;
        double grid = -1.0;
        const int m = 41;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                for (int k = 0; k < m; ++k) {
                    const Eigen::Vector3d s(-delta + 2 * delta * i / (m - 1), -delta + 2 * delta * j / (m - 1),
                                            -delta + 2 * delta * k / (m - 1));
                    if (s.norm() > delta) continue;
                    MatrixXd pp = phi;
                    pp.col(0) += r0 * s;
                    pp.col(1) += r1 * s;
                    grid = std::max(grid, oracle_objective(phi, target, pp, target));
                }
            }
        }
        worst_ratio = std::min(worst_ratio, pga / grid);
    }
    return {mismatches == 0 && decided >= 20 && worst_ratio >= 0.99,
            "1-D mismatches " + std::to_string(mismatches) + "/25, output/grid " + fmt("%.4f", worst_ratio)};
}

// 5.
Verdict attack_invariants() {
    int attacks = 0;
    int violations = 0;
    double worst_budget = 0.0;
    bool zero_exact = true;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const IoDataset ds = filtered_record(100, 500 + s);
        for (const double eu : {0.05, 0.1}) {
            for (const double ey : {0.1, 0.2}) {
                const AttackBudget b = make_budget(eu, ey, ds);
                AttackOptions opt;
                opt.seed = 1000 + s;
                const AttackResult r = run_attack(ds, model(), b, opt);
                ++attacks;
                for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
                    if (r.objective_trace[i] < r.objective_trace[i - 1]) ++violations;
                }
                worst_budget = std::max({worst_budget, r.a_u.norm() - b.delta_u, r.a_y.norm() - b.delta_y});
            }
        }
        const AttackResult z = run_attack(ds, model(), make_budget(0.0, 0.0, ds));
        zero_exact = zero_exact && z.theta_poisoned.theta == z.theta_clean.theta &&
                     z.theta_clean.theta == synthesize_prefiltered(ds, model()).params.theta;
    }
    return {attacks == 20 && violations == 0 && worst_budget <= 1e-8 && zero_exact,
            std::to_string(attacks) + " attacks, trace violations " + std::to_string(violations) +
                ", budget excess " + fmt("%.2e", std::max(0.0, worst_budget)) +
                (zero_exact ? ", zero budget exact" : ", zero budget changed theta")};
}

struct Study {
    fs::path dir;
    ExperimentConfig cfg;
};

Study& full_study() {
    static Study s = [] {
        Study st;
        st.dir = fs::temp_directory_path() / "vrftlab_acceptance_study";
        fs::remove_all(st.dir);
        st.cfg.output_dir = st.dir;
        st.cfg.attack.runs = 20;
        return st;
    }();
    return s;
}

double percent_good(const fs::path& dir, const std::string& tag) {
    return number(read_csv(dir / "validation" / tag / "summary.csv").rows.at(0).at(6));
}

// 6.
Verdict design_reproduction() {
    Study& st = full_study();
    cmd_experiment(st.cfg);
    cmd_synthesize(st.cfg);
    cmd_validate(st.cfg);
    const double a100 = percent_good(st.dir, "A100");
    const double a1000 = percent_good(st.dir, "A1000");
    const double b100 = percent_good(st.dir, "B100");
    const double b1000 = percent_good(st.dir, "B1000");
    return {b100 < a100 && a100 >= 0.9 && a1000 >= 0.9,
            "good A100 " + fmt("%.2f", a100) + ", A1000 " + fmt("%.2f", a1000) + ", B100 " + fmt("%.2f", b100) +
                ", B1000 " + fmt("%.2f", b1000)};
}

// 7.
Verdict poisoning_reproduction() {
    Study& st = full_study();
    if (!fs::exists(st.dir / "validation" / "B1000" / "summary.csv")) {
        cmd_experiment(st.cfg);
        cmd_synthesize(st.cfg);
        cmd_validate(st.cfg);
    }
    cmd_attack(st.cfg);
    // grid.csv: eps_u, eps_y, ..., rmse_mean in column 5; (0, 0) first.
    auto degradation = [&](const std::string& tag, std::map<std::pair<double, double>, double>& rmse) {
        const CsvTable t = read_csv(st.dir / "attack" / tag / "grid.csv");
        for (const auto& row : t.rows) rmse[{number(row[0]), number(row[1])}] = number(row[5]);
    };
    std::map<std::string, std::map<std::pair<double, double>, double>> grids;
    for (const std::string tag : {"A100", "A1000", "B100", "B1000"}) degradation(tag, grids[tag]);
    const double clean = grids["A1000"].at({0.0, 0.0});
    const double hit = grids["A1000"].at({0.1, 0.2});
    double deg_a = 0.0;
    double deg_b = 0.0;
    int points = 0;
    for (const std::string n : {"100", "1000"}) {
        for (const auto& [eps, v] : grids["A" + n]) {
            if (eps.first == 0.0 && eps.second == 0.0) continue;
            deg_a += v - grids["A" + n].at({0.0, 0.0});
            deg_b += grids["B" + n].at(eps) - grids["B" + n].at({0.0, 0.0});
            ++points;
        }
    }
    deg_a /= points;
    deg_b /= points;
    return {hit >= 1.5 * clean && deg_b >= deg_a,
            "A1000 rmse " + fmt("%.3f", clean) + " -> " + fmt("%.3f", hit) + " (x" + fmt("%.2f", hit / clean) +
                "), mean degradation A " + fmt("%.3f", deg_a) + ", B " + fmt("%.3f", deg_b)};
}

// 8.
Verdict metrics_consistency() {
    double worst_psd = 0.0;
    for (unsigned seed = 0; seed < 10; ++seed) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> g(0.0, 0.5);
        std::vector<double> x(2240);
        for (double& v : x) v = g(rng);
        const PowerSpectrum p = welch_psd(SignalSeries(x, kTs));
        double integral = 0.0;
        for (std::size_t i = 1; i < p.frequencies.size(); ++i) {
            integral += 0.5 * (p.density[i] + p.density[i - 1]) * (p.frequencies[i] - p.frequencies[i - 1]);
        }
        const double var = oracle::variance(x);
        worst_psd = std::max(worst_psd, std::abs(integral - var) / var);
    }
    std::mt19937 rng(1);
    std::normal_distribution<double> g(21.0, 0.3);
    std::vector<double> x(2240);
    for (double& v : x) v = g(rng);
    double ss = 0.0;
    for (double v : x) ss += (v - 21.0) * (v - 21.0);
    const double rmse_err = std::abs(rmse(SignalSeries(x, kTs), 21.0) - std::sqrt(ss / 2240.0));
    const bool ellipse = classify_good(1.0, 0.0) && classify_good(0.0, 15.0) && classify_good(0.0, 0.0) &&
                         !classify_good(std::nextafter(1.0, 2.0), 0.0) &&
                         !classify_good(0.0, std::nextafter(15.0, 16.0)) &&
                         classify_good(std::sqrt(0.5), 15.0 * std::sqrt(0.5) * (1 - 1e-12));
    return {worst_psd < 0.1 && rmse_err < 1e-12 && ellipse,
            "PSD rel err " + fmt("%.3f", worst_psd) + ", rmse err " + fmt("%.1e", rmse_err) +
                (ellipse ? ", ellipse ok" : ", ellipse wrong")};
}

// 9.
Verdict determinism() {
    auto run = [](const std::string& name, std::size_t jobs) {
        ExperimentConfig cfg;
        cfg.n_seeds = 3;
        cfg.master_seed = 77;
        cfg.output_dir = fs::temp_directory_path() / name;
        fs::remove_all(cfg.output_dir);
        CommandOptions opt;
        opt.jobs = jobs;
        run_study(cfg, opt);
        return snapshot(cfg.output_dir);
    };
    const auto a = run("vrftlab_acceptance_det_a", 1);
    const auto b = run("vrftlab_acceptance_det_b", 2);
    std::size_t differing = 0;
    for (const auto& [k, v] : a) {
        const auto it = b.find(k);
        if (it == b.end() || it->second != v) ++differing;
    }
    return {a.size() == b.size() && differing == 0 && !a.empty(),
            std::to_string(a.size()) + " files compared, " + std::to_string(differing) + " differ"};
}

// 10.
Verdict plant_sanity() {
    const ThermalPlantConfig cfg;
    double worst = 0.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uu(0.0, 1.0);
    std::uniform_real_distribution<double> to(-15.0, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double u = uu(rng);
        const double t_out = to(rng);
        const double occ = trial % 2;
        const auto ref = oracle::rc_steady_state(cfg.r_aw, cfg.r_wo, cfg.q_max, cfg.t_supply, cfg.q_person, u, t_out,
                                                 occ);
        PlantState s{15.0, 15.0};
        for (int k = 0; k < 4000; ++k) s = step_plant(cfg, s, u, t_out, occ);
        const PlantState lib = steady_state(cfg, u, t_out, occ);
        worst = std::max({worst, std::abs(s.t_air - ref.t_air), std::abs(s.t_wall - ref.t_wall),
                          std::abs(lib.t_air - ref.t_air), std::abs(lib.t_wall - ref.t_wall)});
    }
    ThermalPlantConfig fine = cfg;
    fine.ts = 60.0;
    fine.substeps = 1;
    PlantState s{15.0, 15.0};
    double minutes = -1.0;
    for (int k = 0; k < 24 * 60; ++k) {
        const PlantState next = step_plant(fine, s, 1.0, 15.0, 0.0);
        if (next.t_air >= 20.0) {
            minutes = k + (20.0 - s.t_air) / (next.t_air - s.t_air);
            break;
        }
        s = next;
    }
    return {worst < 1e-6 && minutes >= 45.0 && minutes <= 90.0,
            "steady-state err " + fmt("%.1e", worst) + " degC, 15->20 degC in " + fmt("%.1f", minutes) + " min"};
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string_view arg = argv[i];
        if (arg == "--strict") {
            strict = true;
        } else {
            only.push_back(std::stoi(std::string(arg)));
        }
    }

    const std::vector<Criterion> criteria{
        {1, "exact VRFT recovery", 5, exact_recovery},
        {2, "least squares vs normal equations", 1, ls_oracle},
        {3, "outer gradient vs finite differences", 30, gradient_check},
        {4, "attack steps vs exhaustive oracles", 60, attack_oracles},
        {5, "attack invariants", 600, attack_invariants},
        {6, "experiment design reproduction", 900, design_reproduction},
        {7, "poisoning reproduction", 3600, poisoning_reproduction},
        {8, "metrics self-consistency", 60, metrics_consistency},
        {9, "byte-identical rerun", 600, determinism},
        {10, "plant sanity", 60, plant_sanity},
    };

    int failed = 0;
    try {
        for (const Criterion& c : criteria) {
            if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
            const auto start = std::chrono::steady_clock::now();
            Verdict v = c.run();
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (secs >= c.limit_s) {
                v.pass = false;
                v.detail += ", over the time limit";
            }
            failed += v.pass ? 0 : 1;
            std::printf("%s %2d %s: %s [%.2f s / %.0f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                        v.detail.c_str(), secs, c.limit_s);
            std::fflush(stdout);
        }
    } catch (const std::exception& e) {
        std::printf("ERROR %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failed);
    return strict && failed > 0 ? 1 : 0;
}
