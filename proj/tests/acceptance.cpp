// Acceptance gate: ten end-to-end checks, one line each, nonzero exit if any
// fails.  Budgeted checks also enforce their wall-clock limits.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "svarfm/bench.hpp"
#include "svarfm/dag_project.hpp"
#include "svarfm/discovery.hpp"
#include "svarfm/flow_match.hpp"
#include "svarfm/sensitivity.hpp"
#include "svarfm/simulators.hpp"

using namespace svarfm;

namespace {

int g_failures = 0;

double now_sec() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %s — %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

// ---------------------------------------------------------------- C1 + C2

void macro_criteria() {
    const double t0 = now_sec();
    BenchOptions opts;
    opts.n_seeds = 50;
    const BenchReport r = run_causalsim(BenchDomain::Macro, opts, 4242);
    const double dt = now_sec() - t0;

    report("C1 macro sign recovery",
           r.sign_accuracy == 1.0 && r.baseline_wrong_sign >= 0.70 && dt < 60.0,
           fmt("interventional sign accuracy %.0f%% (need 100%%), OLS wrong-signed %.0f%% "
               "(need >= 70%%), %.1f s (budget 60 s)",
               100.0 * r.sign_accuracy, 100.0 * r.baseline_wrong_sign, dt));

    const double truth = -0.038 * 0.114;
    report("C2 macro magnitude", std::abs(r.estimate_mean - truth) <= 0.003,
           fmt("mean estimate %.6f vs closed-form -sigma*kappa = %.6f (tolerance 0.003)",
               r.estimate_mean, truth));
    std::printf("       note: -sigma*kappa = -0.038 * 0.114 = -0.004332 exactly; the rounded "
                "figure -0.006 sometimes quoted for this calibration is not the product of "
                "these coefficients. Both numbers are stated here; the gate tests the exact "
                "product.\n");
}

// -------------------------------------------------------------------- C3

void battery_criterion() {
    const double t0 = now_sec();
    BenchOptions opts;
    opts.n_seeds = 5;
    const BenchReport r = run_causalsim(BenchDomain::Battery, opts, 555);
    const double dt = now_sec() - t0;
    const bool ok = r.baseline_mean < 0.0 && r.estimate_mean > 0.0 &&
                    r.baseline_wrong_sign == 1.0 && r.sign_accuracy == 1.0 && dt < 30.0;
    report("C3 battery sign reversal", ok,
           fmt("observational slope %.4f (< 0), do(T=25C) effect %.4f (> 0), every seed "
               "flipped, %.1f s (budget 30 s)",
               r.baseline_mean, r.estimate_mean, dt));
}

// -------------------------------------------------------------------- C4

void cosmic_criterion() {
    BenchOptions opts;
    opts.n_seeds = 3;
    const BenchReport r = run_causalsim(BenchDomain::Cosmic, opts, 77);
    const bool zero_ok = r.structural_zero_max == 0.0;
    const bool slope_ok = r.estimate_mean >= -0.12 && r.estimate_mean <= -0.05;
    report("C4 cosmic structural zero", zero_ok && slope_ok,
           fmt("sigma->log N_mu max |effect| = %.3g (needs exact 0), sigma->X_max slope "
               "%.4f g/cm^2/mb (window [-0.12, -0.05])",
               r.structural_zero_max, r.estimate_mean));
}

// -------------------------------------------------------------------- C5

void convergence_criterion() {
    const double t0 = now_sec();
    const SimulatorSpec spec = linear_chain_spec(2, 0.8);
    const std::vector<long> ms = {25, 100, 400, 1600};
    const long trials = 200;
    const double truth = 0.8 * 2.0;  // do(x0 = 2), recursive chain acts in-row

    std::vector<double> log_m, log_err;
    for (const long m : ms) {
        double sum = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(+ : sum)
#endif
        for (long trial = 0; trial < trials; ++trial) {
            DoRequest req;
            req.target = "x0";
            req.value = 2.0;
            req.mode = DoMode::PointInTime;
            req.horizon = 0;
            const InterventionDataset ds = simulate_do(
                spec, req, m,
                derive_seed(909, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)));
            sum += std::abs(ds.outcomes[0].col(1).mean() - truth);
        }
        log_m.push_back(std::log(static_cast<double>(m)));
        log_err.push_back(std::log(sum / static_cast<double>(trials)));
    }
    Eigen::MatrixXd x(log_m.size(), 1);
    Eigen::VectorXd y(log_m.size());
    for (std::size_t k = 0; k < log_m.size(); ++k) {
        x(static_cast<Eigen::Index>(k), 0) = log_m[k];
        y(static_cast<Eigen::Index>(k)) = log_err[k];
    }
    const LinFit fit = ols_fit(x, y, true);
    const double slope = fit.beta(0);
    const double dt = now_sec() - t0;
    report("C5 Monte Carlo rate", slope >= -0.65 && slope <= -0.35 && dt < 120.0,
           fmt("|error| ~ M^%.3f over M in {25,100,400,1600} x %ld trials (window "
               "[-0.65, -0.35]), %.1f s (budget 120 s)",
               slope, trials, dt));
}

// -------------------------------------------------------------------- C6

void signflip_criterion() {
    const SimulatorSpec spec = linear_chain_spec(2, 1.0);  // |true effect| = 1
    SignFlipOptions opts;
    opts.deltas = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0};
    opts.n_seeds = 40;
    opts.m = 500;
    const SignFlipResult res = sign_flip_probe(spec, "x0", "x1", opts, 99);

    double acc_low = -1.0, acc_high = -1.0;
    for (std::size_t k = 0; k < res.deltas.size(); ++k) {
        if (res.deltas[k] == 0.25) acc_low = res.accuracy[k];
        if (res.deltas[k] == 2.0) acc_high = res.accuracy[k];
    }
    const bool ok = acc_low >= 0.95 && acc_high <= 0.10 && res.threshold >= 0.5 &&
                    res.threshold <= 2.0;
    report("C6 sign-flip regime", ok,
           fmt("sign accuracy %.0f%% at delta 0.25 (need >= 95%%), %.0f%% at delta 2.0 "
               "(need <= 10%%), flip threshold %.2f (window [0.5, 2.0])",
               100.0 * acc_low, 100.0 * acc_high, res.threshold));
}

// -------------------------------------------------------------------- C7

void decomposition_criterion() {
    ErrorDecompOptions opts;  // M x delta factorial grid, defaults
    const ErrorDecomposition d = error_decomposition(opts, 31337);
    report("C7 error decomposition", d.c_m > 0.0 && d.c_bias > 0.0 && d.r2 >= 0.8,
           fmt("|err| ~ %.3f M^(-1/2) + %.3f delta, R^2 = %.3f (need both > 0, R^2 >= 0.8)",
               d.c_m, d.c_bias, d.r2));
}

// -------------------------------------------------------------------- C8

double fdr_against_chain(const CausalGraph& g) {
    long tp = 0, fp = 0;
    for (const auto& e : g.edges) {
        if (e.target == e.source + 1) {
            ++tp;
        } else {
            ++fp;
        }
    }
    return tp + fp == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(tp + fp);
}

void notears_criterion() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int projected_ok = 0;
    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXd w0(6, 6);
        for (Eigen::Index i = 0; i < 6; ++i) {
            for (Eigen::Index j = 0; j < 6; ++j) w0(i, j) = i == j ? 0.0 : gauss(rng);
        }
        const DagProjectResult res = project_dag(w0);
        bool sorted = false;
        try {
            topological_order(res.w, 0.0);
            sorted = true;
        } catch (const Error&) {
        }
        if (res.h_final <= 1e-8 && sorted) ++projected_ok;
    }

    // On DAG data the projection may only clean up the score screen's FDR.
    double fdr_raw = 0.0, fdr_proj = 0.0;
    const int n_seeds = 20;
    for (int s = 0; s < n_seeds; ++s) {
        const SimulatorSpec spec = linear_chain_spec(4, 0.8);
        const TimeSeriesPanel panel =
            simulate_observational(spec, 600, derive_seed(808, static_cast<std::uint64_t>(s)));
        const Eigen::MatrixXd scores = phase0_scores(panel);
        const CausalGraph raw = scores_to_graph(scores, 0.5);
        fdr_raw += fdr_against_chain(raw);

        Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(scores.rows(), scores.cols());
        for (const auto& e : raw.edges) kept(e.source, e.target) = e.weight;
        const DagProjectResult res = project_dag(kept);
        CausalGraph projected;
        projected.d = static_cast<int>(kept.rows());
        for (Eigen::Index i = 0; i < kept.rows(); ++i) {
            for (Eigen::Index j = 0; j < kept.cols(); ++j) {
                if (res.w(i, j) != 0.0) {
                    projected.edges.push_back(
                        {static_cast<int>(i), static_cast<int>(j), 0, res.w(i, j), 0.0, 0.0});
                }
            }
        }
        fdr_proj += fdr_against_chain(projected);
    }
    fdr_raw /= n_seeds;
    fdr_proj /= n_seeds;

    report("C8 nearest-DAG projection", projected_ok == 100 && fdr_proj <= fdr_raw,
           fmt("%d/100 random 6x6 matrices projected to h <= 1e-8 with a valid topological "
               "order; screen FDR %.3f -> %.3f after projection (must not rise)",
               projected_ok, fdr_raw, fdr_proj));
}

// -------------------------------------------------------------------- C9

void flow_criterion() {
    const double t0 = now_sec();

    // Constant-shift teacher: generated mean must land within 10% of the shift.
    const double shift = 2.0;
    {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const long n = 2000;
        Eigen::MatrixXd x1(n, 1), cond(n, 1);
        for (long r = 0; r < n; ++r) {
            x1(r, 0) = shift + 0.1 * gauss(rng);
            cond(r, 0) = 0.0;
        }
        CfmConfig cfg;
        cfg.x_dim = 1;
        cfg.cond_dim = 1;
        cfg.hidden = 32;
        cfg.steps = 2000;
        CfmModel model = CfmModel::init(cfg, 21);
        train_cfm(model, x1, cond, 22);
        const Eigen::MatrixXd samples =
            sample_flow(model, Eigen::VectorXd::Zero(1), 2000, 64, 23);
        const double mean = samples.col(0).mean();
        report("C9a flow shift teacher", std::abs(mean - shift) <= 0.1 * shift,
               fmt("sampled mean %.3f vs teacher shift %.1f (tolerance 10%%)", mean, shift));
    }

    // Quadratic teacher: conditional flow sees the curvature a pooled linear
    // fit cannot. Conditioning values are drawn dense near zero so the global
    // line underestimates the {1 -> 3} contrast.
    {
        std::mt19937_64 rng(12);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const long n = 4000;
        Eigen::MatrixXd x1(n, 1), cond(n, 1);
        for (long r = 0; r < n; ++r) {
            const double u = unif(rng);
            const double c = 3.0 * u * u;  // dense near 0, still covers [0, 3]
            cond(r, 0) = c;
            x1(r, 0) = c * c + 0.1 * gauss(rng);
        }
        const LinFit pooled = ols_fit(cond, x1.col(0), true);
        const double pooled_ace = pooled.beta(0) * 2.0;  // linear contrast 1 -> 3

        CfmConfig cfg;
        cfg.x_dim = 1;
        cfg.cond_dim = 1;
        cfg.hidden = 48;
        cfg.steps = 6000;
        CfmModel model = CfmModel::init(cfg, 31);
        train_cfm(model, x1, cond, 32);
        Eigen::VectorXd hi(1), lo(1);
        hi << 3.0;
        lo << 1.0;
        const EffectEstimate ace = flow_ace(model, hi, lo, 0, 4000, 64, 200, 33);
        report("C9b flow nonlinear contrast",
               ace.point >= 7.0 && ace.point <= 9.0 && pooled_ace < 6.0,
               fmt("flow contrast %.2f (truth 8, window [7, 9]); pooled linear contrast %.2f "
                   "(must stay < 6)",
                   ace.point, pooled_ace));

        const double rel = gradient_check(model, x1.topRows(8), cond.topRows(8), 41);
        report("C9c flow gradient check", rel < 1e-4,
               fmt("max relative error %.2e between analytic and central-difference "
                   "gradients (need < 1e-4)",
                   rel));
    }
    const double dt = now_sec() - t0;
    report("C9d flow runtime", dt < 300.0, fmt("%.1f s (budget 300 s)", dt));
}

// ------------------------------------------------------------------- C10

void lorenz_criterion() {
    SimulatorSpec spec = ode_spec("lorenz");
    // Observed panels carry measurement noise (~5% of the state scale). On a
    // noise-free trajectory a ridge on a variable's own lags extrapolates the
    // smooth curve almost perfectly, so the cross-variable gain drowns in
    // numerical round-off and the ranking is arbitrary.
    spec.phi["sd_meas"] = 1.0;
    // dx/dt needs y, dy/dt needs x and z, dz/dt needs x and y; z never
    // reaches x directly.
    const bool truth[3][3] = {{false, true, true},
                              {true, false, true},
                              {false, true, false}};
    std::vector<std::pair<double, bool>> scored;
    for (int s = 0; s < 10; ++s) {
        const TimeSeriesPanel panel =
            simulate_observational(spec, 1500, derive_seed(1234, static_cast<std::uint64_t>(s)));
        const Eigen::MatrixXd scores = diff_granger_scores(panel);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                if (i != j) scored.push_back({scores(i, j), truth[i][j]});
            }
        }
    }
    double wins = 0.0;
    long pairs = 0;
    for (const auto& [sp, lp] : scored) {
        if (!lp) continue;
        for (const auto& [sn, ln] : scored) {
            if (ln) continue;
            ++pairs;
            if (sp > sn) {
                wins += 1.0;
            } else if (sp == sn) {
                wins += 0.5;
            }
        }
    }
    const double auroc = pairs == 0 ? 0.0 : wins / static_cast<double>(pairs);
    report("C10 coupled-chaos direction screen", auroc >= 0.75,
           fmt("differential prediction-gain AUROC %.3f over 10 runs of the three-variable "
               "chaotic system (need >= 0.75)",
               auroc));
}

}  // namespace

int main() {
    std::printf("acceptance gate: 10 criteria\n\n");
    macro_criteria();
    battery_criterion();
    cosmic_criterion();
    convergence_criterion();
    signflip_criterion();
    decomposition_criterion();
    notears_criterion();
    flow_criterion();
    lorenz_criterion();
    std::printf("\n%s (%d failing)\n", g_failures == 0 ? "ALL CRITERIA PASS" : "GATE FAILED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
