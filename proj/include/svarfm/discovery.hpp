#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svarfm/core.hpp"
#include "svarfm/intervention_data.hpp"
#include "svarfm/simulators.hpp"
#include "svarfm/var_engine.hpp"

namespace svarfm {

// Bootstrap standard error of the mean: B resampled means, each replicate on
// its own counter-derived stream, so the parallel and serial paths agree
// bit for bit.
double bootstrap_se(const Eigen::VectorXd& sample, long B, std::uint64_t seed);
double bootstrap_se_serial(const Eigen::VectorXd& sample, long B, std::uint64_t seed);

// Interventional-minus-observational mean effect with bootstrap se and normal
// CI at 95%.
EffectEstimate estimate_ate(const Eigen::VectorXd& outcomes, double obs_mean, long bootstrap_b,
                            std::uint64_t seed);

enum class Multiplicity { None, Bonferroni, BenjaminiHochberg };

struct Phase3Options {
    double alpha = 0.05;
    Multiplicity correction = Multiplicity::Bonferroni;
    long bootstrap_b = 1000;
    long m_per_edge = 200;       // interventional draws per source
    double level_sigma = 1.0;    // intervention level: mean + level_sigma * sd
    DoMode mode = DoMode::PointInTime;
    int horizon = 1;             // effect horizon tested (edges carry it as lag)
};

struct Phase3Result {
    CausalGraph graph;
    Eigen::MatrixXd ate;      // raw effect, source row -> target col
    Eigen::MatrixXd z;        // z statistics
    Eigen::MatrixXd p;        // two-sided p-values
    double alpha_adjusted = 0.0;  // per-test level actually applied
};

// Edge identification by direct effect testing: one do-run per source variable
// (covering every target column), z = ate / bootstrap se, multiplicity
// correction over the d*(d-1) ordered pairs. Edge weights are per-unit
// effects (ate divided by the intervention shift).
Phase3Result phase3_graph(const SimulatorSpec& spec, const TimeSeriesPanel& obs,
                          const Phase3Options& opts, std::uint64_t seed);

// Per-unit interventional effect for one ordered pair: do(source = mean +
// level_sigma * sd), effect on target divided by the applied shift. Shared by
// the sensitivity probes and the benchmark harness.
EffectEstimate pair_effect(const SimulatorSpec& spec, const TimeSeriesPanel& obs,
                           const std::string& source, const std::string& target,
                           const Phase3Options& opts, std::uint64_t seed);

// Cheap observational screen: 0.5 * |standardized lag-1 VAR coefficient|
// + 0.5 * ridge-Granger error reduction (own-lags base vs + source lags).
// Entry (i, j) scores the edge i -> j; diagonal is zero.
Eigen::MatrixXd phase0_scores(const TimeSeriesPanel& panel, int p = 2, double ridge_lambda = 0.1);

// Derivative-target Granger screen for near-continuous dynamics: regress
// dx_j/dt on {x_j} vs {x_j, x_i} (ridge) and score the error reduction.
Eigen::MatrixXd diff_granger_scores(const TimeSeriesPanel& panel, double ridge_lambda = 0.1);

enum class GraphPrior { ExpectDag, ExpectCycles, Unknown };
enum class Pipeline { SvarFm, SvarFmDag, Dyn1, Dyn2 };

const char* pipeline_name(Pipeline p);

struct RouteDecision {
    Pipeline pipeline = Pipeline::SvarFm;
    bool nonlinear_flag = false;
    std::string rationale;
};

// Pipeline selection from the stated prior plus a residual-nonlinearity check
// (Ljung-Box on squared VAR residuals, lag 5, Bonferroni across columns).
RouteDecision route(const TimeSeriesPanel& panel, GraphPrior prior, long p_max = 5);

// Ljung-Box portmanteau p-value for serial correlation in `x` up to `lags`.
double ljung_box_p(const Eigen::VectorXd& x, int lags);

// Draws needed so the ATE of every ordered pair is resolved to +/- eps with
// family-wide confidence 1 - delta: ceil(2 sigma^2 ln(2 d^2 / delta) / eps^2).
long required_m(double sigma, double eps, double delta, int d);

// Rank-average ensemble of the two observational screens (small-d route).
Eigen::MatrixXd dyn1_scores(const TimeSeriesPanel& panel);

struct EnsembleComponent {
    std::string name;
    Eigen::MatrixXd scores;
};

// Z-scored weighted ensemble; weights are Spearman correlations of each
// component against the ensemble-mean ranking, clipped at zero. A component
// named "diff_granger" is dropped when the dynamics look effectively
// noise-free (max |VAR residual| below 1e-3), where its denominator degenerates.
Eigen::MatrixXd dyn2_scores(const std::vector<EnsembleComponent>& components,
                            double resid_abs_max = 1.0);

// Score matrix -> graph: keep off-diagonal cells above the given quantile of
// the off-diagonal score distribution.
CausalGraph scores_to_graph(const Eigen::MatrixXd& scores, double quantile = 0.75);

struct DiscoveryOptions {
    GraphPrior prior = GraphPrior::Unknown;
    Phase3Options phase3;
    long p_max = 10;
    double score_quantile = 0.75;
    bool include_flow = true;     // add the generative-ACE component on the
                                  // ensemble route (the expensive member)
    long flow_train_steps = 1500;
};

struct DiscoveryReport {
    Pipeline pipeline = Pipeline::SvarFm;
    bool nonlinear_flag = false;
    CausalGraph graph;
    Eigen::MatrixXd scores;
    std::vector<std::string> names;
    std::string rationale;
};

// Full pass: route on the observational panel, then run the selected pipeline
// with the simulator available as do-oracle.
DiscoveryReport run_discovery(const SimulatorSpec& spec, const TimeSeriesPanel& panel,
                              const DiscoveryOptions& opts, std::uint64_t seed);

std::string discovery_report_json(const DiscoveryReport& report);

}  // namespace svarfm
