#pragma once

#include <vector>

#include "svarfm/core.hpp"

namespace svarfm {

// Differentiable acyclicity measure: h(W) = tr(exp(W o W)) - d. Zero exactly
// on acyclic weighted adjacency matrices, positive otherwise.
double h_acyclicity(const Eigen::MatrixXd& w);
Eigen::MatrixXd h_gradient(const Eigen::MatrixXd& w);

struct DagProjectOptions {
    double threshold = 0.05;   // final edge pruning on |w|
    double h_tol = 1e-8;
    int max_outer = 100;
    int max_inner = 500;
    double rho_init = 1.0;
    double rho_max = 1e16;
    double grad_tol = 1e-6;
    double tie_break = 1e-8;   // deterministic symmetric-cycle tie-break
};

struct DagProjectResult {
    Eigen::MatrixXd w;       // thresholded, acyclic
    Eigen::MatrixXd w_raw;   // optimizer output before thresholding
    double h_final = 0.0;
    bool converged = false;
    int outer_iters = 0;
    std::vector<double> h_trace;  // h after each outer iteration
};

// Nearest-DAG projection of a weighted adjacency matrix: minimize
// 0.5 ||W - W0||_F^2 subject to h(W) = 0 via an augmented Lagrangian with
// gradient descent + backtracking inner solves. Non-convergence is reported
// through the result, not thrown.
DagProjectResult project_dag(const Eigen::MatrixXd& w0, const DagProjectOptions& opts = {});

// Apply the projection to a graph's lag-0 weights; lagged edges pass through
// untouched (they cannot create contemporaneous cycles).
CausalGraph project_graph(const CausalGraph& g, const DagProjectOptions& opts = {});

}  // namespace svarfm
