#include "svarfm/dag_project.hpp"

#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace svarfm {

namespace {

Eigen::MatrixXd expm_hadamard(const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd sq = w.cwiseProduct(w);
    return sq.exp();
}

struct Objective {
    const Eigen::MatrixXd& w0;
    double alpha;
    double rho;

    double value(const Eigen::MatrixXd& w, double& h_out) const {
        h_out = expm_hadamard(w).trace() - static_cast<double>(w.rows());
        const double fit = 0.5 * (w - w0).squaredNorm();
        return fit + alpha * h_out + 0.5 * rho * h_out * h_out;
    }

    Eigen::MatrixXd grad(const Eigen::MatrixXd& w) const {
        const Eigen::MatrixXd e = expm_hadamard(w);
        const double h = e.trace() - static_cast<double>(w.rows());
        Eigen::MatrixXd g =
            (w - w0) + (alpha + rho * h) * e.transpose().cwiseProduct(2.0 * w);
        g.diagonal().setZero();
        return g;
    }
};

void strip_to_acyclic(Eigen::MatrixXd& w) {
    // Greedy fallback: drop the weakest surviving edge until a topological
    // order exists. Only reachable when the optimizer stalled far from h = 0.
    while (topological_order(w.cwiseAbs()).empty()) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                const double a = std::abs(w(i, j));
                if (a > 0.0 && a < best) {
                    best = a;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi < 0) break;
        w(bi, bj) = 0.0;
    }
}

}  // namespace

double h_acyclicity(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw Error(Errc::NotSquare, "adjacency must be square");
    return expm_hadamard(w).trace() - static_cast<double>(w.rows());
}

Eigen::MatrixXd h_gradient(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw Error(Errc::NotSquare, "adjacency must be square");
    return expm_hadamard(w).transpose().cwiseProduct(2.0 * w);
}

DagProjectResult project_dag(const Eigen::MatrixXd& w0_in, const DagProjectOptions& opts) {
    if (w0_in.rows() != w0_in.cols()) throw Error(Errc::NotSquare, "adjacency must be square");
    if (w0_in.rows() == 0) throw Error(Errc::InvalidSpec, "empty adjacency");
    if (!w0_in.allFinite()) throw Error(Errc::NonFinite, "adjacency has non-finite entries");
    const Eigen::Index d = w0_in.rows();

    Eigen::MatrixXd w0 = w0_in;
    w0.diagonal().setZero();
    // Exactly symmetric 2-cycles have two equally near DAGs; nudge the
    // upper-triangle weight down so the choice is deterministic.
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = i + 1; j < d; ++j) {
            w0(i, j) *= (1.0 - opts.tie_break);
        }
    }

    DagProjectResult res;
    Eigen::MatrixXd w = w0;
    double alpha = 0.0;
    double rho = opts.rho_init;
    double h_prev = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        Objective obj{w0, alpha, rho};
        double h = 0.0;
        double f = obj.value(w, h);
        for (int inner = 0; inner < opts.max_inner; ++inner) {
            const Eigen::MatrixXd g = obj.grad(w);
            if (g.cwiseAbs().maxCoeff() < opts.grad_tol) break;
            double step = 1.0;
            bool moved = false;
            for (int bt = 0; bt < 40; ++bt) {
                Eigen::MatrixXd cand = w - step * g;
                cand.diagonal().setZero();
                double h_cand = 0.0;
                const double f_cand = obj.value(cand, h_cand);
                if (f_cand < f - 1e-4 * step * g.squaredNorm()) {
                    w = std::move(cand);
                    f = f_cand;
                    h = h_cand;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        res.outer_iters = outer + 1;
        res.h_trace.push_back(h);
        if (h <= opts.h_tol) {
            res.converged = true;
            res.h_final = h;
            break;
        }
        alpha += rho * h;
        if (h > 0.25 * h_prev) rho = std::min(rho * 10.0, opts.rho_max);
        h_prev = h;
        res.h_final = h;
    }

    res.w_raw = w;
    Eigen::MatrixXd wt = w;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (std::abs(wt(i, j)) < opts.threshold) wt(i, j) = 0.0;
        }
    }
    strip_to_acyclic(wt);
    res.w = std::move(wt);
    return res;
}

CausalGraph project_graph(const CausalGraph& g, const DagProjectOptions& opts) {
    validate_graph(g);
    Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(g.d, g.d);
    for (const Edge& e : g.edges) {
        if (e.lag == 0) w0(e.source, e.target) = e.weight;
    }
    const DagProjectResult res = project_dag(w0, opts);

    CausalGraph out;
    out.d = g.d;
    out.dag_mode = true;
    for (const Edge& e : g.edges) {
        if (e.lag != 0) {
            out.edges.push_back(e);
            continue;
        }
        if (res.w(e.source, e.target) != 0.0) {
            Edge kept = e;
            kept.weight = res.w(e.source, e.target);
            out.edges.push_back(kept);
        }
    }
    return out;
}

}  // namespace svarfm
