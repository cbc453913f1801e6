#pragma once

#include "svarfm/core.hpp"

#include <vector>

namespace svarfm {

enum class FitMethod { OLS, Ridge };

/// Reduced-form VAR: x_t = intercept + sum_l coeffs[l-1] * x_{t-l} + u_t.
/// Row j of each coefficient matrix is variable j's equation.
struct VarModel {
    int p = 1;
    std::vector<Eigen::MatrixXd> coeffs;  // p matrices, d x d
    Eigen::VectorXd intercept;            // d
    Eigen::MatrixXd resid_cov;            // d x d, symmetric PSD
    FitMethod method = FitMethod::OLS;
    double ridge_lambda = 0.0;
    double spectral_radius = 0.0;  // of the companion matrix
    bool stable = true;            // spectral_radius < 1
    std::vector<double> bic_by_lag;  // BIC for p = 1..p_max, common sample

    int dim() const { return static_cast<int>(intercept.size()); }
};

struct VarFitOptions {
    double ridge_lambda = 1.0;
    bool force_ridge = false;
};

// BIC at lag p on the common sample starting at row p_common (>= p);
// p_common < 0 means p_common = p. Fitting is on per-column standardized
// data with an intercept; k = d*(p*d + 1) free parameters.
double bic(const TimeSeriesPanel& panel, int p, int p_common = -1);

// Phase 1: selects p in 1..p_max by BIC on the common sample (rows from
// p_max), refits at p* on the full available sample. Falls back to Ridge
// (per-column standardization, coefficients mapped back) when the design
// is rank-deficient, T < d, or T <= p_max*d + 1.
VarModel fit_var(const TimeSeriesPanel& panel, int p_max, const VarFitOptions& opts = {});

// (T - p) x d residual panel for rows p..T-1.
TimeSeriesPanel residuals(const VarModel& model, const TimeSeriesPanel& panel);

// Spectral radius of the pd x pd companion matrix of the coefficients.
double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& coeffs);

}  // namespace svarfm
