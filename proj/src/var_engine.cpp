#include "svarfm/var_engine.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace svarfm {

namespace {

constexpr double kLogDetFloor = 1e-12;

struct Standardized {
    Eigen::MatrixXd values;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // 1.0 for constant columns
};

Standardized standardize(const Eigen::MatrixXd& X) {
    Standardized s;
    s.mean = X.colwise().mean();
    s.values = X.rowwise() - s.mean.transpose();
    s.scale.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double sd = std::sqrt(s.values.col(j).squaredNorm() / std::max<double>(1.0, X.rows() - 1));
        s.scale(j) = sd > 0.0 ? sd : 1.0;
        s.values.col(j) /= s.scale(j);
    }
    return s;
}

// Lagged design for rows start..T-1: [x_{t-1}, ..., x_{t-p}], plus targets.
void build_design(const Eigen::MatrixXd& X, int p, Eigen::Index start, Eigen::MatrixXd& Z,
                  Eigen::MatrixXd& Y) {
    const Eigen::Index T = X.rows();
    const Eigen::Index d = X.cols();
    const Eigen::Index n = T - start;
    Z.resize(n, p * d);
    Y.resize(n, d);
    for (Eigen::Index t = start; t < T; ++t) {
        Y.row(t - start) = X.row(t);
        for (int l = 1; l <= p; ++l) {
            Z.block(t - start, (l - 1) * d, 1, d) = X.row(t - l);
        }
    }
}

struct CoreFit {
    Eigen::MatrixXd B;       // (p*d + 1) x d, last row = intercepts (standardized scale)
    Eigen::MatrixXd resid;   // n x d residuals (standardized scale)
    FitMethod method = FitMethod::OLS;
};

CoreFit fit_at_lag(const Eigen::MatrixXd& Xstd, int p, Eigen::Index start, bool use_ridge,
                   double lambda) {
    Eigen::MatrixXd Z, Y;
    build_design(Xstd, p, start, Z, Y);
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd Zi(n, Z.cols() + 1);
    Zi << Z, Eigen::VectorXd::Ones(n);

    CoreFit fit;
    Eigen::MatrixXd G = Zi.transpose() * Zi;
    if (!use_ridge) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
        if (lu.rank() < G.rows()) use_ridge = true;
    }
    if (use_ridge) {
        for (Eigen::Index k = 0; k < Z.cols(); ++k) G(k, k) += lambda;
        fit.method = FitMethod::Ridge;
    }
    Eigen::LDLT<Eigen::MatrixXd> solver(G);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::SingularDesign, "VAR normal equations not solvable");
    }
    fit.B = solver.solve(Zi.transpose() * Y);
    if (!fit.B.allFinite()) {
        throw Error(Errc::SingularDesign, "VAR solve produced non-finite coefficients");
    }
    fit.resid = Y - Zi * fit.B;
    return fit;
}

double bic_from_fit(const CoreFit& fit, int p, Eigen::Index d) {
    const Eigen::Index n = fit.resid.rows();
    Eigen::MatrixXd cov = fit.resid.transpose() * fit.resid / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    double log_det = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        log_det += std::log(std::max(es.eigenvalues()(j), kLogDetFloor));
    }
    const double k = static_cast<double>(d) * (static_cast<double>(p) * d + 1.0);
    return static_cast<double>(n) * log_det + k * std::log(static_cast<double>(n));
}

}  // namespace

double bic(const TimeSeriesPanel& panel, int p, int p_common) {
    if (p < 1) throw Error(Errc::InvalidSpec, "lag order must be >= 1");
    if (p_common < 0) p_common = p;
    if (p_common < p) throw Error(Errc::InvalidSpec, "common sample start below p");
    const Eigen::Index T = panel.rows();
    if (T <= 2 || T - p_common < panel.cols() + 2) {
        throw Error(Errc::TooShort, "panel too short for BIC at this lag");
    }
    Standardized s = standardize(panel.values);
    const bool ridge = T <= static_cast<Eigen::Index>(p) * panel.cols() + 1;
    CoreFit fit = fit_at_lag(s.values, p, p_common, ridge, 1.0);
    return bic_from_fit(fit, p, panel.cols());
}

double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& coeffs) {
    const int p = static_cast<int>(coeffs.size());
    if (p == 0) return 0.0;
    const Eigen::Index d = coeffs[0].rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p * d, p * d);
    for (int l = 0; l < p; ++l) A.block(0, l * d, d, d) = coeffs[static_cast<std::size_t>(l)];
    if (p > 1) {
        A.block(d, 0, (p - 1) * d, (p - 1) * d) =
            Eigen::MatrixXd::Identity((p - 1) * d, (p - 1) * d);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

VarModel fit_var(const TimeSeriesPanel& panel, int p_max, const VarFitOptions& opts) {
    validate_panel(panel);
    const Eigen::Index T = panel.rows();
    const Eigen::Index d = panel.cols();
    if (T <= 2) throw Error(Errc::TooShort, "need more than 2 rows to fit a VAR");
    if (p_max < 1) throw Error(Errc::InvalidSpec, "p_max must be >= 1");

    // Largest lag leaving at least 2 usable rows on the common sample.
    while (p_max > 1 && T - p_max < 2) --p_max;
    if (T - p_max < 2) throw Error(Errc::TooShort, "panel too short for any lag");

    Standardized s = standardize(panel.values);

    bool ridge = opts.force_ridge || T < d ||
                 T <= static_cast<Eigen::Index>(p_max) * d + 1;

    int best_p = 1;
    double best_bic = std::numeric_limits<double>::infinity();
    std::vector<double> bic_values;
    for (int p = 1; p <= p_max; ++p) {
        CoreFit fit = fit_at_lag(s.values, p, p_max, ridge, opts.ridge_lambda);
        const double value = bic_from_fit(fit, p, d);
        bic_values.push_back(value);
        if (value < best_bic) {
            best_bic = value;
            best_p = p;
        }
    }

    CoreFit fit = fit_at_lag(s.values, best_p, best_p, ridge, opts.ridge_lambda);

    VarModel model;
    model.p = best_p;
    model.bic_by_lag = std::move(bic_values);
    model.method = fit.method;
    model.ridge_lambda = fit.method == FitMethod::Ridge ? opts.ridge_lambda : 0.0;

    // Map standardized coefficients back to the raw scale:
    // Phi_l(j,k) = s_j * A_l(j,k) / s_k, intercept = m + S c - sum_l Phi_l m.
    model.coeffs.assign(static_cast<std::size_t>(best_p), Eigen::MatrixXd::Zero(d, d));
    for (int l = 0; l < best_p; ++l) {
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = 0; k < d; ++k) {
                model.coeffs[static_cast<std::size_t>(l)](j, k) =
                    s.scale(j) * fit.B(l * d + k, j) / s.scale(k);
            }
        }
    }
    model.intercept = s.mean;
    for (Eigen::Index j = 0; j < d; ++j) {
        model.intercept(j) += s.scale(j) * fit.B(best_p * d, j);
    }
    for (int l = 0; l < best_p; ++l) {
        model.intercept -= model.coeffs[static_cast<std::size_t>(l)] * s.mean;
    }

    // Residual covariance on the raw scale.
    Eigen::MatrixXd resid_raw = fit.resid;
    for (Eigen::Index j = 0; j < d; ++j) resid_raw.col(j) *= s.scale(j);
    model.resid_cov =
        resid_raw.transpose() * resid_raw / static_cast<double>(resid_raw.rows());
    model.resid_cov = 0.5 * (model.resid_cov + model.resid_cov.transpose()).eval();

    model.spectral_radius = companion_spectral_radius(model.coeffs);
    model.stable = model.spectral_radius < 1.0;
    return model;
}

TimeSeriesPanel residuals(const VarModel& model, const TimeSeriesPanel& panel) {
    const Eigen::Index T = panel.rows();
    const Eigen::Index d = panel.cols();
    if (d != model.dim()) {
        throw Error(Errc::DimensionMismatch, "panel width does not match model");
    }
    if (T <= model.p) throw Error(Errc::DimensionMismatch, "panel has no rows beyond lag p");

    TimeSeriesPanel out;
    out.names = panel.names;
    out.dt = panel.dt;
    out.values.resize(T - model.p, d);
    for (Eigen::Index t = model.p; t < T; ++t) {
        Eigen::VectorXd pred = model.intercept;
        for (int l = 1; l <= model.p; ++l) {
            pred += model.coeffs[static_cast<std::size_t>(l - 1)] *
                    panel.values.row(t - l).transpose();
        }
        out.values.row(t - model.p) = panel.values.row(t) - pred.transpose();
    }
    return out;
}

}  // namespace svarfm
