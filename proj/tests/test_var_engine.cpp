#include <doctest.h>

#include "svarfm/core.hpp"
#include "svarfm/var_engine.hpp"

using namespace svarfm;

namespace {

// VAR(p) panel generated directly from the recursion.
TimeSeriesPanel gen_var(const std::vector<Eigen::MatrixXd>& coeffs, const Eigen::VectorXd& c,
                        double noise_sd, long T, std::uint64_t seed) {
    const Eigen::Index d = c.size();
    const int p = static_cast<int>(coeffs.size());
    Rng rng = make_rng(seed, 1);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(T + 100, d);
    for (long t = p; t < x.rows(); ++t) {
        Eigen::VectorXd v = c;
        for (int l = 1; l <= p; ++l) v += coeffs[static_cast<std::size_t>(l - 1)] * x.row(t - l).transpose();
        for (Eigen::Index j = 0; j < d; ++j) v(j) += noise_sd * n01(rng);
        x.row(t) = v.transpose();
    }
    TimeSeriesPanel panel;
    panel.values = x.bottomRows(T);
    for (Eigen::Index j = 0; j < d; ++j) panel.names.push_back("v" + std::to_string(j));
    return panel;
}

TimeSeriesPanel slope_panel() {
    TimeSeriesPanel p;
    p.values.resize(50, 1);
    for (int i = 0; i < 50; ++i) p.values(i, 0) = 0.1 * i;
    p.names = {"a"};
    return p;
}

}  // namespace

TEST_SUITE("var_engine") {

TEST_CASE("companion spectral radius on hand-solved systems") {
    Eigen::MatrixXd a(2, 2);
    a << 0.5, 0.2, 0.1, 0.3;
    // eigenvalues (0.8 +/- sqrt(0.12)) / 2
    CHECK(companion_spectral_radius({a}) == doctest::Approx(0.57320508075688781).epsilon(1e-12));

    // scalar AR(2) x_t = 0.5 x_{t-1} + 0.24 x_{t-2}: roots 0.8 and -0.3
    Eigen::MatrixXd a1(1, 1), a2(1, 1);
    a1 << 0.5;
    a2 << 0.24;
    CHECK(companion_spectral_radius({a1, a2}) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("fit_var recovers the generating VAR(1)") {
    Eigen::MatrixXd a(2, 2);
    a << 0.5, 0.2, -0.1, 0.3;
    Eigen::VectorXd c(2);
    c << 1.0, -0.5;
    const TimeSeriesPanel panel = gen_var({a}, c, 0.3, 4000, 5);

    const VarModel m = fit_var(panel, 4);
    CHECK(m.p == 1);
    CHECK(m.method == FitMethod::OLS);
    REQUIRE(m.coeffs.size() == 1);
    CHECK((m.coeffs[0] - a).cwiseAbs().maxCoeff() < 0.05);
    CHECK((m.intercept - c).cwiseAbs().maxCoeff() < 0.1);
    CHECK(m.stable);
    CHECK(m.spectral_radius < 1.0);
    CHECK(m.bic_by_lag.size() == 4);
    // residual covariance close to the generating 0.09 I
    CHECK(m.resid_cov(0, 0) == doctest::Approx(0.09).epsilon(0.15));
    CHECK(m.resid_cov(0, 1) == doctest::Approx(0.0).scale(0.09).epsilon(0.15));
}

TEST_CASE("BIC selects the generating lag order") {
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(2, 2);
    a1 << 0.3, 0.0, 0.1, 0.2;
    Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(2, 2);
    a2 << 0.35, 0.1, 0.0, 0.3;  // strong second lag
    const TimeSeriesPanel panel = gen_var({a1, a2}, Eigen::VectorXd::Zero(2), 0.5, 3000, 9);

    const VarModel m = fit_var(panel, 5);
    CHECK(m.p == 2);
    // lag-2 BIC beats lag-1 on the same common sample
    CHECK(m.bic_by_lag[1] < m.bic_by_lag[0]);

    const TimeSeriesPanel white = gen_var({Eigen::MatrixXd::Zero(2, 2)},
                                          Eigen::VectorXd::Zero(2), 1.0, 3000, 10);
    CHECK(fit_var(white, 5).p == 1);  // never selects below 1
}

TEST_CASE("bic agrees across explicit and default common sample") {
    const TimeSeriesPanel panel = gen_var({0.4 * Eigen::MatrixXd::Identity(2, 2)},
                                          Eigen::VectorXd::Zero(2), 0.4, 500, 3);
    CHECK(bic(panel, 2, 2) == doctest::Approx(bic(panel, 2)).epsilon(1e-12));
    // larger holdout means fewer effective rows, so the values differ
    CHECK(bic(panel, 2, 10) != doctest::Approx(bic(panel, 2, 2)).epsilon(1e-9));
}

TEST_CASE("short wide panels fall back to ridge") {
    Rng rng = make_rng(4, 2);
    std::normal_distribution<double> n01;
    TimeSeriesPanel panel;
    panel.values.resize(9, 6);
    for (Eigen::Index i = 0; i < 9; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) panel.values(i, j) = n01(rng);
    for (int j = 0; j < 6; ++j) panel.names.push_back("v" + std::to_string(j));

    const VarModel m = fit_var(panel, 2);
    CHECK(m.method == FitMethod::Ridge);
    CHECK(m.ridge_lambda > 0.0);
    CHECK(m.coeffs[0].allFinite());

    VarFitOptions opts;
    opts.force_ridge = true;
    const TimeSeriesPanel big = gen_var({0.3 * Eigen::MatrixXd::Identity(2, 2)},
                                        Eigen::VectorXd::Zero(2), 0.5, 400, 6);
    CHECK(fit_var(big, 2, opts).method == FitMethod::Ridge);
}

TEST_CASE("residuals reconstruct the panel under the fitted model") {
    Eigen::MatrixXd a(2, 2);
    a << 0.4, 0.1, 0.0, 0.5;
    const TimeSeriesPanel panel = gen_var({a}, Eigen::VectorXd::Zero(2), 0.3, 600, 7);
    const VarModel m = fit_var(panel, 1);
    const TimeSeriesPanel res = residuals(m, panel);
    REQUIRE(res.values.rows() == panel.values.rows() - 1);
    CHECK(res.names == panel.names);

    // row t of the residual panel is x_t minus the one-step prediction
    const long t = 17;
    const Eigen::VectorXd pred =
        m.intercept + m.coeffs[0] * panel.values.row(t - 1).transpose();
    const Eigen::VectorXd manual = panel.values.row(t).transpose() - pred;
    CHECK((res.values.row(t - 1).transpose() - manual).cwiseAbs().maxCoeff() < 1e-10);

    // residual mean near zero under an intercept fit
    CHECK(std::abs(res.values.col(0).mean()) < 1e-8);
}

TEST_CASE("unstable dynamics are flagged") {
    Eigen::MatrixXd a(1, 1);
    a << 1.05;
    TimeSeriesPanel panel;
    panel.values.resize(60, 1);
    double x = 0.1;
    Rng rng = make_rng(12, 3);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 60; ++t) {
        panel.values(t, 0) = x;
        x = 1.05 * x + 0.01 * n01(rng);
    }
    panel.names = {"v0"};
    const VarModel m = fit_var(panel, 1);
    CHECK(m.spectral_radius > 1.0);
    CHECK(!m.stable);
}

TEST_CASE("structural rotations leave the reduced form invariant") {
    // B0 x_t = B1 x_{t-1} + eps, reduced form Phi = B0^-1 B1 with
    // innovation covariance B0^-1 S B0^-T. Rotating the structure as
    // (Q B0, Q B1, Q S Q^T) reproduces both exactly.
    Eigen::MatrixXd b0(3, 3);
    b0 << 1, 0, 0, 0.6, 1, 0, -0.2, 0.4, 1;
    Eigen::MatrixXd b1(3, 3);
    b1 << 0.3, 0.1, 0.0, -0.2, 0.4, 0.1, 0.05, 0.0, 0.25;
    Eigen::MatrixXd s = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();

    const double th = 0.52;
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
    q(0, 0) = std::cos(th);
    q(0, 1) = -std::sin(th);
    q(1, 0) = std::sin(th);
    q(1, 1) = std::cos(th);

    const Eigen::MatrixXd phi = b0.inverse() * b1;
    const Eigen::MatrixXd su = b0.inverse() * s * b0.inverse().transpose();

    const Eigen::MatrixXd b0r = q * b0;
    const Eigen::MatrixXd b1r = q * b1;
    const Eigen::MatrixXd sr = q * s * q.transpose();
    CHECK((b0r.inverse() * b1r - phi).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b0r.inverse() * sr * b0r.inverse().transpose() - su).cwiseAbs().maxCoeff() < 1e-12);

    // rotating on the wrong side breaks the innovation covariance:
    // with B0 = I, S = diag(1,2) and a 45-degree Q, the pair
    // (B0 Q, Q^T S Q) implies a different reduced-form covariance.
    Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd s2 = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    const double h = std::acos(-1.0) / 4.0;
    Eigen::MatrixXd q2(2, 2);
    q2 << std::cos(h), -std::sin(h), std::sin(h), std::cos(h);
    const Eigen::MatrixXd wrong_b0 = i2 * q2;
    const Eigen::MatrixXd wrong_s = q2.transpose() * s2 * q2;
    const Eigen::MatrixXd implied =
        wrong_b0.inverse() * wrong_s * wrong_b0.inverse().transpose();
    CHECK((implied - s2).cwiseAbs().maxCoeff() > 0.4);
}

TEST_CASE("degenerate inputs are rejected") {
    TimeSeriesPanel tiny;
    tiny.values.resize(2, 2);
    tiny.values << 1, 2, 3, 4;
    tiny.names = {"a", "b"};
    CHECK_THROWS_AS(fit_var(tiny, 3), Error);
    CHECK_THROWS_AS(fit_var(slope_panel(), 0), Error);
}

}  // TEST_SUITE
