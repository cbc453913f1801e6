#include <doctest.h>

#include "svarfm/dag_project.hpp"

using namespace svarfm;

TEST_SUITE("dag_project") {

TEST_CASE("acyclicity measure on hand-solved matrices") {
    // unit 2-cycle: tr exp([[0,1],[1,0]] o itself) = 2 cosh(1)
    Eigen::MatrixXd w(2, 2);
    w << 0, 1, 1, 0;
    CHECK(h_acyclicity(w) == doctest::Approx(1.0861612696304874).epsilon(1e-12));

    const Eigen::MatrixXd g = h_gradient(w);
    CHECK(g(0, 1) == doctest::Approx(2.3504023872876028).epsilon(1e-12));  // 2 sinh(1)
    CHECK(g(1, 0) == doctest::Approx(2.3504023872876028).epsilon(1e-12));
    CHECK(g(0, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    Eigen::MatrixXd w2(2, 2);
    w2 << 0, 0.8, 0.3, 0;
    CHECK(h_acyclicity(w2) == doctest::Approx(0.057877011387958088).epsilon(1e-12));

    // any triangular matrix is exactly acyclic
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(4, 4);
    tri(0, 1) = 2.0;
    tri(0, 2) = -1.5;
    tri(1, 3) = 0.7;
    CHECK(std::abs(h_acyclicity(tri)) < 1e-12);
    CHECK(h_gradient(tri).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(h_acyclicity(Eigen::MatrixXd::Zero(2, 3)), Error);
    CHECK_THROWS_AS(project_dag(Eigen::MatrixXd::Zero(0, 0), {}), Error);
}

TEST_CASE("gradient matches central differences") {
    Eigen::MatrixXd w(3, 3);
    w << 0, 0.5, -0.2, 0.3, 0, 0.4, 0.1, -0.6, 0;
    const Eigen::MatrixXd g = h_gradient(w);
    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Eigen::MatrixXd wp = w, wm = w;
            wp(i, j) += eps;
            wm(i, j) -= eps;
            const double num = (h_acyclicity(wp) - h_acyclicity(wm)) / (2 * eps);
            CHECK(g(i, j) == doctest::Approx(num).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("projection breaks a 2-cycle by dropping the weaker arc") {
    Eigen::MatrixXd w0(2, 2);
    w0 << 0, 0.8, 0.3, 0;
    const DagProjectResult r = project_dag(w0);
    CHECK(r.converged);
    CHECK(r.h_final <= 1e-8);
    CHECK(r.w(0, 1) == doctest::Approx(0.8).epsilon(0.35));
    CHECK(r.w(1, 0) == 0.0);
    CHECK(!topological_order(r.w, 0.0).empty());
    CHECK(r.outer_iters >= 1);
    CHECK(!r.h_trace.empty());
}

TEST_CASE("an acyclic input passes through nearly unchanged") {
    Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(3, 3);
    w0(0, 1) = 0.7;
    w0(1, 2) = -0.5;
    w0(0, 2) = 0.3;
    const DagProjectResult r = project_dag(w0);
    CHECK(r.converged);
    CHECK(r.h_final <= 1e-8);
    CHECK((r.w - w0).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("an exactly symmetric cycle resolves deterministically") {
    Eigen::MatrixXd w0(2, 2);
    w0 << 0, 0.5, 0.5, 0;
    const DagProjectResult a = project_dag(w0);
    const DagProjectResult b = project_dag(w0);
    CHECK(a.h_final <= 1e-8);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
    // exactly one direction survives
    const bool up = a.w(0, 1) != 0.0;
    const bool down = a.w(1, 0) != 0.0;
    CHECK(up != down);
}

TEST_CASE("random dense matrices all reach an acyclic projection") {
    Rng rng = make_rng(7, 70);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd w0 = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (i != j && u(rng) > 0.0) w0(i, j) = u(rng);
        const DagProjectResult r = project_dag(w0);
        CHECK(r.h_final <= 1e-8);
        CHECK(!topological_order(r.w, 0.0).empty());
        CHECK(r.w.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("non-convergence is reported through the flag, not thrown") {
    Eigen::MatrixXd w0(3, 3);
    w0 << 0, 2, 2, 2, 0, 2, 2, 2, 0;
    DagProjectOptions opts;
    opts.max_outer = 1;
    opts.max_inner = 2;
    opts.h_tol = 1e-14;
    DagProjectResult r;
    CHECK_NOTHROW(r = project_dag(w0, opts));
    CHECK(!r.converged);
    // the fallback strip still leaves an acyclic thresholded matrix
    CHECK(!topological_order(r.w, 0.0).empty());
}

TEST_CASE("project_graph rewrites lag-0 weights and keeps lags intact") {
    CausalGraph g;
    g.d = 2;
    g.edges.push_back({0, 1, 0, 0.8, 0.1, 0.001});
    g.edges.push_back({1, 0, 0, 0.3, 0.1, 0.02});
    g.edges.push_back({1, 0, 1, 0.6, 0.1, 0.001});  // lagged feedback is fine

    const CausalGraph p = project_graph(g);
    CHECK(p.dag_mode);
    CHECK(p.has_edge(0, 1, 0));
    CHECK(!p.has_edge(1, 0, 0));
    REQUIRE(p.find_edge(1, 0, 1) != nullptr);
    CHECK(p.find_edge(1, 0, 1)->weight == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_NOTHROW(validate_graph(p));
}

}  // TEST_SUITE
