#include <doctest.h>

#include <cstdio>

#include "svarfm/flow_match.hpp"
#include "svarfm/simulators.hpp"

using namespace svarfm;

namespace {

// x1 = slope * c + eps, a teacher the flow should reproduce conditionally.
void linear_teacher(long n, double slope, double noise, std::uint64_t seed,
                    Eigen::MatrixXd& x1, Eigen::MatrixXd& cond) {
    Rng rng = make_rng(seed, 60);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<int> pick(0, 1);
    x1.resize(n, 1);
    cond.resize(n, 1);
    for (long i = 0; i < n; ++i) {
        const double c = pick(rng);
        cond(i, 0) = c;
        x1(i, 0) = slope * c + noise * n01(rng);
    }
}

}  // namespace

TEST_SUITE("flow_match") {

TEST_CASE("initialization is deterministic with the declared shapes") {
    CfmConfig cfg;
    cfg.x_dim = 2;
    cfg.cond_dim = 3;
    cfg.hidden = 16;
    cfg.depth = 3;
    const CfmModel a = CfmModel::init(cfg, 5);
    const CfmModel b = CfmModel::init(cfg, 5);
    REQUIRE(a.layers.size() == 4);  // depth hidden layers + linear head
    CHECK(a.layers[0].w.rows() == 16);
    CHECK(a.layers[0].w.cols() == 2 + 1 + 3);  // x, t, cond
    CHECK(a.layers[3].w.rows() == 2);
    CHECK(a.layers[3].w.cols() == 16);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK((a.layers[l].w - b.layers[l].w).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.layers[l].b.cwiseAbs().maxCoeff() == 0.0);  // zero bias at start
    }
    const CfmModel c = CfmModel::init(cfg, 6);
    CHECK((a.layers[0].w - c.layers[0].w).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("single and batch velocity paths agree") {
    CfmConfig cfg;
    cfg.x_dim = 2;
    cfg.cond_dim = 1;
    cfg.hidden = 8;
    cfg.depth = 2;
    const CfmModel m = CfmModel::init(cfg, 9);
    Eigen::VectorXd x(2);
    x << 0.3, -1.1;
    Eigen::VectorXd c(1);
    c << 0.5;
    const Eigen::VectorXd v = m.velocity(x, 0.25, c);

    Eigen::MatrixXd xb(1, 2);
    xb.row(0) = x.transpose();
    Eigen::VectorXd tb(1);
    tb << 0.25;
    Eigen::MatrixXd cb(1, 1);
    cb << 0.5;
    const Eigen::MatrixXd vb = m.velocity_batch(xb, tb, cb);
    CHECK((vb.row(0).transpose() - v).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("analytic gradients match central differences") {
    CfmConfig cfg;
    cfg.x_dim = 1;
    cfg.cond_dim = 1;
    cfg.hidden = 12;
    cfg.depth = 2;
    cfg.batch = 32;
    const CfmModel m = CfmModel::init(cfg, 3);
    Eigen::MatrixXd x1, cond;
    linear_teacher(64, 2.0, 0.3, 8, x1, cond);
    CHECK(gradient_check(m, x1, cond, 21) < 1e-4);
}

TEST_CASE("training reduces the flow-matching loss") {
    CfmConfig cfg;
    cfg.x_dim = 1;
    cfg.cond_dim = 1;
    cfg.hidden = 24;
    cfg.depth = 2;
    cfg.steps = 800;
    cfg.batch = 64;
    CfmModel m = CfmModel::init(cfg, 2);
    Eigen::MatrixXd x1, cond;
    linear_teacher(1500, 2.0, 0.2, 4, x1, cond);
    const TrainStats st = train_cfm(m, x1, cond, 11);
    REQUIRE(st.loss_trace.size() >= 2);
    CHECK(st.final_loss < st.loss_trace.front() * 0.8);
    CHECK(std::isfinite(st.final_loss));

    // optimal-transport pairing also trains cleanly
    CfmConfig ot = cfg;
    ot.ot_pairing = true;
    ot.steps = 200;
    CfmModel mo = CfmModel::init(ot, 2);
    CHECK_NOTHROW(train_cfm(mo, x1, cond, 12));
}

TEST_CASE("sampling is reproducible and identical across serial and parallel") {
    CfmConfig cfg;
    cfg.x_dim = 1;
    cfg.cond_dim = 1;
    cfg.hidden = 16;
    cfg.depth = 2;
    cfg.steps = 400;
    CfmModel m = CfmModel::init(cfg, 7);
    Eigen::MatrixXd x1, cond;
    linear_teacher(1000, 1.0, 0.3, 5, x1, cond);
    train_cfm(m, x1, cond, 6);

    Eigen::VectorXd c(1);
    c << 1.0;
    const Eigen::MatrixXd s1 = sample_flow(m, c, 200, 40, 30);
    const Eigen::MatrixXd s2 = sample_flow(m, c, 200, 40, 30);
    const Eigen::MatrixXd s3 = sample_flow_serial(m, c, 200, 40, 30);
    CHECK((s1 - s2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1 - s3).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1 - sample_flow(m, c, 200, 40, 31)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("conditional generation reproduces the teacher's effect") {
    CfmConfig cfg;
    cfg.x_dim = 1;
    cfg.cond_dim = 1;
    cfg.hidden = 32;
    cfg.depth = 2;
    cfg.steps = 2500;
    cfg.batch = 128;
    CfmModel m = CfmModel::init(cfg, 13);
    Eigen::MatrixXd x1, cond;
    linear_teacher(4000, 3.0, 0.3, 14, x1, cond);
    train_cfm(m, x1, cond, 15);

    Eigen::VectorXd hi(1), lo(1);
    hi << 1.0;
    lo << 0.0;
    const EffectEstimate ace = flow_ace(m, hi, lo, 0, 2000, 50, 200, 16);
    CHECK(ace.point == doctest::Approx(3.0).epsilon(0.15));
    CHECK(ace.se > 0.0);
    CHECK(ace.se < 0.2);
}

TEST_CASE("model JSON round trip preserves the field exactly") {
    CfmConfig cfg;
    cfg.x_dim = 2;
    cfg.cond_dim = 1;
    cfg.hidden = 8;
    cfg.depth = 2;
    const CfmModel m = CfmModel::init(cfg, 19);
    const std::string path = "flow_roundtrip.json";
    save_model(m, path);
    const CfmModel back = load_model(path);
    std::remove(path.c_str());

    CHECK(back.cfg.x_dim == 2);
    CHECK(back.cfg.hidden == 8);
    REQUIRE(back.layers.size() == m.layers.size());
    Eigen::VectorXd x(2);
    x << 0.4, -0.2;
    Eigen::VectorXd c(1);
    c << 0.9;
    CHECK((back.velocity(x, 0.5, c) - m.velocity(x, 0.5, c)).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(model_from_json("{]"), Error);
    CHECK_THROWS_AS(load_model("no_such_model.json"), Error);
}

TEST_CASE("pairwise generative screen scores the chain direction") {
    const SimulatorSpec spec = linear_svar_spec(
        Eigen::MatrixXd::Zero(2, 2),
        {(Eigen::MatrixXd(2, 2) << 0.4, 0.0, 0.7, 0.2).finished()}, 0.5);
    const TimeSeriesPanel panel = simulate_observational(spec, 500, 25);
    const Eigen::MatrixXd s = flow_ace_matrix(panel, 400, 26);
    CHECK(s.rows() == 2);
    CHECK(s.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.array() >= 0.0).all());
    CHECK(s(0, 1) > 0.0);
}

TEST_CASE("divergent training is reported as an error") {
    CfmConfig cfg;
    cfg.x_dim = 1;
    cfg.cond_dim = 1;
    cfg.hidden = 8;
    cfg.depth = 2;
    cfg.steps = 400;
    cfg.lr = 1e6;  // absurd step size
    CfmModel m = CfmModel::init(cfg, 1);
    Eigen::MatrixXd x1, cond;
    linear_teacher(300, 2.0, 0.3, 2, x1, cond);
    try {
        train_cfm(m, x1, cond, 3);
        // a lucky escape is acceptable; the loss must at least be finite
        CHECK(std::isfinite(m.layers[0].w(0, 0)));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Divergence);
    }
}

}  // TEST_SUITE
