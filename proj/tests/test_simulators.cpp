#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "svarfm/simulators.hpp"

using namespace svarfm;

TEST_SUITE("simulators") {

TEST_CASE("variant names round trip") {
    for (SimVariant v : {SimVariant::Dsge, SimVariant::ArrheniusBattery,
                         SimVariant::HeitlerMatthews, SimVariant::OdeSystem,
                         SimVariant::LinearSvar, SimVariant::FeedbackToy}) {
        CHECK(variant_from_name(variant_name(v)) == v);
    }
    CHECK_THROWS_AS(variant_from_name("nonsense"), Error);
}

TEST_CASE("dsge noise-free rate clamp matches the closed form") {
    SimulatorSpec spec = dsge_spec();
    spec.noise_scale = 0.0;

    DoRequest req;
    req.target = "i";
    req.value = 1.0;
    req.mode = DoMode::PointInTime;
    req.horizon = 1;
    const InterventionDataset ds = simulate_do(spec, req, 3, 77);

    REQUIRE(ds.outcomes.size() == 1);
    REQUIRE(ds.outcomes[0].rows() == 3);
    CHECK(ds.names == std::vector<std::string>{"y", "pi", "i"});
    // one step after do(i = 1) from the zero steady state:
    //   y  = -sigma            = -0.038
    //   pi = kappa * y         = -0.004332
    //   i  = rho_i + (1 - rho_i)(phi_pi pi + phi_y y)
    for (int m = 0; m < 3; ++m) {
        CHECK(ds.outcomes[0](m, 0) == doctest::Approx(-0.038).epsilon(1e-12));
        CHECK(ds.outcomes[0](m, 1) == doctest::Approx(-0.004332).epsilon(1e-12));
        CHECK(ds.outcomes[0](m, 2) == doctest::Approx(0.88079067416800005).epsilon(1e-12));
    }

    CHECK(true_effect(spec, "i", "pi").value() == doctest::Approx(-0.004332).epsilon(1e-15));
    CHECK(true_effect(spec, "i", "y").value() == doctest::Approx(-0.038).epsilon(1e-15));
    CHECK(true_effect(spec, "y", "pi").value() == doctest::Approx(0.114).epsilon(1e-15));
    CHECK(!true_effect(spec, "pi", "i").has_value());
    CHECK(oracle_horizon(spec, "i", "pi") == 1);
}

TEST_CASE("battery noise-free degradation path matches the recursion") {
    SimulatorSpec spec = battery_spec();
    spec.noise_scale = 0.0;
    const TimeSeriesPanel p = simulate_observational(spec, 500, 5);
    REQUIRE(p.values.rows() == 500);
    CHECK(p.names == std::vector<std::string>{"IR", "Cap"});

    // hand-integrated Arrhenius ramp, 25 C -> 45 C over 500 cycles
    CHECK(p.values(0, 0) == doctest::Approx(0.050519678992081894).epsilon(1e-10));
    CHECK(p.values(0, 1) == doctest::Approx(1.101448032100792).epsilon(1e-10));
    CHECK(p.values(249, 0) == doctest::Approx(0.23400400053778536).epsilon(1e-10));
    CHECK(p.values(249, 1) == doctest::Approx(1.0830995999462214).epsilon(1e-10));
    CHECK(p.values(499, 0) == doctest::Approx(0.58044016692659683).epsilon(1e-10));
    CHECK(p.values(499, 1) == doctest::Approx(1.0484559833073406).epsilon(1e-10));

    // confounded observational slope is about -0.10 while the structural
    // resistance-to-capacity coefficient is +0.03
    Eigen::MatrixXd ir = p.values.col(0);
    const LinFit f = ols_fit(ir, p.values.col(1), true);
    CHECK(f.beta(0) == doctest::Approx(-0.10).epsilon(0.01));
    CHECK(true_effect(spec, "IR", "Cap").value() == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(!true_effect(spec, "Cap", "IR").has_value());
}

TEST_CASE("battery temperature clamp severs the drift") {
    SimulatorSpec spec = battery_spec();
    DoRequest req;
    req.target = "T";
    req.value = 25.0;
    req.mode = DoMode::AllSteps;
    const InterventionDataset low = simulate_do(spec, req, 40, 21);
    req.value = 45.0;
    const InterventionDataset high = simulate_do(spec, req, 40, 21);
    // hotter cells age faster: higher resistance, lower capacity
    const double ir_low = low.outcomes[0].col(0).mean();
    const double ir_high = high.outcomes[0].col(0).mean();
    CHECK(ir_high > ir_low + 0.1);
    CHECK(high.outcomes[0].col(1).mean() < low.outcomes[0].col(1).mean());
    CHECK(std::find(intervenable_names(spec).begin(), intervenable_names(spec).end(),
                    "T") != intervenable_names(spec).end());
}

TEST_CASE("air shower closed forms at fixed energy") {
    // E = 1e17 eV, proton, sigma = 450 mb, noise off
    const HmShowerOut a = hm_shower(1e17, 1, 450.0, 3, 0.0);
    CHECK(a.x_max == doctest::Approx(763.31111227103679).epsilon(1e-12));
    CHECK(a.n_mu == doctest::Approx(494452.41645251564).epsilon(1e-12));

    const HmShowerOut b = hm_shower(1e17, 1, 550.0, 3, 0.0);
    CHECK(b.x_max == doctest::Approx(756.56167911891771).epsilon(1e-12));
    // muon count never reacts to the cross section
    CHECK(b.n_mu == a.n_mu);

    const HmShowerOut fe = hm_shower(1e17, 56, 450.0, 3, 0.0);
    CHECK(fe.n_mu == doctest::Approx(904383.66131410899).epsilon(1e-12));
    CHECK(fe.x_max < a.x_max);  // heavier primaries peak higher in the atmosphere

    CHECK_THROWS_AS(hm_shower(1e17, 1, 50.0, 3, 0.0), Error);
    CHECK_THROWS_AS(hm_shower(-1.0, 1, 450.0, 3, 0.0), Error);
}

TEST_CASE("cross-section clamp leaves the muon channel bit-identical") {
    const SimulatorSpec spec = heitler_matthews_spec();
    const InterventionDataset ds =
        simulate_do_grid(spec, "sigma_inel", {450.0, 550.0}, DoMode::AllSteps, 0, 300, 11);
    REQUIRE(ds.values.size() == 2);
    const Eigen::Index mu = ds.outcome_col("log_n_mu");
    const Eigen::Index xm = ds.outcome_col("x_max");
    // common random numbers: same seed, same draws, different clamp only
    CHECK((ds.outcomes[0].col(mu) - ds.outcomes[1].col(mu)).cwiseAbs().maxCoeff() == 0.0);
    // X_max shifts by K ln2 (1/550 - 1/450) per shower, exactly
    const double slope =
        (ds.outcomes[1].col(xm).mean() - ds.outcomes[0].col(xm).mean()) / 100.0;
    CHECK(slope == doctest::Approx(-0.067494331521190817).epsilon(1e-9));
    CHECK(true_effect(spec, "sigma_inel", "log_n_mu").value() == 0.0);
    // derivative of the elongation term at sigma = 500
    SimulatorSpec at500 = spec;
    at500.phi["sigma_inel"] = 500.0;
    CHECK(true_effect(at500, "sigma_inel", "x_max").value() ==
          doctest::Approx(-0.066819388205978728).epsilon(1e-12));
}

TEST_CASE("lorenz and rossler trajectories stay on the attractor") {
    for (const char* sys : {"lorenz", "rossler"}) {
        const SimulatorSpec spec = ode_spec(sys);
        const TimeSeriesPanel p = simulate_observational(spec, 800, 4);
        REQUIRE(p.values.rows() == 800);
        CHECK(p.names == std::vector<std::string>{"x", "y", "z"});
        CHECK(p.values.allFinite());
        CHECK(p.values.cwiseAbs().maxCoeff() < 100.0);
        // non-degenerate motion on every coordinate
        for (int j = 0; j < 3; ++j) CHECK(stddev_of(p.values.col(j)) > 0.01);
    }
    CHECK_THROWS_AS(simulate_observational(ode_spec("brusselator"), 100, 1), Error);

    const SimulatorSpec lor = ode_spec("lorenz");
    const Eigen::Vector3d d0 = ode_derivative(lor, Eigen::Vector3d(1.0, 2.0, 3.0));
    // sigma (y - x), x (rho - z) - y, x y - beta z at (1, 2, 3)
    CHECK(d0(0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(d0(1) == doctest::Approx(23.0).epsilon(1e-12));
    CHECK(d0(2) == doctest::Approx(2.0 - 8.0).epsilon(1e-12));
}

TEST_CASE("hard clamp pins the coordinate while others keep moving") {
    const SimulatorSpec spec = ode_spec("lorenz");
    DoRequest req;
    req.target = "x";
    req.value = 1.5;
    req.mode = DoMode::AllSteps;
    const InterventionDataset ds = simulate_do(spec, req, 30, 9);
    const Eigen::Index xc = ds.outcome_col("x");
    for (int m = 0; m < 30; ++m) CHECK(ds.outcomes[0](m, xc) == 1.5);
    // with x held, the (y, z) subsystem is stable and settles on the fixed
    // point y* = rho x / (1 + x^2/beta), z* = x y* / beta
    const double zs = 1.5 * (28.0 * 1.5 / (1.0 + 1.5 * 1.5 * 3.0 / 8.0)) * 3.0 / 8.0;
    CHECK(ds.outcomes[0].col(ds.outcome_col("z")).mean() ==
          doctest::Approx(zs).epsilon(0.01));

    // a short clamp window leaves the draws still spread out
    DoRequest brief = req;
    brief.horizon = 10;
    const InterventionDataset early = simulate_do(spec, brief, 30, 9);
    CHECK(stddev_of(early.outcomes[0].col(ds.outcome_col("z"))) > 0.01);
}

TEST_CASE("feedback toy settles and responds to the actuator") {
    SimulatorSpec spec = feedback_toy_spec();
    spec.noise_scale = 0.0;
    spec.phi["meal_prob"] = 0.0;
    const TimeSeriesPanel p = simulate_observational(spec, 10, 2);
    // deterministic contraction to the reference level
    CHECK(p.values.col(0).cwiseAbs().maxCoeff() == doctest::Approx(5.0).epsilon(1e-9));

    DoRequest req;
    req.target = "u";
    req.value = 1.0;
    req.mode = DoMode::PointInTime;
    req.horizon = 1;
    const InterventionDataset ds = simulate_do(spec, req, 2, 2);
    // x drops by a * u = -0.5 from the fixed point
    CHECK(ds.outcomes[0](0, ds.outcome_col("x")) == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(true_effect(spec, "u", "x").value() == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(oracle_horizon(spec, "u", "x") == 1);
}

TEST_CASE("linear chain effects follow the path products") {
    const SimulatorSpec spec = linear_chain_spec(3, 0.8);
    CHECK(true_effect(spec, "x0", "x1").value() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(true_effect(spec, "x0", "x2").value() == doctest::Approx(0.64).epsilon(1e-12));
    CHECK(true_effect(spec, "x1", "x2").value() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(true_effect(spec, "x1", "x0").value() == doctest::Approx(0.0).scale(1.0));
    CHECK(true_effect(spec, "x2", "x0").value() == doctest::Approx(0.0).scale(1.0));

    const TimeSeriesPanel p = simulate_observational(spec, 3000, 8);
    Eigen::MatrixXd x0 = p.values.col(0);
    const LinFit f = ols_fit(x0, p.values.col(1), true);
    CHECK(f.beta(0) == doctest::Approx(0.8).epsilon(0.1));

    // a cyclic contemporaneous matrix is rejected
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 1) = 0.5;
    bad(1, 0) = 0.5;
    CHECK_THROWS_AS(validate_spec(linear_svar_spec(bad)), Error);
}

TEST_CASE("severed mechanisms are visible in the fingerprint") {
    const SimulatorSpec spec = dsge_spec();
    const auto plain = mechanism_fingerprint(spec, std::nullopt);
    const auto cut = mechanism_fingerprint(spec, std::string("pi"));
    REQUIRE(plain.size() == 3);
    REQUIRE(cut.size() == 3);
    CHECK(cut[1].find("<clamped>") != std::string::npos);
    CHECK(cut[1] != plain[1]);
    CHECK(cut[0] == plain[0]);
    CHECK(cut[2] == plain[2]);
}

TEST_CASE("do draws are reproducible and value-independent in their noise") {
    const SimulatorSpec spec = linear_chain_spec(2, 1.0);
    DoRequest req;
    req.target = "x0";
    req.value = 2.0;
    req.mode = DoMode::PointInTime;
    req.horizon = 0;
    const InterventionDataset a = simulate_do(spec, req, 50, 31);
    const InterventionDataset b = simulate_do(spec, req, 50, 31);
    CHECK((a.outcomes[0] - b.outcomes[0]).cwiseAbs().maxCoeff() == 0.0);

    const InterventionDataset c = simulate_do(spec, req, 50, 32);
    CHECK((a.outcomes[0] - c.outcomes[0]).cwiseAbs().maxCoeff() > 0.0);

    // same stream under a different clamp: downstream difference is the
    // deterministic shift only
    req.value = 3.0;
    const InterventionDataset d = simulate_do(spec, req, 50, 31);
    const Eigen::VectorXd diff =
        d.outcomes[0].col(1) - a.outcomes[0].col(1);
    CHECK((diff.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("bias injection shifts exactly one outcome column") {
    SimulatorSpec spec = linear_chain_spec(2, 1.0);
    DoRequest req;
    req.target = "x0";
    req.value = 1.0;
    req.mode = DoMode::PointInTime;
    const InterventionDataset clean = simulate_do(spec, req, 30, 13);

    spec.bias_inject = BiasInject{"x1", 0.7};
    const InterventionDataset biased = simulate_do(spec, req, 30, 13);
    const Eigen::VectorXd shift = biased.outcomes[0].col(1) - clean.outcomes[0].col(1);
    CHECK((shift.array() - 0.7).abs().maxCoeff() < 1e-12);
    CHECK((biased.outcomes[0].col(0) - clean.outcomes[0].col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid do targets are rejected") {
    const SimulatorSpec spec = dsge_spec();
    DoRequest req;
    req.target = "unemployment";
    req.value = 1.0;
    CHECK_THROWS_AS(simulate_do(spec, req, 10, 1), Error);

    DoRequest soft;
    soft.target = "i";
    soft.value = 0.0;
    soft.mode = DoMode::Soft;
    CHECK_THROWS_AS(simulate_do(spec, soft, 10, 1), Error);  // soft mode is ODE-only
}

TEST_CASE("spec files round trip") {
    SimulatorSpec spec = battery_spec();
    spec.phi["t_low"] = 20.0;
    spec.noise_scale = 0.5;
    spec.bias_inject = BiasInject{"Cap", -0.1};
    const std::string path = "sim_spec_roundtrip.txt";
    write_spec_file(spec, path);
    const SimulatorSpec back = read_spec_file(path);
    CHECK(back.variant == SimVariant::ArrheniusBattery);
    CHECK(back.noise_scale == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(back.param("t_low", -1) == doctest::Approx(20.0).epsilon(1e-15));
    REQUIRE(back.bias_inject.has_value());
    CHECK(back.bias_inject->target == "Cap");
    CHECK(back.bias_inject->delta == doctest::Approx(-0.1).epsilon(1e-15));
    std::remove(path.c_str());

    SimulatorSpec chain = linear_chain_spec(3, 0.6);
    write_spec_file(chain, path);
    const SimulatorSpec chain_back = read_spec_file(path);
    CHECK(chain_back.b0.rows() == 3);
    CHECK((chain_back.b0 - chain.b0).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

}  // TEST_SUITE
