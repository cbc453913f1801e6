#include "svarfm/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

namespace svarfm {

namespace {

constexpr std::uint64_t kTagForward = 401;
constexpr std::uint64_t kTagHard = 402;
constexpr std::uint64_t kTagSoft = 403;
constexpr std::uint64_t kTagGrid = 404;

}  // namespace

std::vector<double> design_grid(double low, double high, int m, GridKind kind,
                                std::uint64_t seed) {
    if (!(low < high)) throw Error(Errc::BadRange, "grid needs low < high");
    if (m < 2) throw Error(Errc::BadRange, "grid needs at least 2 points");
    std::vector<double> out(static_cast<std::size_t>(m));
    if (kind == GridKind::Uniform) {
        for (int i = 0; i < m; ++i) {
            out[static_cast<std::size_t>(i)] = low + (high - low) * i / (m - 1);
        }
        return out;
    }
    Rng rng = make_rng(seed, kTagGrid);
    const double width = (high - low) / m;
    for (int i = 0; i < m; ++i) {
        std::uniform_real_distribution<double> u(low + i * width, low + (i + 1) * width);
        out[static_cast<std::size_t>(i)] = u(rng);
    }
    std::sort(out.begin(), out.end());
    return out;
}

InterventionDataset var_forward_do(const VarModel& model, const TimeSeriesPanel& panel,
                                   const std::string& target, const std::vector<double>& values,
                                   long M, std::uint64_t seed, VarForwardOptions opts) {
    const Eigen::Index d = model.dim();
    const Eigen::Index j = panel.col_index(target);
    if (j < 0) throw Error(Errc::InvalidTarget, "target not a panel column: " + target);
    if (panel.cols() != d) throw Error(Errc::DimensionMismatch, "panel and model dimension differ");
    if (values.empty()) throw Error(Errc::BadRange, "empty value grid");
    if (M < 1) throw Error(Errc::InvalidSpec, "M must be >= 1");
    if (opts.horizon < 1) throw Error(Errc::InvalidSpec, "horizon must be >= 1");

    const TimeSeriesPanel resid = residuals(model, panel);
    const Eigen::Index n_res = resid.rows();
    if (n_res < 1) throw Error(Errc::TooShort, "no residual rows available");

    const double mu = panel.values.col(j).mean();
    const double sd = stddev_of(panel.values.col(j));
    const double lo = mu - opts.clip_sigma * sd;
    const double hi = mu + opts.clip_sigma * sd;

    const int p = model.p;
    const Eigen::Index T = panel.rows();
    if (T < p) throw Error(Errc::TooShort, "panel shorter than model order");

    InterventionDataset ds;
    ds.target = target;
    ds.names = panel.names;
    ds.provenance = Provenance::VarForward;
    ds.seed = seed;
    for (double v_req : values) {
        const double v = std::clamp(v_req, lo, hi);
        ds.values.push_back(v);
        Eigen::MatrixXd block(M, d);
        for (long m = 0; m < M; ++m) {
            Rng rng = make_rng(seed, kTagForward, static_cast<std::uint64_t>(m));
            std::uniform_int_distribution<Eigen::Index> pick(0, n_res - 1);
            // Lag buffer: row 0 is the most recent observation.
            Eigen::MatrixXd lags(p, d);
            for (int l = 0; l < p; ++l) lags.row(l) = panel.values.row(T - 1 - l);
            lags(0, j) = v;
            Eigen::VectorXd x(d);
            for (int h = 0; h < opts.horizon; ++h) {
                x = model.intercept;
                for (int l = 0; l < p; ++l) {
                    x += model.coeffs[static_cast<std::size_t>(l)] * lags.row(l).transpose();
                }
                x += resid.values.row(pick(rng)).transpose();
                x(j) = v;
                for (int l = p - 1; l > 0; --l) lags.row(l) = lags.row(l - 1);
                if (p > 0) lags.row(0) = x.transpose();
            }
            block.row(m) = x.transpose();
        }
        ds.outcomes.push_back(std::move(block));
    }
    return validate_intervention_dataset(std::move(ds));
}

InterventionDataset dgp_hard_do(const SimulatorSpec& spec, const std::string& target,
                                std::uint64_t seed, DgpHardOptions opts) {
    validate_spec(spec);
    if (opts.T < 2 || opts.T_ref < 2) throw Error(Errc::InvalidSpec, "T and T_ref must be >= 2");

    const TimeSeriesPanel ref =
        simulate_observational(spec, opts.T_ref, derive_seed(seed, kTagHard, 1));
    // The clamp level is defined on the target's own observational scale; for
    // latent intervenables (no panel column) fall back to the recorded columns'
    // nearest proxy: the battery temperature ramp midpoint.
    double mu, sd;
    const Eigen::Index j = ref.col_index(target);
    if (j >= 0) {
        mu = ref.values.col(j).mean();
        sd = stddev_of(ref.values.col(j));
    } else if (spec.variant == SimVariant::ArrheniusBattery && target == "T") {
        mu = 0.5 * (spec.param("t_low", 25.0) + spec.param("t_high", 45.0));
        sd = 0.5 * (spec.param("t_high", 45.0) - spec.param("t_low", 25.0)) / std::sqrt(3.0);
    } else {
        throw Error(Errc::InvalidTarget, "target has no observational scale: " + target);
    }
    const double value = mu + opts.level_sigma * sd;

    DoRequest req;
    req.target = target;
    req.value = value;
    req.mode = DoMode::AllSteps;
    req.horizon = static_cast<int>(opts.T);

    // One long clamped run, all rows recorded: simulate M=T nested draws would
    // discard the within-trajectory structure the severance checks need, so we
    // run a single trajectory here and expose its rows as the outcome block.
    const std::vector<std::string> cols = variable_names(spec);
    InterventionDataset ds;
    ds.target = target;
    ds.values = {value};
    ds.names = cols;
    ds.provenance = Provenance::DgpHard;
    ds.seed = seed;

    // Reuse the simulator's clamped-trajectory machinery by asking for the
    // final row at increasing horizons would be quadratic; instead drive one
    // do-run per recorded row via the grid helper when cheap, or sample rows
    // from independent clamped trajectories for event-style variants.
    if (spec.variant == SimVariant::HeitlerMatthews) {
        InterventionDataset one = simulate_do(spec, req, opts.T, derive_seed(seed, kTagHard, 2));
        ds.outcomes = std::move(one.outcomes);
        return validate_intervention_dataset(std::move(ds));
    }

    SimulatorSpec clamped = spec;
    InterventionDataset probe = simulate_do(spec, req, 1, derive_seed(seed, kTagHard, 3));
    (void)probe;  // validates target/range up front with simulator semantics

    // Run the clamped trajectory directly through the observational path of a
    // spec whose mechanism for `target` is replaced by the constant. For
    // variants where that substitution is not expressible through phi, fall
    // back to independent final-row draws at staggered horizons.
    Eigen::MatrixXd rows(opts.T, static_cast<Eigen::Index>(cols.size()));
    const std::uint64_t run_seed = derive_seed(seed, kTagHard, 4);
    bool direct = false;
    switch (spec.variant) {
        case SimVariant::ArrheniusBattery:
            if (target == "T") {
                clamped.phi["t_low"] = value;
                clamped.phi["t_high"] = value + 1e-9;
                clamped.phi["sd_t"] = 0.0;
                direct = true;
            }
            break;
        default:
            break;
    }
    if (direct) {
        const TimeSeriesPanel run = simulate_observational(clamped, opts.T, run_seed);
        rows = run.values;
    } else {
        for (long t = 0; t < opts.T; ++t) {
            DoRequest r = req;
            r.horizon = static_cast<int>(t + 1);
            InterventionDataset one = simulate_do(spec, r, 1, run_seed);
            rows.row(t) = one.outcomes[0].row(0);
        }
    }
    ds.outcomes.push_back(std::move(rows));
    return validate_intervention_dataset(std::move(ds));
}

InterventionDataset ode_soft_do(const SimulatorSpec& spec, const std::string& target,
                                double value, double lambda, long T, std::uint64_t seed) {
    validate_spec(spec);
    if (spec.variant != SimVariant::OdeSystem) {
        throw Error(Errc::UnsupportedVariant, "soft interventions require an ODE system");
    }
    if (T < 2) throw Error(Errc::InvalidSpec, "T must be >= 2");
    if (lambda <= 0.0) throw Error(Errc::InvalidSpec, "lambda must be positive");

    const std::vector<std::string> cols = variable_names(spec);
    Eigen::Index vi = -1;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] == target) vi = static_cast<Eigen::Index>(k);
    }
    if (vi < 0) throw Error(Errc::InvalidTarget, "target not an ODE coordinate: " + target);

    InterventionDataset ds;
    ds.target = target;
    ds.values = {value};
    ds.names = cols;
    ds.provenance = Provenance::OdeSoft;
    ds.seed = seed;

    auto soft_rhs = [&](const Eigen::Vector3d& s) {
        Eigen::Vector3d d = ode_derivative(spec, s);
        d(vi) += lambda * (value - s(vi));
        return d;
    };
    auto rk4 = [&](Eigen::Vector3d& s, double dt) {
        const Eigen::Vector3d k1 = soft_rhs(s);
        const Eigen::Vector3d k2 = soft_rhs(s + 0.5 * dt * k1);
        const Eigen::Vector3d k3 = soft_rhs(s + 0.5 * dt * k2);
        const Eigen::Vector3d k4 = soft_rhs(s + dt * k3);
        s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!s.allFinite()) throw Error(Errc::IntegrationFailure, "soft do diverged");
    };

    Rng rng = make_rng(seed, kTagSoft);
    std::normal_distribution<double> n(0.0, 1.0);
    const double dt = spec.param("dt", 0.01);
    Eigen::Vector3d st(1.0, 1.0, 1.0);
    if (spec.ode_system == "rossler") st << 1.0, 1.0, 0.0;
    for (int k = 0; k < 3; ++k) st(k) += 0.01 * n(rng);
    for (long b = 0; b < 1000; ++b) rk4(st, dt);  // forced burn-in
    Eigen::MatrixXd rows(T, 3);
    for (long t = 0; t < T; ++t) {
        rk4(st, dt);
        rows.row(t) = st.transpose();
    }
    ds.outcomes.push_back(std::move(rows));
    return validate_intervention_dataset(std::move(ds));
}

void write_intervention_dataset(const InterventionDataset& ds, const std::string& csv_path,
                                const std::string& manifest_path) {
    validate_intervention_dataset(ds);
    std::ofstream csv(csv_path);
    if (!csv) throw Error(Errc::ParseError, "cannot write " + csv_path);
    csv.precision(std::numeric_limits<double>::max_digits10);
    csv << "value";
    for (const auto& n : ds.names) csv << "," << n;
    csv << "\n";
    for (std::size_t vi = 0; vi < ds.values.size(); ++vi) {
        const Eigen::MatrixXd& block = ds.outcomes[vi];
        for (Eigen::Index r = 0; r < block.rows(); ++r) {
            csv << ds.values[vi];
            for (Eigen::Index c = 0; c < block.cols(); ++c) csv << "," << block(r, c);
            csv << "\n";
        }
    }

    nlohmann::json j;
    j["format"] = "svarfm-intervention";
    j["version"] = 1;
    j["target"] = ds.target;
    j["provenance"] = provenance_name(ds.provenance);
    j["seed"] = ds.seed;
    j["names"] = ds.names;
    j["values"] = ds.values;
    std::vector<long> rows_per_value;
    for (const auto& b : ds.outcomes) rows_per_value.push_back(static_cast<long>(b.rows()));
    j["rows_per_value"] = rows_per_value;
    std::ofstream mf(manifest_path);
    if (!mf) throw Error(Errc::ParseError, "cannot write " + manifest_path);
    mf << j.dump(2) << "\n";
}

InterventionDataset read_intervention_dataset(const std::string& csv_path,
                                              const std::string& manifest_path) {
    std::ifstream mf(manifest_path);
    if (!mf) throw Error(Errc::ParseError, "cannot open " + manifest_path);
    nlohmann::json j;
    try {
        mf >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::ParseError, std::string("bad manifest: ") + e.what());
    }
    if (j.value("format", "") != "svarfm-intervention") {
        throw Error(Errc::ParseError, "not an intervention manifest: " + manifest_path);
    }
    InterventionDataset ds;
    ds.target = j.at("target").get<std::string>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.names = j.at("names").get<std::vector<std::string>>();
    ds.values = j.at("values").get<std::vector<double>>();
    const std::string prov = j.at("provenance").get<std::string>();
    bool found = false;
    for (Provenance p : {Provenance::SimulatorDo, Provenance::VarForward, Provenance::DgpHard,
                         Provenance::OdeSoft}) {
        if (prov == provenance_name(p)) {
            ds.provenance = p;
            found = true;
        }
    }
    if (!found) throw Error(Errc::ParseError, "unknown provenance: " + prov);
    const std::vector<long> rows_per_value = j.at("rows_per_value").get<std::vector<long>>();
    if (rows_per_value.size() != ds.values.size()) {
        throw Error(Errc::ParseError, "manifest rows_per_value length mismatch");
    }

    TimeSeriesPanel raw = read_panel_csv(csv_path);
    const Eigen::Index d = static_cast<Eigen::Index>(ds.names.size());
    if (raw.cols() != d + 1 || raw.names.empty() || raw.names[0] != "value") {
        throw Error(Errc::ParseError, "intervention CSV layout mismatch: " + csv_path);
    }
    Eigen::Index row = 0;
    for (std::size_t vi = 0; vi < ds.values.size(); ++vi) {
        const long n = rows_per_value[vi];
        if (row + n > raw.rows()) throw Error(Errc::ParseError, "intervention CSV truncated");
        ds.outcomes.push_back(raw.values.block(row, 1, n, d));
        row += n;
    }
    if (row != raw.rows()) throw Error(Errc::ParseError, "intervention CSV has extra rows");
    return validate_intervention_dataset(std::move(ds));
}

}  // namespace svarfm
