#include "svarfm/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace svarfm {

namespace {

constexpr double kGasConstant = 8.314462618;  // J/(mol K)
constexpr double kZeroCelsiusK = 273.15;

// RNG stream tags (first derivation slot), keeping purposes disjoint.
constexpr std::uint64_t kTagObs = 101;
constexpr std::uint64_t kTagDo = 202;
constexpr std::uint64_t kTagShower = 303;

struct ClampPlan {
    int var = -1;  // index into the variant's internal state list; -1 = none
    double value = 0.0;
    long start = 0;
    long end = std::numeric_limits<long>::max();

    bool on(long t) const { return var >= 0 && t >= start && t < end; }
};

double draw_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- DSGE: IS curve, Phillips curve, Taylor rule ----
// y_t = -sigma*i_{t-1} + rho_y*y_{t-1} + eps_y
// pi_t = kappa*y_t + rho_pi*pi_{t-1} + eps_pi
// i_t = rho_i*i_{t-1} + (1-rho_i)*(phi_pi*pi_t + phi_y*y_t) + eps_i

Eigen::MatrixXd run_dsge(const SimulatorSpec& spec, long total, long record_from,
                         const ClampPlan& cl, Rng& rng) {
    const double sigma = spec.param("sigma", 0.038);
    const double kappa = spec.param("kappa", 0.114);
    const double rho_i = spec.param("rho_i", 0.882);
    const double phi_pi = spec.param("phi_pi", 0.357);
    const double phi_y = spec.param("phi_y", 0.229);
    const double rho_y = spec.param("rho_y", 0.5);
    const double rho_pi = spec.param("rho_pi", 0.5);
    const double sd = spec.param("shock_sd", 0.1) * spec.noise_scale;
    // Policy surprises may be scaled separately from the demand/supply shocks;
    // they default to the common scale.
    const double sd_i = spec.param("shock_sd_i", spec.param("shock_sd", 0.1)) * spec.noise_scale;

    double y = 0.0, pi = 0.0, i = 0.0;
    Eigen::MatrixXd out(total - record_from, 3);
    for (long t = 0; t < total; ++t) {
        const double ey = draw_normal(rng) * sd;
        const double epi = draw_normal(rng) * sd;
        const double ei = draw_normal(rng) * sd_i;
        const bool c = cl.on(t);
        const double y_new = (c && cl.var == 0) ? cl.value : -sigma * i + rho_y * y + ey;
        const double pi_new = (c && cl.var == 1) ? cl.value : kappa * y_new + rho_pi * pi + epi;
        const double i_new = (c && cl.var == 2)
                                 ? cl.value
                                 : rho_i * i + (1.0 - rho_i) * (phi_pi * pi_new + phi_y * y_new) + ei;
        y = y_new;
        pi = pi_new;
        i = i_new;
        if (t >= record_from) out.row(t - record_from) << y, pi, i;
    }
    return out;
}

// ---- Arrhenius battery ----
// Latent T drifts t_low..t_high; k(T) = exp(-E_a/RT) normalized to k(35C)=1;
// SEI integrates kappa_sei*k; IR tracks SEI; Cap = cap0 - c1*SEI + c2*IR.
// Internal state order: T, SEI, IR, Cap. Recorded columns: IR, Cap.

Eigen::MatrixXd run_battery(const SimulatorSpec& spec, long total, long record_from,
                            const ClampPlan& cl, Rng& rng) {
    const double e_a = spec.param("e_a", 50000.0);
    const double a_scale = spec.param("a_scale", 1.0);
    const double t_low = spec.param("t_low", 25.0);
    const double t_high = spec.param("t_high", 45.0);
    const double drift_cycles = spec.param("drift_cycles", 500.0);
    const double kappa_sei = spec.param("kappa_sei", 0.002);
    const double ir0 = spec.param("ir0", 0.05);
    const double ir1 = spec.param("ir1", 0.5);
    const double cap0 = spec.param("cap0", 1.1);
    const double c1 = spec.param("c1", 0.065);
    const double c2 = spec.param("c2", 0.03);
    const double sd_t = spec.param("sd_t", 0.5) * spec.noise_scale;
    const double sd_sei = spec.param("sd_sei", 0.05) * spec.noise_scale;
    const double sd_ir = spec.param("sd_ir", 0.02) * spec.noise_scale;
    const double sd_cap = spec.param("sd_cap", 0.01) * spec.noise_scale;
    const double a_norm = a_scale * std::exp(e_a / (kGasConstant * (35.0 + kZeroCelsiusK)));

    double sei = 0.0;
    Eigen::MatrixXd out(total - record_from, 2);
    for (long t = 0; t < total; ++t) {
        const double et = draw_normal(rng);
        const double es = draw_normal(rng);
        const double eir = draw_normal(rng);
        const double ecap = draw_normal(rng);
        const bool c = cl.on(t);
        const double frac = drift_cycles > 1.0
                                ? std::min(1.0, static_cast<double>(t) / (drift_cycles - 1.0))
                                : 1.0;
        const double temp_c =
            (c && cl.var == 0) ? cl.value : t_low + (t_high - t_low) * frac + sd_t * et;
        const double k = a_norm * std::exp(-e_a / (kGasConstant * (temp_c + kZeroCelsiusK)));
        if (c && cl.var == 1) {
            sei = cl.value;
        } else {
            sei += kappa_sei * k * (1.0 + sd_sei * es);
        }
        const double ir = (c && cl.var == 2) ? cl.value : ir0 + ir1 * sei + sd_ir * eir;
        const double cap =
            (c && cl.var == 3) ? cl.value : cap0 - c1 * sei + c2 * ir + sd_cap * ecap;
        if (t >= record_from) out.row(t - record_from) << ir, cap;
    }
    return out;
}

// ---- Heitler-Matthews (event draws, no dynamics) ----

void hm_params(const SimulatorSpec& spec, double& k_air, double& d_elong, double& e_ref_ev,
               double& xi_c_pi_ev, double& beta) {
    k_air = spec.param("k_air", 2.41e4);          // mb g/cm^2
    d_elong = spec.param("d_elong", 36.7);        // g/cm^2 per ln(E)
    const double xi_c_e_gev = spec.param("xi_c_e_gev", 0.085);
    e_ref_ev = 3.0 * xi_c_e_gev * 1e9;            // 3 * electron critical energy
    xi_c_pi_ev = spec.param("xi_c_pi_gev", 20.0) * 1e9;
    beta = spec.param("beta", 0.85);
}

Eigen::MatrixXd run_hm(const SimulatorSpec& spec, long n_events, const ClampPlan& cl, Rng& rng,
                       std::uint64_t seed, std::uint64_t tag) {
    const double lo = spec.param("log10_e_min", 15.5);
    const double hi = spec.param("log10_e_max", 17.5);
    const int a_mass = static_cast<int>(spec.param("a_mass", 1.0));
    const double sigma0 = spec.param("sigma0", 450.0);
    const double sigma_slope = spec.param("sigma_slope", 40.0);
    const double sd_sigma = spec.param("sd_sigma", 20.0) * spec.noise_scale;

    Eigen::MatrixXd out(n_events, 3);
    for (long m = 0; m < n_events; ++m) {
        std::uniform_real_distribution<double> u(lo, hi);
        const double log10_e = u(rng);
        const double e_ev = std::pow(10.0, log10_e);
        double sigma;
        if (cl.var == 0 && cl.on(0)) {
            sigma = cl.value;
        } else {
            sigma = sigma0 + sigma_slope * (log10_e - 0.5 * (lo + hi)) + sd_sigma * draw_normal(rng);
            sigma = std::clamp(sigma, 100.0, 2000.0);
        }
        const HmShowerOut sh =
            hm_shower(e_ev, a_mass, sigma, derive_seed(seed, tag, static_cast<std::uint64_t>(m)),
                      spec.noise_scale);
        out.row(m) << sigma, sh.x_max, std::log10(sh.n_mu);
    }
    return out;
}

// ---- ODE systems (Lorenz, Roessler), fixed-step RK4 ----

Eigen::Vector3d ode_deriv(const SimulatorSpec& spec, const Eigen::Vector3d& s) {
    if (spec.ode_system == "lorenz") {
        const double sig = spec.param("sigma", 10.0);
        const double rho = spec.param("rho", 28.0);
        const double beta = spec.param("beta", 8.0 / 3.0);
        return {sig * (s(1) - s(0)), s(0) * (rho - s(2)) - s(1), s(0) * s(1) - beta * s(2)};
    }
    const double a = spec.param("a", 0.2);
    const double b = spec.param("b", 0.2);
    const double c = spec.param("c", 5.7);
    return {-s(1) - s(2), s(0) + a * s(1), b + s(2) * (s(0) - c)};
}

Eigen::Vector3d ode_rhs(const SimulatorSpec& spec, Eigen::Vector3d s, const ClampPlan& cl,
                        long t, double soft_lambda, bool soft) {
    if (cl.on(t) && !soft) s(cl.var) = cl.value;
    Eigen::Vector3d d = ode_deriv(spec, s);
    if (cl.on(t)) {
        if (soft) {
            d(cl.var) += soft_lambda * (cl.value - s(cl.var));
        } else {
            d(cl.var) = 0.0;
        }
    }
    return d;
}

void rk4_step(const SimulatorSpec& spec, Eigen::Vector3d& s, double dt, const ClampPlan& cl,
              long t, double soft_lambda, bool soft) {
    if (cl.on(t) && !soft) s(cl.var) = cl.value;
    const Eigen::Vector3d k1 = ode_rhs(spec, s, cl, t, soft_lambda, soft);
    const Eigen::Vector3d k2 = ode_rhs(spec, s + 0.5 * dt * k1, cl, t, soft_lambda, soft);
    const Eigen::Vector3d k3 = ode_rhs(spec, s + 0.5 * dt * k2, cl, t, soft_lambda, soft);
    const Eigen::Vector3d k4 = ode_rhs(spec, s + dt * k3, cl, t, soft_lambda, soft);
    s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!s.allFinite()) throw Error(Errc::IntegrationFailure, "ODE state became non-finite");
    if (cl.on(t) && !soft) s(cl.var) = cl.value;
}

Eigen::MatrixXd run_ode(const SimulatorSpec& spec, long total, long record_from,
                        const ClampPlan& cl, Rng& rng, double soft_lambda = 0.0,
                        bool soft = false) {
    const double dt = spec.param("dt", 0.01);
    const long every = static_cast<long>(spec.param("record_every", 1.0));
    const double sd_meas = spec.param("sd_meas", 0.0) * spec.noise_scale;

    Eigen::Vector3d s(1.0, 1.0, 1.0);
    if (spec.ode_system == "rossler") s << 1.0, 1.0, 0.0;
    for (int k = 0; k < 3; ++k) s(k) += 0.01 * draw_normal(rng);

    const long burn = 1000;
    const long stride = std::max<long>(1, every);
    const long n_rows = (total - record_from);
    Eigen::MatrixXd out(n_rows, 3);
    long row = 0;
    const long steps = burn + total * stride;
    for (long st = 0; st < steps; ++st) {
        const long t = st >= burn ? (st - burn) / stride : -1;  // sample index
        rk4_step(spec, s, dt, cl, t, soft_lambda, soft);
        if (st >= burn && (st - burn) % stride == stride - 1) {
            const long idx = (st - burn) / stride;
            if (idx >= record_from && row < n_rows) {
                for (int k = 0; k < 3; ++k) {
                    out(row, k) = s(k) + (sd_meas > 0.0 ? sd_meas * draw_normal(rng) : 0.0);
                }
                ++row;
            }
        }
    }
    return out;
}

// ---- LinearSvar ----
// x_t = B0 x_t + sum_l Bl x_{t-l} + eps; simulated in topological order of B0.

std::vector<int> svar_topo(const SimulatorSpec& spec) {
    // adjacency(i,j) = 1 iff i -> j, i.e. b0(j,i) != 0
    Eigen::MatrixXd adj = spec.b0.transpose().cwiseAbs();
    std::vector<int> order = topological_order(adj);
    if (order.empty() && spec.b0.rows() > 0) {
        throw Error(Errc::InvalidSpec, "LinearSvar lag-0 matrix must be acyclic");
    }
    return order;
}

Eigen::MatrixXd run_linear_svar(const SimulatorSpec& spec, long total, long record_from,
                                const ClampPlan& cl, Rng& rng) {
    const Eigen::Index d = spec.b0.rows();
    const double sd = spec.param("shock_sd", 1.0) * spec.noise_scale;
    const std::vector<int> order = svar_topo(spec);
    const int p = static_cast<int>(spec.blag.size());

    std::deque<Eigen::VectorXd> hist(static_cast<std::size_t>(p), Eigen::VectorXd::Zero(d));
    Eigen::MatrixXd out(total - record_from, d);
    Eigen::VectorXd x(d), eps(d);
    for (long t = 0; t < total; ++t) {
        for (Eigen::Index k = 0; k < d; ++k) eps(k) = sd * draw_normal(rng);
        x.setZero();
        for (int v : order) {
            if (cl.on(t) && cl.var == v) {
                x(v) = cl.value;
                continue;
            }
            double acc = eps(v);
            for (Eigen::Index k = 0; k < d; ++k) acc += spec.b0(v, k) * x(k);
            for (int l = 0; l < p; ++l) {
                acc += spec.blag[static_cast<std::size_t>(l)].row(v) *
                       hist[static_cast<std::size_t>(l)];
            }
            x(v) = acc;
        }
        if (p > 0) {
            hist.push_front(x);
            hist.pop_back();
        }
        if (t >= record_from) out.row(t - record_from) = x.transpose();
    }
    return out;
}

// ---- Feedback toy (controller loop) ----
// u_t = max(0, g1*(x_t - x_ref)); x_{t+1} = x_t + a*u_t + meal_t + eps.

Eigen::MatrixXd run_feedback(const SimulatorSpec& spec, long total, long record_from,
                             const ClampPlan& cl, Rng& rng) {
    const double a = spec.param("a", -0.5);
    const double g1 = spec.param("g1", 0.8);
    const double x_ref = spec.param("x_ref", 5.0);
    const double meal_prob = spec.param("meal_prob", 1.0 / 12.0);
    const double meal_amp = spec.param("meal_amp", 1.0);
    const double sd = spec.param("shock_sd", 0.1) * spec.noise_scale;

    double x = x_ref + 1.0;
    Eigen::MatrixXd out(total - record_from, 2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long t = 0; t < total; ++t) {
        const bool c = cl.on(t);
        if (c && cl.var == 0) x = cl.value;
        const double u = (c && cl.var == 1) ? cl.value : std::max(0.0, g1 * (x - x_ref));
        if (t >= record_from) out.row(t - record_from) << x, u;
        const double meal = (unif(rng) < meal_prob) ? meal_amp : 0.0;
        x = x + a * u + meal + sd * draw_normal(rng);
    }
    return out;
}

struct VariantLayout {
    std::vector<std::string> columns;       // recorded panel columns
    std::vector<std::string> state_names;   // clampable internal states, index = ClampPlan.var
    long burn = 0;
    long default_allsteps = 100;
};

VariantLayout layout_of(const SimulatorSpec& spec) {
    switch (spec.variant) {
        case SimVariant::Dsge:
            return {{"y", "pi", "i"}, {"y", "pi", "i"}, 200, 200};
        case SimVariant::ArrheniusBattery:
            return {{"IR", "Cap"}, {"T", "SEI", "IR", "Cap"}, 0,
                    static_cast<long>(spec.param("drift_cycles", 500.0))};
        case SimVariant::HeitlerMatthews:
            return {{"sigma_inel", "x_max", "log_n_mu"}, {"sigma_inel"}, 0, 1};
        case SimVariant::OdeSystem:
            return {{"x", "y", "z"}, {"x", "y", "z"}, 0, 500};
        case SimVariant::LinearSvar: {
            VariantLayout l;
            for (Eigen::Index k = 0; k < spec.b0.rows(); ++k) {
                l.columns.push_back("x" + std::to_string(k));
            }
            l.state_names = l.columns;
            l.burn = 100;
            l.default_allsteps = 50;
            return l;
        }
        case SimVariant::FeedbackToy:
            return {{"x", "u"}, {"x", "u"}, 200, 200};
    }
    throw Error(Errc::InvalidSpec, "unknown variant");
}

int state_index(const VariantLayout& layout, const std::string& name) {
    for (std::size_t k = 0; k < layout.state_names.size(); ++k) {
        if (layout.state_names[k] == name) return static_cast<int>(k);
    }
    return -1;
}

Eigen::MatrixXd run_any(const SimulatorSpec& spec, long total, long record_from,
                        const ClampPlan& cl, Rng& rng, std::uint64_t seed, std::uint64_t tag) {
    switch (spec.variant) {
        case SimVariant::Dsge: return run_dsge(spec, total, record_from, cl, rng);
        case SimVariant::ArrheniusBattery: return run_battery(spec, total, record_from, cl, rng);
        case SimVariant::HeitlerMatthews: return run_hm(spec, total - record_from, cl, rng, seed, tag);
        case SimVariant::OdeSystem: return run_ode(spec, total, record_from, cl, rng);
        case SimVariant::LinearSvar: return run_linear_svar(spec, total, record_from, cl, rng);
        case SimVariant::FeedbackToy: return run_feedback(spec, total, record_from, cl, rng);
    }
    throw Error(Errc::InvalidSpec, "unknown variant");
}

void check_physical_range(const SimulatorSpec& spec, const std::string& target, double value) {
    if (!std::isfinite(value)) {
        throw Error(Errc::OutOfPhysicalRange, "clamp value must be finite");
    }
    switch (spec.variant) {
        case SimVariant::HeitlerMatthews:
            if (target == "sigma_inel" && (value < 100.0 || value > 2000.0)) {
                throw Error(Errc::OutOfPhysicalRange, "sigma_inel must lie in [100, 2000] mb");
            }
            break;
        case SimVariant::ArrheniusBattery:
            if (target == "T" && (value <= -kZeroCelsiusK || value > 200.0)) {
                throw Error(Errc::OutOfPhysicalRange, "battery temperature out of range");
            }
            break;
        default:
            break;
    }
}

}  // namespace

const char* variant_name(SimVariant v) {
    switch (v) {
        case SimVariant::Dsge: return "dsge";
        case SimVariant::ArrheniusBattery: return "arrhenius_battery";
        case SimVariant::HeitlerMatthews: return "heitler_matthews";
        case SimVariant::OdeSystem: return "ode_system";
        case SimVariant::LinearSvar: return "linear_svar";
        case SimVariant::FeedbackToy: return "feedback_toy";
    }
    return "unknown";
}

SimVariant variant_from_name(const std::string& name) {
    for (SimVariant v : {SimVariant::Dsge, SimVariant::ArrheniusBattery,
                         SimVariant::HeitlerMatthews, SimVariant::OdeSystem,
                         SimVariant::LinearSvar, SimVariant::FeedbackToy}) {
        if (name == variant_name(v)) return v;
    }
    throw Error(Errc::ParseError, "unknown simulator variant: " + name);
}

double SimulatorSpec::param(const std::string& key, double fallback) const {
    auto it = phi.find(key);
    return it != phi.end() ? it->second : fallback;
}

SimulatorSpec dsge_spec() {
    SimulatorSpec s;
    s.variant = SimVariant::Dsge;
    s.phi = {{"rho_i", 0.882}, {"phi_pi", 0.357}, {"phi_y", 0.229},
             {"kappa", 0.114}, {"sigma", 0.038},  {"rho_y", 0.5},
             {"rho_pi", 0.5},  {"shock_sd", 0.1}};
    return s;
}

SimulatorSpec battery_spec() {
    SimulatorSpec s;
    s.variant = SimVariant::ArrheniusBattery;
    s.phi = {{"e_a", 50000.0}, {"a_scale", 1.0}, {"t_low", 25.0},   {"t_high", 45.0},
             {"drift_cycles", 500.0}, {"kappa_sei", 0.002}, {"ir0", 0.05}, {"ir1", 0.5},
             {"cap0", 1.1},   {"c1", 0.065},    {"c2", 0.03},     {"sd_t", 0.5},
             {"sd_sei", 0.05}, {"sd_ir", 0.02},  {"sd_cap", 0.01}};
    return s;
}

SimulatorSpec heitler_matthews_spec() {
    SimulatorSpec s;
    s.variant = SimVariant::HeitlerMatthews;
    s.phi = {{"sigma_inel", 500.0}, {"log10_e_min", 15.5}, {"log10_e_max", 17.5},
             {"a_mass", 1.0},       {"beta", 0.85},        {"xi_c_pi_gev", 20.0},
             {"xi_c_e_gev", 0.085}, {"k_air", 2.41e4},     {"d_elong", 36.7},
             {"sigma0", 450.0},     {"sigma_slope", 40.0}, {"sd_sigma", 20.0},
             {"sd_xmax", 20.0},     {"sd_log_nmu", 0.02}};
    return s;
}

SimulatorSpec ode_spec(const std::string& system) {
    SimulatorSpec s;
    s.variant = SimVariant::OdeSystem;
    s.ode_system = system;
    if (system == "lorenz") {
        s.phi = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}, {"dt", 0.01}};
    } else if (system == "rossler") {
        s.phi = {{"a", 0.2}, {"b", 0.2}, {"c", 5.7}, {"dt", 0.01}};
    } else {
        throw Error(Errc::InvalidSpec, "ode system must be lorenz or rossler");
    }
    return s;
}

SimulatorSpec linear_svar_spec(const Eigen::MatrixXd& b0, std::vector<Eigen::MatrixXd> blag,
                               double shock_sd) {
    SimulatorSpec s;
    s.variant = SimVariant::LinearSvar;
    s.b0 = b0;
    s.blag = std::move(blag);
    s.phi["shock_sd"] = shock_sd;
    validate_spec(s);
    return s;
}

SimulatorSpec linear_chain_spec(int d, double coeff) {
    Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(d, d);
    for (int j = 1; j < d; ++j) b0(j, j - 1) = coeff;
    return linear_svar_spec(b0);
}

SimulatorSpec feedback_toy_spec() {
    SimulatorSpec s;
    s.variant = SimVariant::FeedbackToy;
    s.phi = {{"a", -0.5},     {"g1", 0.8},          {"x_ref", 5.0},
             {"meal_prob", 1.0 / 12.0}, {"meal_amp", 1.0}, {"shock_sd", 0.1}};
    return s;
}

std::vector<std::string> variable_names(const SimulatorSpec& spec) {
    return layout_of(spec).columns;
}

std::vector<std::string> intervenable_names(const SimulatorSpec& spec) {
    return layout_of(spec).state_names;
}

void validate_spec(const SimulatorSpec& spec) {
    if (spec.noise_scale < 0.0) throw Error(Errc::InvalidSpec, "noise_scale must be >= 0");
    switch (spec.variant) {
        case SimVariant::Dsge: {
            const double rho_i = spec.param("rho_i", 0.882);
            if (rho_i < 0.0 || rho_i >= 1.0) {
                throw Error(Errc::InvalidSpec, "rho_i must lie in [0, 1)");
            }
            if (spec.param("kappa", 0.114) < 0.0 || spec.param("sigma", 0.038) < 0.0) {
                throw Error(Errc::InvalidSpec, "kappa and sigma must be >= 0");
            }
            break;
        }
        case SimVariant::ArrheniusBattery: {
            if (spec.param("e_a", 50000.0) <= 0.0) {
                throw Error(Errc::InvalidSpec, "activation energy must be positive");
            }
            if (spec.param("a_scale", 1.0) <= 0.0) {
                throw Error(Errc::InvalidSpec, "Arrhenius prefactor must be positive");
            }
            const double lo = spec.param("t_low", 25.0), hi = spec.param("t_high", 45.0);
            if (lo <= -kZeroCelsiusK || hi <= -kZeroCelsiusK || lo >= hi) {
                throw Error(Errc::InvalidSpec, "temperature range invalid");
            }
            break;
        }
        case SimVariant::HeitlerMatthews: {
            const double s0 = spec.param("sigma_inel", 500.0);
            if (s0 < 100.0 || s0 > 2000.0) {
                throw Error(Errc::InvalidSpec, "sigma_inel must lie in [100, 2000] mb");
            }
            const double a = spec.param("a_mass", 1.0);
            if (a < 1.0 || a != std::floor(a)) {
                throw Error(Errc::InvalidSpec, "a_mass must be an integer >= 1");
            }
            break;
        }
        case SimVariant::OdeSystem:
            if (spec.ode_system != "lorenz" && spec.ode_system != "rossler") {
                throw Error(Errc::InvalidSpec, "ode system must be lorenz or rossler");
            }
            if (spec.param("dt", 0.01) <= 0.0) throw Error(Errc::InvalidSpec, "dt must be > 0");
            break;
        case SimVariant::LinearSvar: {
            if (spec.b0.rows() != spec.b0.cols() || spec.b0.rows() < 1) {
                throw Error(Errc::InvalidSpec, "b0 must be square and nonempty");
            }
            for (Eigen::Index k = 0; k < spec.b0.rows(); ++k) {
                if (spec.b0(k, k) != 0.0) {
                    throw Error(Errc::InvalidSpec, "b0 diagonal must be zero");
                }
            }
            svar_topo(spec);  // throws when cyclic
            for (const auto& bl : spec.blag) {
                if (bl.rows() != spec.b0.rows() || bl.cols() != spec.b0.cols()) {
                    throw Error(Errc::InvalidSpec, "lag matrix dimensions mismatch b0");
                }
            }
            break;
        }
        case SimVariant::FeedbackToy:
            if (spec.param("a", -0.5) >= 0.0) {
                throw Error(Errc::InvalidSpec, "feedback gain a must be negative");
            }
            break;
    }
}

TimeSeriesPanel simulate_observational(const SimulatorSpec& spec, long T, std::uint64_t seed) {
    validate_spec(spec);
    if (T < 1) throw Error(Errc::InvalidSpec, "T must be >= 1");
    const VariantLayout layout = layout_of(spec);
    Rng rng = make_rng(seed, kTagObs);
    ClampPlan none;
    TimeSeriesPanel panel;
    panel.values = run_any(spec, layout.burn + T, layout.burn, none, rng, seed, kTagObs);
    panel.names = layout.columns;
    if (spec.variant == SimVariant::OdeSystem) {
        panel.dt = spec.param("dt", 0.01) * spec.param("record_every", 1.0);
    }
    return validate_panel(std::move(panel));
}

InterventionDataset simulate_do(const SimulatorSpec& spec, const DoRequest& req, long M,
                                std::uint64_t seed) {
    validate_spec(spec);
    if (M < 1) throw Error(Errc::InvalidSpec, "M must be >= 1");
    if (req.mode == DoMode::Soft && spec.variant != SimVariant::OdeSystem) {
        throw Error(Errc::UnsupportedVariant, "Soft mode is only valid for OdeSystem");
    }
    const VariantLayout layout = layout_of(spec);
    const int var = state_index(layout, req.target);
    if (var < 0) {
        throw Error(Errc::InvalidTarget,
                    "not an intervenable variable of this variant: " + req.target);
    }
    check_physical_range(spec, req.target, req.value);

    const long h = req.horizon;
    long total = 0, record_from = 0;
    ClampPlan cl;
    cl.var = var;
    cl.value = req.value;
    if (req.mode == DoMode::PointInTime) {
        const long after = std::max<long>(0, h);
        cl.start = layout.burn;
        cl.end = layout.burn + 1;
        total = layout.burn + 1 + after;
        record_from = total - 1;
    } else {
        const long span = h > 0 ? h : layout.default_allsteps;
        cl.start = layout.burn;
        cl.end = layout.burn + span;
        total = layout.burn + span;
        record_from = total - 1;
    }
    if (spec.variant == SimVariant::HeitlerMatthews) {
        // Event draws: every event is clamped; one event per sample.
        cl.start = 0;
        total = 1;
        record_from = 0;
    }

    const Eigen::Index d = static_cast<Eigen::Index>(layout.columns.size());
    InterventionDataset ds;
    ds.target = req.target;
    ds.values = {req.value};
    ds.names = layout.columns;
    ds.provenance = Provenance::SimulatorDo;
    ds.seed = seed;
    Eigen::MatrixXd block(M, d);
    const bool soft = req.mode == DoMode::Soft;
    for (long m = 0; m < M; ++m) {
        Rng rng = make_rng(seed, kTagDo, static_cast<std::uint64_t>(m));
        Eigen::MatrixXd rows;
        if (spec.variant == SimVariant::OdeSystem && soft) {
            const long span = h > 0 ? h : layout.default_allsteps;
            ClampPlan sc = cl;
            sc.start = 0;
            sc.end = std::numeric_limits<long>::max();
            rows = run_ode(spec, span, span - 1, sc, rng, req.soft_lambda, true);
        } else if (spec.variant == SimVariant::HeitlerMatthews) {
            rows = run_hm(spec, 1, cl, rng, seed, kTagDo * 1000 + static_cast<std::uint64_t>(m));
        } else {
            rows = run_any(spec, total, record_from, cl, rng, seed, kTagDo);
        }
        block.row(m) = rows.row(rows.rows() - 1);
    }
    if (spec.bias_inject) {
        const Eigen::Index bj = ds.outcome_col(spec.bias_inject->target);
        if (bj < 0) {
            throw Error(Errc::InvalidTarget,
                        "bias_inject target not an outcome column: " + spec.bias_inject->target);
        }
        block.col(bj).array() += spec.bias_inject->delta;
    }
    ds.outcomes.push_back(std::move(block));
    return validate_intervention_dataset(std::move(ds));
}

InterventionDataset simulate_do_grid(const SimulatorSpec& spec, const std::string& target,
                                     const std::vector<double>& values, DoMode mode, int horizon,
                                     long M, std::uint64_t seed) {
    if (values.empty()) throw Error(Errc::BadRange, "empty value grid");
    InterventionDataset out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        DoRequest req;
        req.target = target;
        req.value = values[k];
        req.mode = mode;
        req.horizon = horizon;
        InterventionDataset one = simulate_do(spec, req, M, seed);
        if (k == 0) {
            out = std::move(one);
        } else {
            out = merge_intervention_datasets(std::move(out), one);
        }
    }
    return out;
}

std::optional<double> true_effect(const SimulatorSpec& spec, const std::string& source,
                                  const std::string& target) {
    switch (spec.variant) {
        case SimVariant::Dsge: {
            const double sigma = spec.param("sigma", 0.038);
            const double kappa = spec.param("kappa", 0.114);
            if (source == "i" && target == "pi") return -sigma * kappa;
            if (source == "i" && target == "y") return -sigma;
            if (source == "y" && target == "pi") return kappa;
            return std::nullopt;
        }
        case SimVariant::ArrheniusBattery:
            if (source == "IR" && target == "Cap") return spec.param("c2", 0.03);
            return std::nullopt;
        case SimVariant::HeitlerMatthews: {
            if (source == "sigma_inel" && target == "log_n_mu") return 0.0;
            if (source == "sigma_inel" && target == "x_max") {
                const double k_air = spec.param("k_air", 2.41e4);
                const double s0 = spec.param("sigma_inel", 500.0);
                return -k_air * std::log(2.0) / (s0 * s0);
            }
            return std::nullopt;
        }
        case SimVariant::LinearSvar: {
            const Eigen::Index d = spec.b0.rows();
            Eigen::Index si = -1, tj = -1;
            for (Eigen::Index k = 0; k < d; ++k) {
                if (source == "x" + std::to_string(k)) si = k;
                if (target == "x" + std::to_string(k)) tj = k;
            }
            if (si < 0 || tj < 0 || si == tj) return std::nullopt;
            // Total contemporaneous effect: solve the system with row si severed.
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - spec.b0;
            m.row(si).setZero();
            m(si, si) = 1.0;
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
            rhs(si) = 1.0;
            Eigen::VectorXd effect = m.partialPivLu().solve(rhs);
            return effect(tj);
        }
        case SimVariant::FeedbackToy:
            if (source == "u" && target == "x") return spec.param("a", -0.5);
            return std::nullopt;
        case SimVariant::OdeSystem:
            return std::nullopt;
    }
    return std::nullopt;
}

Eigen::Vector3d ode_derivative(const SimulatorSpec& spec, const Eigen::Vector3d& state) {
    if (spec.variant != SimVariant::OdeSystem) {
        throw Error(Errc::UnsupportedVariant, "ode_derivative requires an ODE system");
    }
    return ode_deriv(spec, state);
}

int oracle_horizon(const SimulatorSpec& spec, const std::string& source,
                   const std::string& target) {
    if (spec.variant == SimVariant::Dsge && source == "i") return 1;
    if (spec.variant == SimVariant::FeedbackToy && source == "u" && target == "x") return 1;
    (void)target;
    return 0;
}

HmShowerOut hm_shower(double e_ev, int a_mass, double sigma_inel_mb, std::uint64_t seed,
                      double noise_scale) {
    if (sigma_inel_mb < 100.0 || sigma_inel_mb > 2000.0) {
        throw Error(Errc::OutOfPhysicalRange, "sigma_inel must lie in [100, 2000] mb");
    }
    if (e_ev <= 0.0 || a_mass < 1) {
        throw Error(Errc::OutOfPhysicalRange, "energy must be positive and mass >= 1");
    }
    SimulatorSpec ref = heitler_matthews_spec();
    double k_air, d_elong, e_ref_ev, xi_c_pi_ev, beta;
    hm_params(ref, k_air, d_elong, e_ref_ev, xi_c_pi_ev, beta);
    const double sd_xmax = ref.param("sd_xmax", 20.0) * noise_scale;
    const double sd_log_nmu = ref.param("sd_log_nmu", 0.02) * noise_scale;

    Rng rng = make_rng(seed, kTagShower);
    const double ex = draw_normal(rng);
    const double emu = draw_normal(rng);

    HmShowerOut out;
    const double lambda_int = k_air / sigma_inel_mb;
    out.x_max = lambda_int * std::log(2.0) +
                d_elong * std::log(e_ev / (static_cast<double>(a_mass) * e_ref_ev)) +
                sd_xmax * ex;
    out.n_mu = std::pow(static_cast<double>(a_mass), 1.0 - beta) *
               std::pow(e_ev / xi_c_pi_ev, beta) * std::exp(sd_log_nmu * emu);
    return out;
}

std::vector<std::string> mechanism_fingerprint(const SimulatorSpec& spec,
                                               const std::optional<std::string>& clamped) {
    validate_spec(spec);
    const VariantLayout layout = layout_of(spec);
    std::vector<std::string> fp;
    for (const auto& name : layout.state_names) {
        if (clamped && *clamped == name) {
            fp.push_back(name + " = <clamped>");
            continue;
        }
        std::ostringstream eq;
        eq << name << " = ";
        switch (spec.variant) {
            case SimVariant::Dsge:
                if (name == "y") {
                    eq << "-sigma*i[t-1] + rho_y*y[t-1] + eps_y {sigma="
                       << fmt(spec.param("sigma", 0.038)) << " rho_y=" << fmt(spec.param("rho_y", 0.5))
                       << "}";
                } else if (name == "pi") {
                    eq << "kappa*y + rho_pi*pi[t-1] + eps_pi {kappa=" << fmt(spec.param("kappa", 0.114))
                       << " rho_pi=" << fmt(spec.param("rho_pi", 0.5)) << "}";
                } else {
                    eq << "rho_i*i[t-1] + (1-rho_i)*(phi_pi*pi + phi_y*y) + eps_i {rho_i="
                       << fmt(spec.param("rho_i", 0.882)) << " phi_pi=" << fmt(spec.param("phi_pi", 0.357))
                       << " phi_y=" << fmt(spec.param("phi_y", 0.229)) << "}";
                }
                break;
            case SimVariant::ArrheniusBattery:
                if (name == "T") {
                    eq << "t_low + (t_high-t_low)*ramp(t) + noise {t_low="
                       << fmt(spec.param("t_low", 25.0)) << " t_high=" << fmt(spec.param("t_high", 45.0))
                       << "}";
                } else if (name == "SEI") {
                    eq << "SEI[t-1] + kappa_sei*k(T)*(1+noise) {kappa_sei="
                       << fmt(spec.param("kappa_sei", 0.002)) << " e_a=" << fmt(spec.param("e_a", 50000.0))
                       << "}";
                } else if (name == "IR") {
                    eq << "ir0 + ir1*SEI + noise {ir0=" << fmt(spec.param("ir0", 0.05))
                       << " ir1=" << fmt(spec.param("ir1", 0.5)) << "}";
                } else {
                    eq << "cap0 - c1*SEI + c2*IR + noise {cap0=" << fmt(spec.param("cap0", 1.1))
                       << " c1=" << fmt(spec.param("c1", 0.065)) << " c2=" << fmt(spec.param("c2", 0.03))
                       << "}";
                }
                break;
            case SimVariant::HeitlerMatthews:
                eq << "sigma0 + sigma_slope*(log10E - mid) + noise {sigma0="
                   << fmt(spec.param("sigma0", 450.0)) << " slope=" << fmt(spec.param("sigma_slope", 40.0))
                   << "}";
                break;
            case SimVariant::OdeSystem:
                eq << spec.ode_system << "_deriv_" << name << " {";
                for (const auto& [k, v] : spec.phi) eq << k << "=" << fmt(v) << " ";
                eq << "}";
                break;
            case SimVariant::LinearSvar: {
                const int v = state_index(layout, name);
                eq << "b0_row=[";
                for (Eigen::Index k = 0; k < spec.b0.cols(); ++k) {
                    eq << fmt(spec.b0(v, k)) << (k + 1 < spec.b0.cols() ? "," : "");
                }
                eq << "] lags=" << spec.blag.size();
                break;
            }
            case SimVariant::FeedbackToy:
                if (name == "x") {
                    eq << "x[t-1] + a*u[t-1] + meal + noise {a=" << fmt(spec.param("a", -0.5)) << "}";
                } else {
                    eq << "max(0, g1*(x - x_ref)) {g1=" << fmt(spec.param("g1", 0.8))
                       << " x_ref=" << fmt(spec.param("x_ref", 5.0)) << "}";
                }
                break;
        }
        fp.push_back(eq.str());
    }
    return fp;
}

SimulatorSpec read_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path);
    SimulatorSpec spec;
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    if (!kv.count("variant")) throw Error(Errc::ParseError, "spec file missing 'variant'");
    spec.variant = variant_from_name(kv["variant"]);

    auto num = [&](const std::string& v) {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "bad number '" + v + "' in " + path);
        }
    };
    int d = 0;
    std::map<int, Eigen::MatrixXd> lag_mats;
    for (const auto& [key, value] : kv) {
        if (key == "variant") continue;
        if (key == "noise_scale") {
            spec.noise_scale = num(value);
        } else if (key == "ode.system") {
            spec.ode_system = value;
        } else if (key == "bias.target") {
            if (!spec.bias_inject) spec.bias_inject = BiasInject{};
            spec.bias_inject->target = value;
        } else if (key == "bias.delta") {
            if (!spec.bias_inject) spec.bias_inject = BiasInject{};
            spec.bias_inject->delta = num(value);
        } else if (key == "d") {
            d = static_cast<int>(num(value));
        } else if (key.rfind("phi.", 0) == 0) {
            spec.phi[key.substr(4)] = num(value);
        }
    }
    if (spec.variant == SimVariant::LinearSvar) {
        if (d <= 0) throw Error(Errc::ParseError, "linear_svar spec needs 'd'");
        spec.b0 = Eigen::MatrixXd::Zero(d, d);
        for (const auto& [key, value] : kv) {
            int r, c, l;
            if (std::sscanf(key.c_str(), "b0.%d.%d", &r, &c) == 2) {
                if (r < 0 || r >= d || c < 0 || c >= d) {
                    throw Error(Errc::ParseError, "b0 index out of range in " + path);
                }
                spec.b0(r, c) = num(value);
            } else if (std::sscanf(key.c_str(), "blag%d.%d.%d", &l, &r, &c) == 3) {
                if (l < 1 || r < 0 || r >= d || c < 0 || c >= d) {
                    throw Error(Errc::ParseError, "blag index out of range in " + path);
                }
                if (!lag_mats.count(l)) lag_mats[l] = Eigen::MatrixXd::Zero(d, d);
                lag_mats[l](r, c) = num(value);
            }
        }
        int max_lag = 0;
        for (const auto& [l, m] : lag_mats) {
            (void)m;
            max_lag = std::max(max_lag, l);
        }
        spec.blag.assign(static_cast<std::size_t>(max_lag), Eigen::MatrixXd::Zero(d, d));
        for (const auto& [l, m] : lag_mats) spec.blag[static_cast<std::size_t>(l - 1)] = m;
    }
    validate_spec(spec);
    return spec;
}

void write_spec_file(const SimulatorSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path);
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "variant = " << variant_name(spec.variant) << "\n";
    out << "noise_scale = " << spec.noise_scale << "\n";
    if (spec.variant == SimVariant::OdeSystem) out << "ode.system = " << spec.ode_system << "\n";
    if (spec.bias_inject) {
        out << "bias.target = " << spec.bias_inject->target << "\n";
        out << "bias.delta = " << spec.bias_inject->delta << "\n";
    }
    for (const auto& [k, v] : spec.phi) out << "phi." << k << " = " << v << "\n";
    if (spec.variant == SimVariant::LinearSvar) {
        out << "d = " << spec.b0.rows() << "\n";
        for (Eigen::Index r = 0; r < spec.b0.rows(); ++r) {
            for (Eigen::Index c = 0; c < spec.b0.cols(); ++c) {
                if (spec.b0(r, c) != 0.0) {
                    out << "b0." << r << "." << c << " = " << spec.b0(r, c) << "\n";
                }
            }
        }
        for (std::size_t l = 0; l < spec.blag.size(); ++l) {
            for (Eigen::Index r = 0; r < spec.blag[l].rows(); ++r) {
                for (Eigen::Index c = 0; c < spec.blag[l].cols(); ++c) {
                    if (spec.blag[l](r, c) != 0.0) {
                        out << "blag" << (l + 1) << "." << r << "." << c << " = "
                            << spec.blag[l](r, c) << "\n";
                    }
                }
            }
        }
    }
}

}  // namespace svarfm
