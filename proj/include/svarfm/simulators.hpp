#pragma once

#include "svarfm/core.hpp"
#include "svarfm/intervention_data.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svarfm {

enum class SimVariant { Dsge, ArrheniusBattery, HeitlerMatthews, OdeSystem, LinearSvar, FeedbackToy };

const char* variant_name(SimVariant v);
SimVariant variant_from_name(const std::string& name);

/// Additive shift applied to one variable of the interventional outputs only.
struct BiasInject {
    std::string target;
    double delta = 0.0;
};

/// Tagged description of one analytic simulator with its physical parameters.
struct SimulatorSpec {
    SimVariant variant = SimVariant::LinearSvar;
    std::map<std::string, double> phi;  // named physical parameters
    double noise_scale = 1.0;
    std::optional<BiasInject> bias_inject;

    // OdeSystem only: which vector field ("lorenz" or "rossler").
    std::string ode_system = "lorenz";

    // LinearSvar only: structural matrices. b0 must be acyclic
    // (strictly lower-triangular up to permutation).
    Eigen::MatrixXd b0;
    std::vector<Eigen::MatrixXd> blag;

    double param(const std::string& key, double fallback) const;
};

enum class DoMode { PointInTime, AllSteps, Soft };

/// do(X_target = value): clamp the target, sever its incoming mechanisms.
struct DoRequest {
    std::string target;
    double value = 0.0;
    DoMode mode = DoMode::AllSteps;
    double soft_lambda = 10.0;  // Soft mode restoring strength (OdeSystem only)
    // PointInTime: steps evolved after the clamped step before recording
    // (0 = record the clamped step itself). AllSteps: clamped trajectory
    // length; <= 0 selects the variant default.
    int horizon = 0;
};

// Ready-made specs. dsge_spec uses the published calibration
// (rho_i=0.882, phi_pi=0.357, phi_y=0.229, kappa=0.114, sigma=0.038).
SimulatorSpec dsge_spec();
SimulatorSpec battery_spec();
SimulatorSpec heitler_matthews_spec();
SimulatorSpec ode_spec(const std::string& system);  // "lorenz" | "rossler"
SimulatorSpec linear_svar_spec(const Eigen::MatrixXd& b0,
                               std::vector<Eigen::MatrixXd> blag = {},
                               double shock_sd = 1.0);
// Contemporaneous chain 0 -> 1 -> ... -> d-1 with the given edge coefficient.
SimulatorSpec linear_chain_spec(int d, double coeff);
SimulatorSpec feedback_toy_spec();

// Panel column names of the variant.
std::vector<std::string> variable_names(const SimulatorSpec& spec);
// Names accepted as do() targets (includes latent drivers, e.g. battery "T").
std::vector<std::string> intervenable_names(const SimulatorSpec& spec);

void validate_spec(const SimulatorSpec& spec);

// Observational trajectories with all confounding paths active;
// deterministic given (spec, T, seed).
TimeSeriesPanel simulate_observational(const SimulatorSpec& spec, long T, std::uint64_t seed);

// M post-intervention draws at req.value. Draw m uses the RNG stream
// derived from (seed, m) alone, so calls with different values but the
// same seed share random numbers (common-random-number design).
InterventionDataset simulate_do(const SimulatorSpec& spec, const DoRequest& req, long M,
                                std::uint64_t seed);

// simulate_do over several clamp values, merged into one dataset.
InterventionDataset simulate_do_grid(const SimulatorSpec& spec, const std::string& target,
                                     const std::vector<double>& values, DoMode mode, int horizon,
                                     long M, std::uint64_t seed);

// Closed-form interventional slope oracle, when the variant has one.
std::optional<double> true_effect(const SimulatorSpec& spec, const std::string& source,
                                  const std::string& target);

// Horizon convention under which true_effect is defined for the pair
// (0 = contemporaneous, 1 = one step ahead).
int oracle_horizon(const SimulatorSpec& spec, const std::string& source,
                   const std::string& target);

// Vector field of the configured ODE system at a state (OdeSystem only).
Eigen::Vector3d ode_derivative(const SimulatorSpec& spec, const Eigen::Vector3d& state);

struct HmShowerOut {
    double x_max = 0.0;  // g/cm^2
    double n_mu = 0.0;   // count
};

// Analytic air-shower sample: X_max = lambda_int*ln2 + D*ln(E/(A*E_ref)) + noise,
// lambda_int = K_air/sigma_inel; N_mu = A^(1-beta) * (E/xi_c)^beta (sigma-free).
HmShowerOut hm_shower(double e_ev, int a_mass, double sigma_inel_mb, std::uint64_t seed,
                      double noise_scale = 1.0);

// One descriptor string per variable equation; the clamped variable (if any)
// reads "<clamped>". Used to assert clamping leaves other mechanisms intact.
std::vector<std::string> mechanism_fingerprint(const SimulatorSpec& spec,
                                               const std::optional<std::string>& clamped);

// Key-value spec files: `variant = dsge`, `noise_scale = 1`, `phi.kappa = 0.114`,
// `bias.target = pi`, `bias.delta = 0.5`, `ode.system = lorenz`,
// `b0.<row>.<col> = w`, `blag<l>.<row>.<col> = w`, `d = 3`.
SimulatorSpec read_spec_file(const std::string& path);
void write_spec_file(const SimulatorSpec& spec, const std::string& path);

}  // namespace svarfm
