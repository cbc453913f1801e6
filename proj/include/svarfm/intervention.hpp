#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svarfm/intervention_data.hpp"
#include "svarfm/simulators.hpp"
#include "svarfm/var_engine.hpp"

namespace svarfm {

enum class GridKind { Uniform, LatinHypercube };

// Uniform: M points with both endpoints included. LatinHypercube: one uniform
// draw per bin, returned in ascending order.
std::vector<double> design_grid(double low, double high, int m, GridKind kind,
                                std::uint64_t seed = 0);

struct VarForwardOptions {
    int horizon = 10;       // forward steps under the clamp
    double clip_sigma = 5.0;  // clamp values to mean +/- clip_sigma * sd of target
};

// Surrogate do-operator on a fitted VAR: propagate the fitted coefficients with
// the target column held at each requested value, innovations resampled with
// replacement from the fit residuals. Records the final row of each of the M
// trajectories per value.
InterventionDataset var_forward_do(const VarModel& model, const TimeSeriesPanel& panel,
                                   const std::string& target, const std::vector<double>& values,
                                   long M, std::uint64_t seed, VarForwardOptions opts = {});

struct DgpHardOptions {
    double level_sigma = 2.0;  // clamp level: mean + level_sigma * sd (observational)
    long T = 400;              // recorded steps under the clamp
    long T_ref = 1000;         // observational reference run used for mean/sd
};

// Ground-truth hard intervention on the generating process. The clamp level is
// derived from an internal observational reference run; the full clamped
// trajectory is recorded so downstream checks can test severed dependencies.
InterventionDataset dgp_hard_do(const SimulatorSpec& spec, const std::string& target,
                                std::uint64_t seed, DgpHardOptions opts = {});

// Soft (shift-style) intervention for ODE systems: adds lambda * (value - x_i)
// to the clamped coordinate's derivative and records the full trajectory.
InterventionDataset ode_soft_do(const SimulatorSpec& spec, const std::string& target,
                                double value, double lambda, long T, std::uint64_t seed);

// Dataset round-trip: one CSV (leading "value" column, then outcome columns)
// plus a JSON manifest carrying target, provenance, seed, and row layout.
void write_intervention_dataset(const InterventionDataset& ds, const std::string& csv_path,
                                const std::string& manifest_path);
InterventionDataset read_intervention_dataset(const std::string& csv_path,
                                              const std::string& manifest_path);

}  // namespace svarfm
