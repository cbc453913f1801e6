#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svarfm/discovery.hpp"
#include "svarfm/simulators.hpp"

namespace svarfm {

struct SensitivityOptions {
    double delta_rel = 0.10;  // relative parameter perturbation
    long obs_T = 1000;        // observational run backing each estimate
    Phase3Options effect;     // how the pair effect is estimated
};

struct SensitivityEntry {
    std::string param;
    double value = 0.0;       // nominal parameter value
    double s = 0.0;           // |effect| change per unit of parameter
    double e_plus = 0.0;
    double e_minus = 0.0;
    bool unstable = false;    // perturbation moves the effect by > half itself
};

struct SensitivityReport {
    std::string source;
    std::string target;
    double e_hat = 0.0;
    std::vector<SensitivityEntry> entries;
};

// Finite-difference sensitivity of the estimated per-unit effect to every
// simulator parameter: s = (|e(phi+)-e| + |e(phi-)-e|) / (2 * delta_abs) with
// delta_abs = |phi| * delta_rel. Parameters at exactly zero are skipped.
SensitivityReport sensitivities(const SimulatorSpec& spec, const std::string& source,
                                const std::string& target, const SensitivityOptions& opts,
                                std::uint64_t seed);

std::string sensitivity_report_json(const SensitivityReport& report);

struct SignFlipOptions {
    std::vector<double> deltas = {0.0, 0.25, 0.5, 1.0, 2.0};
    int n_seeds = 20;
    long m = 500;
    long bootstrap_b = 200;
    long obs_T = 1000;
    double level_sigma = 1.0;
    DoMode mode = DoMode::PointInTime;
    int horizon = 0;
};

struct SignFlipResult {
    std::vector<double> deltas;
    std::vector<double> accuracy;   // share of seeds recovering sign(e*)
    double threshold = 0.0;         // logit-interpolated 50% crossing
    double true_effect = 0.0;
};

// Adversarial bias probe: inject a measurement bias of -sign(e*) * delta into
// the target column and measure how often the estimated sign survives.
SignFlipResult sign_flip_probe(const SimulatorSpec& spec, const std::string& source,
                               const std::string& target, const SignFlipOptions& opts,
                               std::uint64_t seed);

std::string sign_flip_csv(const SignFlipResult& result);

struct ErrorDecompOptions {
    std::vector<long> ms = {25, 100, 400, 1600};
    std::vector<double> deltas = {0.0, 0.25, 0.5, 1.0};
    long trials = 50;
    long bootstrap_b = 200;
    long obs_T = 2000;
};

struct ErrorCell {
    long m = 0;
    double delta = 0.0;
    double mean_abs_err = 0.0;
};

struct ErrorDecomposition {
    double c_m = 0.0;     // coefficient on 1/sqrt(M)
    double c_bias = 0.0;  // coefficient on |bias delta|
    double r2 = 0.0;      // uncentered
    std::vector<ErrorCell> cells;
};

// Decomposes |estimate - truth| on a unit two-variable chain into a Monte
// Carlo term and an injected-bias term: cell means regressed (no intercept)
// on (M^{-1/2}, delta).
ErrorDecomposition error_decomposition(const ErrorDecompOptions& opts, std::uint64_t seed);

std::string error_decomposition_json(const ErrorDecomposition& decomp);

}  // namespace svarfm
