#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svarfm/core.hpp"
#include "svarfm/simulators.hpp"

namespace svarfm {

struct OlsSlope {
    double slope = 0.0;
    double se = 0.0;
};

// Naive observational regression of target on source (with intercept).
OlsSlope baseline_ols(const TimeSeriesPanel& panel, const std::string& source,
                      const std::string& target);

struct GrangerResult {
    double f_stat = 0.0;
    double p_value = 1.0;
    double effect = 0.0;  // sum of lagged-source coefficients in the full model
};

// Classic lag-augmentation F-test: target's own p lags vs adding the source's
// p lags.
GrangerResult baseline_granger(const TimeSeriesPanel& panel, const std::string& source,
                               const std::string& target, int p = 2);

enum class BenchDomain { Macro, Battery, Cosmic, Feedback };

const char* bench_domain_name(BenchDomain d);
BenchDomain bench_domain_from_name(const std::string& name);

struct BenchOptions {
    int n_seeds = 50;
    long T = 0;            // observational length; 0 = domain default
    long m = 0;            // interventional draws; 0 = domain default
    long bootstrap_b = 200;
};

struct BenchSeedRow {
    std::uint64_t seed = 0;
    double estimate = 0.0;
    double baseline = 0.0;
    bool sign_ok = false;
    bool baseline_wrong_sign = false;
};

struct BenchReport {
    std::string domain;
    double truth = 0.0;
    double estimate_mean = 0.0;
    double bias_abs = 0.0;
    double rmse = 0.0;
    double sign_accuracy = 0.0;        // fraction of seeds, [0, 1]
    double baseline_mean = 0.0;
    double baseline_bias_abs = 0.0;
    double baseline_wrong_sign = 0.0;  // fraction of seeds
    double bias_reduction = 0.0;       // (|bias_base| - |bias_est|) / |bias_base|
    double structural_zero_max = 0.0;  // Cosmic only: max |effect| on the null pair
    int n_seeds = 0;
    double runtime_sec = 0.0;
    std::vector<BenchSeedRow> rows;
};

// Interventional pipeline vs the naive observational baseline on one domain:
//   Macro    — rate shock on inflation, one step ahead
//   Battery  — capacity response to resistance under a fixed-temperature life
//   Cosmic   — cross-section to depth-of-maximum, with the muon-count null
//   Feedback — controller action on the regulated state
BenchReport run_causalsim(BenchDomain domain, const BenchOptions& opts, std::uint64_t seed);

std::string bench_report_json(const BenchReport& report);
std::string bench_report_csv(const BenchReport& report);

}  // namespace svarfm
