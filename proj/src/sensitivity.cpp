#include "svarfm/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace svarfm {

namespace {

constexpr std::uint64_t kTagSens = 701;
constexpr std::uint64_t kTagFlip = 702;
constexpr std::uint64_t kTagDecomp = 703;

double estimate_pair(const SimulatorSpec& spec, const std::string& source,
                     const std::string& target, long obs_T, const Phase3Options& eopts,
                     std::uint64_t seed) {
    const TimeSeriesPanel obs = simulate_observational(spec, obs_T, derive_seed(seed, 1));
    return pair_effect(spec, obs, source, target, eopts, derive_seed(seed, 2)).point;
}

}  // namespace

SensitivityReport sensitivities(const SimulatorSpec& spec, const std::string& source,
                                const std::string& target, const SensitivityOptions& opts,
                                std::uint64_t seed) {
    validate_spec(spec);
    if (opts.delta_rel <= 0.0) throw Error(Errc::InvalidSpec, "delta_rel must be positive");

    SensitivityReport report;
    report.source = source;
    report.target = target;
    // Common random numbers: same derived seed for the nominal and every
    // perturbed estimate, so parameter effects are not drowned in resampling
    // noise.
    const std::uint64_t est_seed = derive_seed(seed, kTagSens);
    report.e_hat = estimate_pair(spec, source, target, opts.obs_T, opts.effect, est_seed);

    for (const auto& [key, value] : spec.phi) {
        if (value == 0.0) continue;
        const double delta_abs = std::abs(value) * opts.delta_rel;

        SimulatorSpec up = spec;
        up.phi[key] = value + delta_abs;
        SimulatorSpec dn = spec;
        dn.phi[key] = value - delta_abs;

        SensitivityEntry entry;
        entry.param = key;
        entry.value = value;
        try {
            entry.e_plus = estimate_pair(up, source, target, opts.obs_T, opts.effect, est_seed);
            entry.e_minus = estimate_pair(dn, source, target, opts.obs_T, opts.effect, est_seed);
        } catch (const Error&) {
            continue;  // perturbation left the spec's valid region; skip it
        }
        entry.s = (std::abs(entry.e_plus - report.e_hat) +
                   std::abs(entry.e_minus - report.e_hat)) /
                  (2.0 * delta_abs);
        entry.unstable = entry.s * delta_abs > 0.5 * std::abs(report.e_hat);
        report.entries.push_back(std::move(entry));
    }
    std::sort(report.entries.begin(), report.entries.end(),
              [](const SensitivityEntry& a, const SensitivityEntry& b) {
                  return a.s * std::abs(a.value) > b.s * std::abs(b.value);
              });
    return report;
}

std::string sensitivity_report_json(const SensitivityReport& report) {
    nlohmann::json j;
    j["format"] = "svarfm-sensitivity";
    j["version"] = 1;
    j["source"] = report.source;
    j["target"] = report.target;
    j["e_hat"] = report.e_hat;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"param", e.param},
                           {"value", e.value},
                           {"s", e.s},
                           {"e_plus", e.e_plus},
                           {"e_minus", e.e_minus},
                           {"unstable", e.unstable}});
    }
    j["entries"] = std::move(entries);
    return j.dump(2);
}

SignFlipResult sign_flip_probe(const SimulatorSpec& spec, const std::string& source,
                               const std::string& target, const SignFlipOptions& opts,
                               std::uint64_t seed) {
    validate_spec(spec);
    if (opts.deltas.empty()) throw Error(Errc::BadRange, "need a bias grid");
    if (opts.n_seeds < 2) throw Error(Errc::InvalidSpec, "need >= 2 probe seeds");
    const std::optional<double> oracle = true_effect(spec, source, target);
    if (!oracle || *oracle == 0.0) {
        throw Error(Errc::NoOracle, "sign probe needs a nonzero closed-form effect");
    }
    const double sign_true = *oracle > 0.0 ? 1.0 : -1.0;

    SignFlipResult res;
    res.true_effect = *oracle;
    res.deltas = opts.deltas;
    Phase3Options eopts;
    eopts.m_per_edge = opts.m;
    eopts.bootstrap_b = opts.bootstrap_b;
    eopts.level_sigma = opts.level_sigma;
    eopts.mode = opts.mode;
    eopts.horizon = opts.horizon;

    for (double delta : opts.deltas) {
        SimulatorSpec biased = spec;
        biased.bias_inject = BiasInject{target, -sign_true * delta};
        long hits = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : hits)
#endif
        for (int s = 0; s < opts.n_seeds; ++s) {
            const double e = estimate_pair(biased, source, target, opts.obs_T, eopts,
                                           derive_seed(seed, kTagFlip, static_cast<std::uint64_t>(s)));
            if ((e > 0.0 ? 1.0 : -1.0) == sign_true && e != 0.0) ++hits;
        }
        res.accuracy.push_back(static_cast<double>(hits) / opts.n_seeds);
    }

    // Logit-interpolated 50% crossing on the (delta, accuracy) curve.
    auto logit = [](double a) {
        const double c = std::clamp(a, 0.01, 0.99);
        return std::log(c / (1.0 - c));
    };
    res.threshold = res.deltas.back();
    bool found = false;
    for (std::size_t k = 0; k + 1 < res.deltas.size() && !found; ++k) {
        const double a0 = res.accuracy[k], a1 = res.accuracy[k + 1];
        if (a0 >= 0.5 && a1 < 0.5) {
            const double l0 = logit(a0), l1 = logit(a1);
            const double frac = l0 == l1 ? 0.5 : l0 / (l0 - l1);
            res.threshold = res.deltas[k] + frac * (res.deltas[k + 1] - res.deltas[k]);
            found = true;
        }
    }
    if (!found && !res.accuracy.empty() && res.accuracy.front() < 0.5) {
        res.threshold = res.deltas.front();
    }
    return res;
}

std::string sign_flip_csv(const SignFlipResult& result) {
    std::ostringstream out;
    out.precision(10);
    out << "delta,accuracy\n";
    for (std::size_t k = 0; k < result.deltas.size(); ++k) {
        out << result.deltas[k] << "," << result.accuracy[k] << "\n";
    }
    out << "# threshold," << result.threshold << "\n";
    return out.str();
}

ErrorDecomposition error_decomposition(const ErrorDecompOptions& opts, std::uint64_t seed) {
    if (opts.ms.empty() || opts.deltas.empty()) throw Error(Errc::BadRange, "empty design");
    if (opts.trials < 2) throw Error(Errc::InvalidSpec, "need >= 2 trials per cell");

    const SimulatorSpec base = linear_chain_spec(2, 1.0);
    const double truth = *true_effect(base, "x0", "x1");

    Phase3Options eopts;
    eopts.bootstrap_b = opts.bootstrap_b;
    eopts.level_sigma = 1.0;
    eopts.mode = DoMode::PointInTime;
    eopts.horizon = 0;

    ErrorDecomposition out;
    for (long m : opts.ms) {
        for (double delta : opts.deltas) {
            SimulatorSpec spec = base;
            if (delta != 0.0) spec.bias_inject = BiasInject{"x1", delta};
            Phase3Options cell_opts = eopts;
            cell_opts.m_per_edge = m;
            std::vector<double> errs(static_cast<std::size_t>(opts.trials));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (long t = 0; t < opts.trials; ++t) {
                const double e = estimate_pair(
                    spec, "x0", "x1", opts.obs_T, cell_opts,
                    derive_seed(seed, kTagDecomp,
                                static_cast<std::uint64_t>(t) * 131071 +
                                    static_cast<std::uint64_t>(m)));
                errs[static_cast<std::size_t>(t)] = std::abs(e - truth);
            }
            ErrorCell cell;
            cell.m = m;
            cell.delta = delta;
            cell.mean_abs_err =
                std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(opts.trials);
            out.cells.push_back(cell);
        }
    }

    // No-intercept fit of cell means on (M^{-1/2}, delta).
    const Eigen::Index n = static_cast<Eigen::Index>(out.cells.size());
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        x(k, 0) = 1.0 / std::sqrt(static_cast<double>(out.cells[static_cast<std::size_t>(k)].m));
        x(k, 1) = out.cells[static_cast<std::size_t>(k)].delta;
        y(k) = out.cells[static_cast<std::size_t>(k)].mean_abs_err;
    }
    const LinFit fit = ols_fit(x, y, false);
    out.c_m = fit.beta(0);
    out.c_bias = fit.beta(1);
    const double ss_tot = y.squaredNorm();
    out.r2 = ss_tot > 0.0 ? 1.0 - fit.rss / ss_tot : 1.0;
    return out;
}

std::string error_decomposition_json(const ErrorDecomposition& decomp) {
    nlohmann::json j;
    j["format"] = "svarfm-error-decomposition";
    j["version"] = 1;
    j["c_m"] = decomp.c_m;
    j["c_bias"] = decomp.c_bias;
    j["r2"] = decomp.r2;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : decomp.cells) {
        cells.push_back({{"m", c.m}, {"delta", c.delta}, {"mean_abs_err", c.mean_abs_err}});
    }
    j["cells"] = std::move(cells);
    return j.dump(2);
}

}  // namespace svarfm
