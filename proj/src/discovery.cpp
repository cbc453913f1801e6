#include "svarfm/discovery.hpp"

#include "svarfm/flow_match.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace svarfm {

namespace {

constexpr std::uint64_t kTagBoot = 501;
constexpr std::uint64_t kTagPhase3 = 502;

double resample_mean(const Eigen::VectorXd& sample, Rng& rng) {
    const Eigen::Index n = sample.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) acc += sample(pick(rng));
    return acc / static_cast<double>(n);
}

double sd_of_means(const std::vector<double>& means) {
    const double n = static_cast<double>(means.size());
    double mu = std::accumulate(means.begin(), means.end(), 0.0) / n;
    double acc = 0.0;
    for (double m : means) acc += (m - mu) * (m - mu);
    return std::sqrt(acc / (n - 1.0));
}

// Midrank vector of v (average ranks for ties), 1-based.
std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(midranks(a), midranks(b));
}

std::vector<double> offdiag_of(const Eigen::MatrixXd& m) {
    std::vector<double> v;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i != j) v.push_back(m(i, j));
        }
    }
    return v;
}

}  // namespace

double bootstrap_se_serial(const Eigen::VectorXd& sample, long B, std::uint64_t seed) {
    if (sample.size() < 2) throw Error(Errc::TooFewSamples, "bootstrap needs >= 2 points");
    if (B < 2) throw Error(Errc::InvalidSpec, "bootstrap needs B >= 2");
    std::vector<double> means(static_cast<std::size_t>(B));
    for (long b = 0; b < B; ++b) {
        Rng rng = make_rng(seed, kTagBoot, static_cast<std::uint64_t>(b));
        means[static_cast<std::size_t>(b)] = resample_mean(sample, rng);
    }
    return sd_of_means(means);
}

double bootstrap_se(const Eigen::VectorXd& sample, long B, std::uint64_t seed) {
    if (sample.size() < 2) throw Error(Errc::TooFewSamples, "bootstrap needs >= 2 points");
    if (B < 2) throw Error(Errc::InvalidSpec, "bootstrap needs B >= 2");
    std::vector<double> means(static_cast<std::size_t>(B));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long b = 0; b < B; ++b) {
        Rng rng = make_rng(seed, kTagBoot, static_cast<std::uint64_t>(b));
        means[static_cast<std::size_t>(b)] = resample_mean(sample, rng);
    }
    return sd_of_means(means);
}

EffectEstimate estimate_ate(const Eigen::VectorXd& outcomes, double obs_mean, long bootstrap_b,
                            std::uint64_t seed) {
    if (outcomes.size() < 2) throw Error(Errc::TooFewSamples, "need >= 2 interventional draws");
    if (!outcomes.allFinite()) throw Error(Errc::NonFinite, "non-finite interventional outcome");
    EffectEstimate est;
    est.m = outcomes.size();
    est.point = outcomes.mean() - obs_mean;
    est.se = bootstrap_se(outcomes, bootstrap_b, seed);
    if (est.se > 0.0) {
        est.z = est.point / est.se;
    } else {
        est.z = est.point == 0.0 ? 0.0 : (est.point > 0.0 ? 1e18 : -1e18);
    }
    const double half = 1.959963984540054 * est.se;
    est.ci_low = est.point - half;
    est.ci_high = est.point + half;
    return est;
}

Phase3Result phase3_graph(const SimulatorSpec& spec, const TimeSeriesPanel& obs,
                          const Phase3Options& opts, std::uint64_t seed) {
    const Eigen::Index d = obs.cols();
    if (d < 2) throw Error(Errc::InvalidSpec, "need at least 2 variables");
    if (opts.alpha <= 0.0 || opts.alpha >= 1.0) throw Error(Errc::InvalidSpec, "alpha in (0,1)");
    const std::vector<std::string> cols = variable_names(spec);
    if (static_cast<Eigen::Index>(cols.size()) != d) {
        throw Error(Errc::DimensionMismatch, "panel does not match simulator variables");
    }

    Phase3Result res;
    res.ate = Eigen::MatrixXd::Zero(d, d);
    res.z = Eigen::MatrixXd::Zero(d, d);
    res.p = Eigen::MatrixXd::Ones(d, d);
    Eigen::MatrixXd per_unit = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd se_per_unit = Eigen::MatrixXd::Zero(d, d);

    boost::math::normal norm01;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double mu_i = obs.values.col(i).mean();
        const double sd_i = stddev_of(obs.values.col(i));
        const double shift = opts.level_sigma * (sd_i > 0.0 ? sd_i : 1.0);
        DoRequest req;
        req.target = cols[static_cast<std::size_t>(i)];
        req.value = mu_i + shift;
        req.mode = opts.mode;
        req.horizon = opts.horizon;
        const InterventionDataset ds =
            simulate_do(spec, req, opts.m_per_edge,
                        derive_seed(seed, kTagPhase3, static_cast<std::uint64_t>(i)));
        for (Eigen::Index j = 0; j < d; ++j) {
            if (j == i) continue;
            const double obs_mean_j = obs.values.col(j).mean();
            const EffectEstimate est = estimate_ate(
                ds.outcomes[0].col(j), obs_mean_j, opts.bootstrap_b,
                derive_seed(seed, kTagPhase3, static_cast<std::uint64_t>(i) * 1000 +
                                                  static_cast<std::uint64_t>(j)));
            res.ate(i, j) = est.point;
            res.z(i, j) = est.z;
            const double az = std::min(std::abs(est.z), 37.0);  // cdf underflow guard
            res.p(i, j) = 2.0 * boost::math::cdf(boost::math::complement(norm01, az));
            per_unit(i, j) = est.point / shift;
            se_per_unit(i, j) = est.se / shift;
        }
    }

    const long n_tests = static_cast<long>(d) * (d - 1);
    double cutoff = opts.alpha;
    if (opts.correction == Multiplicity::Bonferroni) {
        cutoff = opts.alpha / static_cast<double>(n_tests);
    } else if (opts.correction == Multiplicity::BenjaminiHochberg) {
        std::vector<double> ps = offdiag_of(res.p);
        std::sort(ps.begin(), ps.end());
        cutoff = 0.0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const double bound =
                opts.alpha * static_cast<double>(k + 1) / static_cast<double>(n_tests);
            if (ps[k] <= bound) cutoff = ps[k];
        }
        if (cutoff == 0.0) cutoff = -1.0;  // nothing passes
    }
    res.alpha_adjusted = cutoff;

    res.graph.d = static_cast<int>(d);
    res.graph.dag_mode = false;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            if (res.p(i, j) <= cutoff) {
                Edge e;
                e.source = static_cast<int>(i);
                e.target = static_cast<int>(j);
                e.lag = opts.horizon;
                e.weight = per_unit(i, j);
                e.se = se_per_unit(i, j);
                e.p_value = res.p(i, j);
                res.graph.edges.push_back(e);
            }
        }
    }
    validate_graph(res.graph);
    return res;
}

EffectEstimate pair_effect(const SimulatorSpec& spec, const TimeSeriesPanel& obs,
                           const std::string& source, const std::string& target,
                           const Phase3Options& opts, std::uint64_t seed) {
    const Eigen::Index si = obs.col_index(source);
    const Eigen::Index tj = obs.col_index(target);
    if (tj < 0) throw Error(Errc::InvalidTarget, "target not a panel column: " + target);

    double mu_i, sd_i;
    if (si >= 0) {
        mu_i = obs.values.col(si).mean();
        sd_i = stddev_of(obs.values.col(si));
    } else if (spec.variant == SimVariant::ArrheniusBattery && source == "T") {
        mu_i = 0.5 * (spec.param("t_low", 25.0) + spec.param("t_high", 45.0));
        sd_i = 0.5 * (spec.param("t_high", 45.0) - spec.param("t_low", 25.0)) / std::sqrt(3.0);
    } else {
        throw Error(Errc::InvalidTarget, "source has no observational scale: " + source);
    }
    const double shift = opts.level_sigma * (sd_i > 0.0 ? sd_i : 1.0);

    DoRequest req;
    req.target = source;
    req.value = mu_i + shift;
    req.mode = opts.mode;
    req.horizon = opts.horizon;
    const InterventionDataset ds =
        simulate_do(spec, req, opts.m_per_edge, derive_seed(seed, kTagPhase3, 77));
    const Eigen::Index col = ds.outcome_col(target);
    if (col < 0) throw Error(Errc::InvalidTarget, "target missing from outcomes: " + target);
    EffectEstimate est = estimate_ate(ds.outcomes[0].col(col), obs.values.col(tj).mean(),
                                      opts.bootstrap_b, derive_seed(seed, kTagPhase3, 78));
    est.point /= shift;
    est.se /= shift;
    est.ci_low /= shift;
    est.ci_high /= shift;
    return est;
}

Eigen::MatrixXd phase0_scores(const TimeSeriesPanel& panel, int p, double ridge_lambda) {
    const Eigen::Index d = panel.cols();
    const Eigen::Index T = panel.rows();
    if (p < 1) throw Error(Errc::InvalidSpec, "p must be >= 1");
    if (T <= p + 2) throw Error(Errc::TooShort, "panel too short for screening");

    VarFitOptions vopts;
    const VarModel model = fit_var(panel, p, vopts);

    // Standardized lag-1 coefficient magnitudes.
    Eigen::VectorXd sd(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double s = stddev_of(panel.values.col(k));
        sd(k) = s > 0.0 ? s : 1.0;
    }
    Eigen::MatrixXd var_part = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            // coefficient of source i in equation j, standardized scale
            var_part(i, j) = std::abs(model.coeffs[0](j, i) * sd(i) / sd(j));
        }
    }

    // Ridge-Granger error reduction with p lags.
    const Eigen::Index n = T - p;
    Eigen::MatrixXd granger = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd y = panel.values.col(j).segment(p, n);
        Eigen::MatrixXd own(n, p);
        for (int l = 1; l <= p; ++l) own.col(l - 1) = panel.values.col(j).segment(p - l, n);
        const LinFit base = ridge_fit(own, y, ridge_lambda, true);
        for (Eigen::Index i = 0; i < d; ++i) {
            if (i == j) continue;
            Eigen::MatrixXd full(n, 2 * p);
            full.leftCols(p) = own;
            for (int l = 1; l <= p; ++l) {
                full.col(p + l - 1) = panel.values.col(i).segment(p - l, n);
            }
            const LinFit fit = ridge_fit(full, y, ridge_lambda, true);
            if (base.rss > 0.0) {
                granger(i, j) = std::max(0.0, (base.rss - fit.rss) / base.rss);
            }
        }
    }
    return 0.5 * var_part + 0.5 * granger;
}

Eigen::MatrixXd diff_granger_scores(const TimeSeriesPanel& panel, double ridge_lambda) {
    const Eigen::Index d = panel.cols();
    const Eigen::Index T = panel.rows();
    if (T < 10) throw Error(Errc::TooShort, "panel too short for derivative screening");
    const double dt = panel.dt.value_or(1.0);

    const Eigen::Index n = T - 1;
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXd dy =
            (panel.values.col(j).tail(n) - panel.values.col(j).head(n)) / dt;
        Eigen::MatrixXd own = panel.values.col(j).head(n);
        const LinFit base = ridge_fit(own, dy, ridge_lambda, true);
        for (Eigen::Index i = 0; i < d; ++i) {
            if (i == j) continue;
            Eigen::MatrixXd full(n, 2);
            full.col(0) = panel.values.col(j).head(n);
            full.col(1) = panel.values.col(i).head(n);
            const LinFit fit = ridge_fit(full, dy, ridge_lambda, true);
            if (base.rss > 0.0) {
                scores(i, j) = std::max(0.0, (base.rss - fit.rss) / base.rss);
            }
        }
    }
    return scores;
}

const char* pipeline_name(Pipeline p) {
    switch (p) {
        case Pipeline::SvarFm: return "svar_fm";
        case Pipeline::SvarFmDag: return "svar_fm_dag";
        case Pipeline::Dyn1: return "dyn1";
        case Pipeline::Dyn2: return "dyn2";
    }
    return "unknown";
}

double ljung_box_p(const Eigen::VectorXd& x, int lags) {
    const Eigen::Index T = x.size();
    if (lags < 1) throw Error(Errc::InvalidSpec, "lags must be >= 1");
    if (T <= lags + 2) throw Error(Errc::TooShort, "series too short for portmanteau test");
    Eigen::VectorXd z = x.array() - x.mean();
    const double denom = z.squaredNorm();
    if (denom <= 0.0) return 1.0;
    double q = 0.0;
    for (int k = 1; k <= lags; ++k) {
        double acc = 0.0;
        for (Eigen::Index t = 0; t + k < T; ++t) acc += z(t) * z(t + k);
        const double rho = acc / denom;
        q += rho * rho / static_cast<double>(T - k);
    }
    q *= static_cast<double>(T) * (static_cast<double>(T) + 2.0);
    boost::math::chi_squared chi(static_cast<double>(lags));
    return boost::math::cdf(boost::math::complement(chi, q));
}

RouteDecision route(const TimeSeriesPanel& panel, GraphPrior prior, long p_max) {
    const Eigen::Index d = panel.cols();
    RouteDecision dec;

    // Residual-nonlinearity check on squared VAR residuals.
    bool nonlinear = false;
    if (panel.rows() > 30) {
        const VarModel model = fit_var(panel, std::min<long>(p_max, panel.rows() / 4));
        const TimeSeriesPanel resid = residuals(model, panel);
        const double level = 0.05 / static_cast<double>(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const Eigen::VectorXd sq = resid.values.col(j).array().square();
            if (ljung_box_p(sq, 5) < level) nonlinear = true;
        }
    }
    dec.nonlinear_flag = nonlinear;

    switch (prior) {
        case GraphPrior::ExpectDag:
            dec.pipeline = Pipeline::SvarFmDag;
            dec.rationale = "acyclic prior: effect testing with DAG projection";
            break;
        case GraphPrior::ExpectCycles:
            dec.pipeline = d <= 3 ? Pipeline::Dyn1 : Pipeline::Dyn2;
            dec.rationale = d <= 3 ? "cyclic prior, small system: rank-average screens"
                                   : "cyclic prior, larger system: weighted ensemble";
            break;
        case GraphPrior::Unknown:
            if (nonlinear) {
                dec.pipeline = Pipeline::Dyn2;
                dec.rationale = "no prior, squared-residual autocorrelation: weighted ensemble";
            } else {
                dec.pipeline = Pipeline::SvarFm;
                dec.rationale = "no prior, residuals pass the nonlinearity check: effect testing";
            }
            break;
    }
    return dec;
}

long required_m(double sigma, double eps, double delta, int d) {
    if (sigma <= 0.0 || eps <= 0.0 || d < 2 || delta <= 0.0 || delta >= 1.0) {
        throw Error(Errc::InvalidSpec, "required_m needs sigma>0, eps>0, delta in (0,1), d>=2");
    }
    const double m =
        2.0 * sigma * sigma * std::log(2.0 * d * static_cast<double>(d) / delta) / (eps * eps);
    return static_cast<long>(std::ceil(m));
}

Eigen::MatrixXd dyn1_scores(const TimeSeriesPanel& panel) {
    const Eigen::MatrixXd a = phase0_scores(panel);
    const Eigen::MatrixXd b = diff_granger_scores(panel);
    const Eigen::Index d = panel.cols();

    const std::vector<double> ra = midranks(offdiag_of(a));
    const std::vector<double> rb = midranks(offdiag_of(b));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    std::size_t k = 0;
    const double n_off = static_cast<double>(ra.size());
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            out(i, j) = 0.5 * (ra[k] + rb[k]) / n_off;  // mean rank, scaled to (0, 1]
            ++k;
        }
    }
    return out;
}

Eigen::MatrixXd dyn2_scores(const std::vector<EnsembleComponent>& components,
                            double resid_abs_max) {
    if (components.empty()) throw Error(Errc::InvalidSpec, "ensemble needs components");
    const Eigen::Index d = components[0].scores.rows();
    for (const auto& c : components) {
        if (c.scores.rows() != d || c.scores.cols() != d) {
            throw Error(Errc::DimensionMismatch, "ensemble component shape mismatch");
        }
    }

    // Z-score each component over its off-diagonal cells.
    std::vector<std::vector<double>> zs;
    for (const auto& c : components) {
        std::vector<double> v = offdiag_of(c.scores);
        const double n = static_cast<double>(v.size());
        const double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double var = 0.0;
        for (double x : v) var += (x - mu) * (x - mu);
        const double sd = std::sqrt(var / std::max(1.0, n - 1.0));
        for (double& x : v) x = sd > 0.0 ? (x - mu) / sd : 0.0;
        zs.push_back(std::move(v));
    }

    const std::size_t n_off = zs[0].size();
    std::vector<double> mean_z(n_off, 0.0);
    for (const auto& v : zs) {
        for (std::size_t k = 0; k < n_off; ++k) mean_z[k] += v[k] / static_cast<double>(zs.size());
    }

    std::vector<double> w(components.size());
    for (std::size_t c = 0; c < components.size(); ++c) {
        w[c] = std::max(0.0, spearman(zs[c], mean_z));
        if (components[c].name == "diff_granger" && resid_abs_max < 1e-3) w[c] = 0.0;
    }
    double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (wsum <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0);
        wsum = static_cast<double>(w.size());
    }
    for (double& x : w) x /= wsum;

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            double acc = 0.0;
            for (std::size_t c = 0; c < components.size(); ++c) acc += w[c] * zs[c][k];
            out(i, j) = acc;
            ++k;
        }
    }
    return out;
}

CausalGraph scores_to_graph(const Eigen::MatrixXd& scores, double quantile) {
    if (scores.rows() != scores.cols()) throw Error(Errc::NotSquare, "score matrix must be square");
    if (quantile < 0.0 || quantile >= 1.0) throw Error(Errc::BadRange, "quantile in [0, 1)");
    std::vector<double> v = offdiag_of(scores);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double thr = sorted[static_cast<std::size_t>(quantile * (sorted.size() - 1))];

    CausalGraph g;
    g.d = static_cast<int>(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            if (i == j) continue;
            if (scores(i, j) > thr) {
                Edge e;
                e.source = static_cast<int>(i);
                e.target = static_cast<int>(j);
                e.lag = 0;
                e.weight = scores(i, j);
                g.edges.push_back(e);
            }
        }
    }
    return g;
}

DiscoveryReport run_discovery(const SimulatorSpec& spec, const TimeSeriesPanel& panel,
                              const DiscoveryOptions& opts, std::uint64_t seed) {
    const RouteDecision dec = route(panel, opts.prior, opts.p_max);
    DiscoveryReport report;
    report.pipeline = dec.pipeline;
    report.nonlinear_flag = dec.nonlinear_flag;
    report.rationale = dec.rationale;
    report.names = panel.names;

    switch (dec.pipeline) {
        case Pipeline::SvarFm:
        case Pipeline::SvarFmDag: {
            const Phase3Result p3 = phase3_graph(spec, panel, opts.phase3, seed);
            report.graph = p3.graph;
            report.scores = p3.z.cwiseAbs();
            report.graph.dag_mode = dec.pipeline == Pipeline::SvarFmDag;
            break;
        }
        case Pipeline::Dyn1: {
            report.scores = dyn1_scores(panel);
            report.graph = scores_to_graph(report.scores, opts.score_quantile);
            break;
        }
        case Pipeline::Dyn2: {
            const VarModel model = fit_var(panel, std::min<long>(opts.p_max, panel.rows() / 4));
            const TimeSeriesPanel resid = residuals(model, panel);
            const double resid_max = resid.values.cwiseAbs().maxCoeff();
            std::vector<EnsembleComponent> comps;
            comps.push_back({"var_screen", phase0_scores(panel)});
            comps.push_back({"diff_granger", diff_granger_scores(panel)});
            const Phase3Result p3 = phase3_graph(spec, panel, opts.phase3, seed);
            comps.push_back({"ate", p3.z.cwiseAbs()});
            if (opts.include_flow) {
                comps.push_back(
                    {"flow_ace", flow_ace_matrix(panel, opts.flow_train_steps, seed)});
            }
            report.scores = dyn2_scores(comps, resid_max);
            report.graph = scores_to_graph(report.scores, opts.score_quantile);
            break;
        }
    }
    validate_graph(report.graph);
    return report;
}

std::string discovery_report_json(const DiscoveryReport& report) {
    nlohmann::json j;
    j["format"] = "svarfm-discovery";
    j["version"] = 1;
    j["pipeline"] = pipeline_name(report.pipeline);
    j["nonlinear_flag"] = report.nonlinear_flag;
    j["rationale"] = report.rationale;
    j["names"] = report.names;
    j["graph"] = nlohmann::json::parse(graph_to_json(report.graph, report.names));
    std::vector<std::vector<double>> scores;
    for (Eigen::Index i = 0; i < report.scores.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < report.scores.cols(); ++c) row.push_back(report.scores(i, c));
        scores.push_back(std::move(row));
    }
    j["scores"] = scores;
    return j.dump(2);
}

}  // namespace svarfm
