#include "svarfm/flow_match.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "svarfm/discovery.hpp"

namespace svarfm {

namespace {

constexpr std::uint64_t kTagInit = 601;
constexpr std::uint64_t kTagTrain = 602;
constexpr std::uint64_t kTagSample = 603;
constexpr std::uint64_t kTagCheck = 604;

struct Activations {
    std::vector<Eigen::MatrixXd> a;  // a[0] = input, a[L] = output; rows = batch
};

Eigen::MatrixXd forward(const CfmModel& m, const Eigen::MatrixXd& input, Activations* acts) {
    const std::size_t L = m.layers.size();
    Eigen::MatrixXd a = input;
    if (acts) acts->a.assign(1, a);
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z =
            (a * m.layers[l].w.transpose()).rowwise() + m.layers[l].b.transpose();
        a = (l + 1 < L) ? z.array().tanh().matrix() : z;
        if (acts) acts->a.push_back(a);
    }
    return a;
}

struct Grads {
    std::vector<Dense> g;  // same shapes as layers
};

// Mean-squared flow-matching loss on one assembled batch; fills parameter
// gradients when grads is non-null.
double loss_and_grads(const CfmModel& m, const Eigen::MatrixXd& input,
                      const Eigen::MatrixXd& target, Grads* grads) {
    const std::size_t L = m.layers.size();
    Activations acts;
    const Eigen::MatrixXd out = forward(m, input, &acts);
    const Eigen::MatrixXd diff = out - target;
    const double n = static_cast<double>(input.rows());
    const double loss = diff.squaredNorm() / n;
    if (!grads) return loss;

    grads->g.resize(L);
    Eigen::MatrixXd delta = 2.0 * diff / n;  // dLoss/d(out)
    for (std::size_t l = L; l-- > 0;) {
        grads->g[l].w = delta.transpose() * acts.a[l];
        grads->g[l].b = delta.colwise().sum().transpose();
        if (l > 0) {
            const Eigen::MatrixXd& a_prev = acts.a[l];  // tanh output of layer l-1
            delta = (delta * m.layers[l].w).cwiseProduct(
                (1.0 - a_prev.array().square()).matrix());
        }
    }
    return loss;
}

Eigen::MatrixXd assemble_input(const Eigen::MatrixXd& x_t, const Eigen::VectorXd& t,
                               const Eigen::MatrixXd& cond) {
    Eigen::MatrixXd input(x_t.rows(), x_t.cols() + 1 + cond.cols());
    input.leftCols(x_t.cols()) = x_t;
    input.col(x_t.cols()) = t;
    input.rightCols(cond.cols()) = cond;
    return input;
}

// Greedy minibatch coupling: re-order noise rows so each data row gets the
// nearest unused noise draw.
void greedy_pair(Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1) {
    const Eigen::Index n = x1.rows();
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    Eigen::MatrixXd paired(n, x0.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index arg = -1;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (used[static_cast<std::size_t>(k)]) continue;
            const double dist = (x0.row(k) - x1.row(i)).squaredNorm();
            if (dist < best) {
                best = dist;
                arg = k;
            }
        }
        used[static_cast<std::size_t>(arg)] = true;
        paired.row(i) = x0.row(arg);
    }
    x0 = std::move(paired);
}

}  // namespace

CfmModel CfmModel::init(const CfmConfig& cfg, std::uint64_t seed) {
    if (cfg.x_dim < 1 || cfg.cond_dim < 0 || cfg.hidden < 1 || cfg.depth < 1) {
        throw Error(Errc::InvalidSpec, "bad flow model configuration");
    }
    CfmModel m;
    m.cfg = cfg;
    Rng rng = make_rng(seed, kTagInit);
    const int in_dim = cfg.x_dim + 1 + cfg.cond_dim;
    std::vector<int> dims;
    dims.push_back(in_dim);
    for (int l = 0; l < cfg.depth; ++l) dims.push_back(cfg.hidden);
    dims.push_back(cfg.x_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        Dense layer;
        layer.w.resize(fan_out, fan_in);
        for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = u(rng);
        }
        layer.b = Eigen::VectorXd::Zero(fan_out);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

Eigen::VectorXd CfmModel::velocity(const Eigen::VectorXd& x, double t,
                                   const Eigen::VectorXd& cond) const {
    Eigen::MatrixXd xt = x.transpose();
    Eigen::VectorXd tv(1);
    tv << t;
    Eigen::MatrixXd cm = cond.transpose();
    return forward(*this, assemble_input(xt, tv, cm), nullptr).row(0).transpose();
}

Eigen::MatrixXd CfmModel::velocity_batch(const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                                         const Eigen::MatrixXd& cond) const {
    if (x.rows() != t.size() || x.rows() != cond.rows()) {
        throw Error(Errc::DimensionMismatch, "velocity batch shapes disagree");
    }
    return forward(*this, assemble_input(x, t, cond), nullptr);
}

TrainStats train_cfm(CfmModel& model, const Eigen::MatrixXd& x1, const Eigen::MatrixXd& cond,
                     std::uint64_t seed) {
    const Eigen::Index n = x1.rows();
    const int xd = model.cfg.x_dim;
    if (x1.cols() != xd) throw Error(Errc::DimensionMismatch, "x1 width != x_dim");
    if (cond.rows() != n || cond.cols() != model.cfg.cond_dim) {
        throw Error(Errc::DimensionMismatch, "cond shape mismatch");
    }
    if (n < 2) throw Error(Errc::TooFewSamples, "need >= 2 training rows");

    // Adam state
    const std::size_t L = model.layers.size();
    std::vector<Dense> mom(L), vel(L);
    for (std::size_t l = 0; l < L; ++l) {
        mom[l].w = Eigen::MatrixXd::Zero(model.layers[l].w.rows(), model.layers[l].w.cols());
        mom[l].b = Eigen::VectorXd::Zero(model.layers[l].b.size());
        vel[l] = mom[l];
    }
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    TrainStats stats;
    const int batch = std::min<Eigen::Index>(model.cfg.batch, n);
    for (long step = 0; step < model.cfg.steps; ++step) {
        Rng rng = make_rng(seed, kTagTrain, static_cast<std::uint64_t>(step));
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        std::uniform_real_distribution<double> ut(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        Eigen::MatrixXd xb(batch, xd), cb(batch, model.cfg.cond_dim), x0(batch, xd);
        Eigen::VectorXd tb(batch);
        for (int r = 0; r < batch; ++r) {
            const Eigen::Index idx = pick(rng);
            xb.row(r) = x1.row(idx);
            cb.row(r) = cond.row(idx);
            tb(r) = ut(rng);
            for (int c = 0; c < xd; ++c) x0(r, c) = gauss(rng);
        }
        if (model.cfg.ot_pairing) greedy_pair(x0, xb);

        Eigen::MatrixXd xt(batch, xd), target = xb - x0;
        for (int r = 0; r < batch; ++r) {
            xt.row(r) = (1.0 - tb(r)) * x0.row(r) + tb(r) * xb.row(r);
        }
        Grads grads;
        const double loss = loss_and_grads(model, assemble_input(xt, tb, cb), target, &grads);
        if (!std::isfinite(loss)) throw Error(Errc::Divergence, "training loss became non-finite");

        const double t_adam = static_cast<double>(step + 1);
        const double corr1 = 1.0 - std::pow(b1, t_adam);
        const double corr2 = 1.0 - std::pow(b2, t_adam);
        for (std::size_t l = 0; l < L; ++l) {
            mom[l].w = b1 * mom[l].w + (1.0 - b1) * grads.g[l].w;
            mom[l].b = b1 * mom[l].b + (1.0 - b1) * grads.g[l].b;
            vel[l].w = b2 * vel[l].w + (1.0 - b2) * grads.g[l].w.cwiseProduct(grads.g[l].w);
            vel[l].b = b2 * vel[l].b + (1.0 - b2) * grads.g[l].b.cwiseProduct(grads.g[l].b);
            model.layers[l].w -=
                (model.cfg.lr * (mom[l].w / corr1).array() /
                 ((vel[l].w / corr2).array().sqrt() + eps))
                    .matrix();
            model.layers[l].b -=
                (model.cfg.lr * (mom[l].b / corr1).array() /
                 ((vel[l].b / corr2).array().sqrt() + eps))
                    .matrix();
        }
        if (step % 100 == 0) stats.loss_trace.push_back(loss);
        stats.final_loss = loss;
    }
    return stats;
}

namespace {

Eigen::VectorXd integrate_one(const CfmModel& model, const Eigen::VectorXd& cond,
                              int euler_steps, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x(model.cfg.x_dim);
    for (int k = 0; k < model.cfg.x_dim; ++k) x(k) = gauss(rng);
    const double dt = 1.0 / euler_steps;
    for (int s = 0; s < euler_steps; ++s) {
        const double t = s * dt;
        x += dt * model.velocity(x, t, cond);
    }
    return x;
}

}  // namespace

Eigen::MatrixXd sample_flow_serial(const CfmModel& model, const Eigen::VectorXd& cond, long n,
                                   int euler_steps, std::uint64_t seed) {
    if (n < 1 || euler_steps < 1) throw Error(Errc::InvalidSpec, "need n >= 1, steps >= 1");
    if (cond.size() != model.cfg.cond_dim) {
        throw Error(Errc::DimensionMismatch, "cond width mismatch");
    }
    Eigen::MatrixXd out(n, model.cfg.x_dim);
    for (long i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, kTagSample, static_cast<std::uint64_t>(i));
        out.row(i) = integrate_one(model, cond, euler_steps, rng).transpose();
    }
    return out;
}

Eigen::MatrixXd sample_flow(const CfmModel& model, const Eigen::VectorXd& cond, long n,
                            int euler_steps, std::uint64_t seed) {
    if (n < 1 || euler_steps < 1) throw Error(Errc::InvalidSpec, "need n >= 1, steps >= 1");
    if (cond.size() != model.cfg.cond_dim) {
        throw Error(Errc::DimensionMismatch, "cond width mismatch");
    }
    Eigen::MatrixXd out(n, model.cfg.x_dim);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, kTagSample, static_cast<std::uint64_t>(i));
        out.row(i) = integrate_one(model, cond, euler_steps, rng).transpose();
    }
    return out;
}

EffectEstimate flow_ace(const CfmModel& model, const Eigen::VectorXd& cond_hi,
                        const Eigen::VectorXd& cond_lo, int target_dim, long n, int euler_steps,
                        long bootstrap_b, std::uint64_t seed) {
    if (target_dim < 0 || target_dim >= model.cfg.x_dim) {
        throw Error(Errc::InvalidTarget, "target_dim out of range");
    }
    const Eigen::MatrixXd hi = sample_flow(model, cond_hi, n, euler_steps, derive_seed(seed, 1));
    const Eigen::MatrixXd lo = sample_flow(model, cond_lo, n, euler_steps, derive_seed(seed, 2));
    const Eigen::VectorXd h = hi.col(target_dim);
    const Eigen::VectorXd l = lo.col(target_dim);

    EffectEstimate est;
    est.m = n;
    est.point = h.mean() - l.mean();
    const double se_h = bootstrap_se(h, bootstrap_b, derive_seed(seed, 3));
    const double se_l = bootstrap_se(l, bootstrap_b, derive_seed(seed, 4));
    est.se = std::sqrt(se_h * se_h + se_l * se_l);
    est.z = est.se > 0.0 ? est.point / est.se
                         : (est.point == 0.0 ? 0.0 : (est.point > 0.0 ? 1e18 : -1e18));
    const double half = 1.959963984540054 * est.se;
    est.ci_low = est.point - half;
    est.ci_high = est.point + half;
    return est;
}

double gradient_check(const CfmModel& model, const Eigen::MatrixXd& x1,
                      const Eigen::MatrixXd& cond, std::uint64_t seed) {
    const Eigen::Index n = x1.rows();
    if (n < 2) throw Error(Errc::TooFewSamples, "need >= 2 rows for the check");
    Rng rng = make_rng(seed, kTagCheck);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int xd = model.cfg.x_dim;
    Eigen::MatrixXd x0(n, xd);
    Eigen::VectorXd tb(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        tb(r) = ut(rng);
        for (int c = 0; c < xd; ++c) x0(r, c) = gauss(rng);
    }
    Eigen::MatrixXd xt(n, xd);
    for (Eigen::Index r = 0; r < n; ++r) {
        xt.row(r) = (1.0 - tb(r)) * x0.row(r) + tb(r) * x1.row(r);
    }
    const Eigen::MatrixXd input = assemble_input(xt, tb, cond);
    const Eigen::MatrixXd target = x1 - x0;

    CfmModel probe = model;
    Grads grads;
    loss_and_grads(probe, input, target, &grads);

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        const Eigen::Index rows = probe.layers[l].w.rows();
        const Eigen::Index cols = probe.layers[l].w.cols();
        for (int probe_k = 0; probe_k < 5; ++probe_k) {
            const Eigen::Index r = (probe_k * 7919) % rows;
            const Eigen::Index c = (probe_k * 104729) % cols;
            const double orig = probe.layers[l].w(r, c);
            probe.layers[l].w(r, c) = orig + h;
            const double up = loss_and_grads(probe, input, target, nullptr);
            probe.layers[l].w(r, c) = orig - h;
            const double dn = loss_and_grads(probe, input, target, nullptr);
            probe.layers[l].w(r, c) = orig;
            const double numeric = (up - dn) / (2.0 * h);
            const double analytic = grads.g[l].w(r, c);
            const double rel = std::abs(numeric - analytic) /
                               std::max(1e-8, std::abs(numeric) + std::abs(analytic));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

Eigen::MatrixXd flow_ace_matrix(const TimeSeriesPanel& panel, long train_steps,
                                std::uint64_t seed) {
    const Eigen::Index d = panel.cols();
    const Eigen::Index T = panel.rows();
    if (T < 20) throw Error(Errc::TooShort, "panel too short for flow screening");

    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double mu = panel.values.col(i).mean();
        const double sd = stddev_of(panel.values.col(i));
        const double spread = sd > 0.0 ? sd : 1.0;

        CfmConfig cfg;
        cfg.x_dim = static_cast<int>(d);
        cfg.cond_dim = 1;
        cfg.steps = train_steps;
        CfmModel model = CfmModel::init(cfg, derive_seed(seed, 61, static_cast<std::uint64_t>(i)));
        Eigen::MatrixXd x1 = panel.values.bottomRows(T - 1);
        Eigen::MatrixXd c = panel.values.col(i).head(T - 1);
        train_cfm(model, x1, c, derive_seed(seed, 62, static_cast<std::uint64_t>(i)));

        Eigen::VectorXd hi(1), lo(1);
        hi << mu + spread;
        lo << mu - spread;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (j == i) continue;
            const EffectEstimate est =
                flow_ace(model, hi, lo, static_cast<int>(j), 400, 50, 200,
                         derive_seed(seed, 63, static_cast<std::uint64_t>(i) * 100 +
                                                  static_cast<std::uint64_t>(j)));
            scores(i, j) = std::abs(est.point) / (2.0 * spread);
        }
    }
    return scores;
}

std::string model_to_json(const CfmModel& model) {
    nlohmann::json j;
    j["format"] = "svarfm-flow";
    j["version"] = 1;
    j["x_dim"] = model.cfg.x_dim;
    j["cond_dim"] = model.cfg.cond_dim;
    j["hidden"] = model.cfg.hidden;
    j["depth"] = model.cfg.depth;
    j["lr"] = model.cfg.lr;
    j["batch"] = model.cfg.batch;
    j["steps"] = model.cfg.steps;
    j["ot_pairing"] = model.cfg.ot_pairing;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.layers) {
        nlohmann::json jl;
        std::vector<std::vector<double>> w;
        for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
            std::vector<double> row;
            for (Eigen::Index c = 0; c < layer.w.cols(); ++c) row.push_back(layer.w(r, c));
            w.push_back(std::move(row));
        }
        jl["w"] = w;
        std::vector<double> b;
        for (Eigen::Index k = 0; k < layer.b.size(); ++k) b.push_back(layer.b(k));
        jl["b"] = b;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

CfmModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw Error(Errc::ParseError, std::string("bad flow model JSON: ") + e.what());
    }
    if (j.value("format", "") != "svarfm-flow" || j.value("version", 0) != 1) {
        throw Error(Errc::ParseError, "unrecognized flow model format/version");
    }
    CfmModel m;
    m.cfg.x_dim = j.at("x_dim").get<int>();
    m.cfg.cond_dim = j.at("cond_dim").get<int>();
    m.cfg.hidden = j.at("hidden").get<int>();
    m.cfg.depth = j.at("depth").get<int>();
    m.cfg.lr = j.at("lr").get<double>();
    m.cfg.batch = j.at("batch").get<int>();
    m.cfg.steps = j.at("steps").get<long>();
    m.cfg.ot_pairing = j.at("ot_pairing").get<bool>();
    for (const auto& jl : j.at("layers")) {
        const auto w = jl.at("w").get<std::vector<std::vector<double>>>();
        const auto b = jl.at("b").get<std::vector<double>>();
        if (w.empty() || w.size() != b.size()) {
            throw Error(Errc::ParseError, "flow model layer shape corrupt");
        }
        Dense layer;
        layer.w.resize(static_cast<Eigen::Index>(w.size()),
                       static_cast<Eigen::Index>(w[0].size()));
        for (std::size_t r = 0; r < w.size(); ++r) {
            if (w[r].size() != w[0].size()) {
                throw Error(Errc::ParseError, "flow model layer rows ragged");
            }
            for (std::size_t c = 0; c < w[r].size(); ++c) {
                layer.w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c];
            }
        }
        layer.b.resize(static_cast<Eigen::Index>(b.size()));
        for (std::size_t k = 0; k < b.size(); ++k) layer.b(static_cast<Eigen::Index>(k)) = b[k];
        m.layers.push_back(std::move(layer));
    }
    if (m.layers.size() != static_cast<std::size_t>(m.cfg.depth) + 1) {
        throw Error(Errc::ParseError, "flow model layer count mismatch");
    }
    return m;
}

void save_model(const CfmModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path);
    out << model_to_json(model) << "\n";
}

CfmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace svarfm
