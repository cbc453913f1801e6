#include "svarfm/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace svarfm {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::NonFinite: return "NonFinite";
        case Errc::DuplicateName: return "DuplicateName";
        case Errc::EmptyPanel: return "EmptyPanel";
        case Errc::TooShort: return "TooShort";
        case Errc::SingularDesign: return "SingularDesign";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::OutOfPhysicalRange: return "OutOfPhysicalRange";
        case Errc::InvalidTarget: return "InvalidTarget";
        case Errc::BadRange: return "BadRange";
        case Errc::UnsupportedVariant: return "UnsupportedVariant";
        case Errc::IntegrationFailure: return "IntegrationFailure";
        case Errc::EmptySample: return "EmptySample";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::NotSquare: return "NotSquare";
        case Errc::NonConvergence: return "NonConvergence";
        case Errc::Divergence: return "Divergence";
        case Errc::NoOracle: return "NoOracle";
        case Errc::ParseError: return "ParseError";
    }
    return "Unknown";
}

Eigen::Index TimeSeriesPanel::col_index(const std::string& name) const {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(names.size()); ++j) {
        if (names[static_cast<std::size_t>(j)] == name) return j;
    }
    return -1;
}

TimeSeriesPanel validate_panel(TimeSeriesPanel panel) {
    if (panel.values.rows() < 1 || panel.values.cols() < 1) {
        throw Error(Errc::EmptyPanel, "panel must have T >= 1 rows and d >= 1 columns");
    }
    if (static_cast<Eigen::Index>(panel.names.size()) != panel.values.cols()) {
        throw Error(Errc::DimensionMismatch, "names count does not match column count");
    }
    if (!panel.values.allFinite()) {
        throw Error(Errc::NonFinite, "panel contains NaN or infinite entries");
    }
    std::set<std::string> seen;
    for (const auto& n : panel.names) {
        if (!seen.insert(n).second) {
            throw Error(Errc::DuplicateName, "duplicate variable name: " + n);
        }
    }
    if (panel.dt && *panel.dt <= 0.0) {
        throw Error(Errc::InvalidSpec, "dt must be positive");
    }
    return panel;
}

bool CausalGraph::has_edge(int source, int target, int lag) const {
    return find_edge(source, target, lag) != nullptr;
}

const Edge* CausalGraph::find_edge(int source, int target, int lag) const {
    for (const auto& e : edges) {
        if (e.source == source && e.target == target && e.lag == lag) return &e;
    }
    return nullptr;
}

std::vector<int> topological_order(const Eigen::MatrixXd& adjacency, double threshold) {
    const Eigen::Index d = adjacency.rows();
    if (adjacency.cols() != d) {
        throw Error(Errc::NotSquare, "adjacency matrix must be square");
    }
    std::vector<int> indegree(static_cast<std::size_t>(d), 0);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i != j && std::abs(adjacency(i, j)) > threshold) {
                ++indegree[static_cast<std::size_t>(j)];
            }
        }
    }
    std::vector<int> order;
    std::vector<int> frontier;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (indegree[static_cast<std::size_t>(j)] == 0) frontier.push_back(static_cast<int>(j));
    }
    while (!frontier.empty()) {
        // Smallest index first keeps the order deterministic.
        std::sort(frontier.begin(), frontier.end());
        int v = frontier.front();
        frontier.erase(frontier.begin());
        order.push_back(v);
        for (Eigen::Index j = 0; j < d; ++j) {
            if (j != v && std::abs(adjacency(v, j)) > threshold) {
                if (--indegree[static_cast<std::size_t>(j)] == 0) {
                    frontier.push_back(static_cast<int>(j));
                }
            }
        }
    }
    if (static_cast<Eigen::Index>(order.size()) != d) return {};
    return order;
}

CausalGraph validate_graph(CausalGraph graph) {
    for (const auto& e : graph.edges) {
        if (e.source < 0 || e.source >= graph.d || e.target < 0 || e.target >= graph.d) {
            throw Error(Errc::DimensionMismatch, "edge endpoint out of range");
        }
        if (e.lag < 0) throw Error(Errc::InvalidSpec, "negative lag");
        if (e.lag == 0 && e.source == e.target) {
            throw Error(Errc::InvalidSpec, "self-edge at lag 0");
        }
    }
    if (graph.dag_mode) {
        Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(graph.d, graph.d);
        for (const auto& e : graph.edges) {
            if (e.lag == 0) adj(e.source, e.target) = 1.0;
        }
        if (topological_order(adj).empty() && graph.d > 0) {
            throw Error(Errc::InvalidSpec, "dag_mode graph has a lag-0 cycle");
        }
    }
    return graph;
}

GraphMetrics graph_metrics(const CausalGraph& estimated, const CausalGraph& truth) {
    if (estimated.d != truth.d) {
        throw Error(Errc::DimensionMismatch, "graphs have different variable counts");
    }
    const int d = truth.d;
    int max_lag = 0;
    for (const auto& e : estimated.edges) max_lag = std::max(max_lag, e.lag);
    for (const auto& e : truth.edges) max_lag = std::max(max_lag, e.lag);

    long tp = 0, fp = 0, fn = 0;
    std::vector<std::pair<double, int>> scored;  // (score, is_positive)
    for (int lag = 0; lag <= max_lag; ++lag) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (lag == 0 && i == j) continue;
                const bool in_truth = truth.has_edge(i, j, lag);
                const Edge* est = estimated.find_edge(i, j, lag);
                if (est && in_truth) ++tp;
                if (est && !in_truth) ++fp;
                if (!est && in_truth) ++fn;
                scored.emplace_back(est ? std::abs(est->weight) : 0.0, in_truth ? 1 : 0);
            }
        }
    }

    GraphMetrics m;
    const long est_n = tp + fp;
    const long truth_n = tp + fn;
    const double precision = est_n > 0 ? static_cast<double>(tp) / est_n : (truth_n == 0 ? 1.0 : 0.0);
    m.tpr = truth_n > 0 ? static_cast<double>(tp) / truth_n : (est_n == 0 ? 1.0 : 0.0);
    m.f1 = (precision + m.tpr) > 0 ? 2.0 * precision * m.tpr / (precision + m.tpr) : 0.0;
    if (est_n == 0 && truth_n == 0) m.f1 = 1.0;
    m.fdr = est_n > 0 ? static_cast<double>(fp) / est_n : 0.0;
    m.shd = fp + fn;

    // Rank-based Mann-Whitney AUROC with midrank ties.
    long pos = 0, neg = 0;
    for (const auto& [s, y] : scored) {
        (void)s;
        if (y) ++pos; else ++neg;
    }
    if (pos == 0 || neg == 0) {
        m.auroc = 0.5;
    } else {
        std::sort(scored.begin(), scored.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double rank_sum_pos = 0.0;
        std::size_t i = 0;
        while (i < scored.size()) {
            std::size_t j = i;
            while (j < scored.size() && scored[j].first == scored[i].first) ++j;
            const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
            for (std::size_t k = i; k < j; ++k) {
                if (scored[k].second) rank_sum_pos += midrank;
            }
            i = j;
        }
        m.auroc = (rank_sum_pos - 0.5 * static_cast<double>(pos) * (pos + 1)) /
                  (static_cast<double>(pos) * static_cast<double>(neg));
    }
    return m;
}

TimeSeriesPanel read_panel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::EmptyPanel, "empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    TimeSeriesPanel panel;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) panel.names.push_back(field);
    }
    const std::size_t d = panel.names.size();
    if (d == 0) throw Error(Errc::EmptyPanel, "no columns in " + path);

    std::vector<double> data;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t cols = 0;
        while (std::getline(ss, field, ',')) {
            try {
                data.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw Error(Errc::ParseError, "bad number '" + field + "' in " + path);
            }
            ++cols;
        }
        if (cols != d) throw Error(Errc::DimensionMismatch, "ragged row in " + path);
        ++rows;
    }
    panel.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                data[t * d + j];
        }
    }
    return validate_panel(std::move(panel));
}

void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::ParseError, "cannot write " + path);
    out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t j = 0; j < panel.names.size(); ++j) {
        out << (j ? "," : "") << panel.names[j];
    }
    out << '\n';
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        for (Eigen::Index j = 0; j < panel.cols(); ++j) {
            out << (j ? "," : "") << panel.values(t, j);
        }
        out << '\n';
    }
}

std::string graph_to_dot(const CausalGraph& graph, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "digraph causal {\n";
    for (int j = 0; j < graph.d; ++j) {
        const std::string label =
            j < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(j)]
                                               : "x" + std::to_string(j);
        out << "  n" << j << " [label=\"" << label << "\"];\n";
    }
    out.precision(6);
    for (const auto& e : graph.edges) {
        out << "  n" << e.source << " -> n" << e.target << " [";
        if (e.lag == 0) {
            out << "style=solid";
        } else {
            out << "style=dashed, label=\"lag=" << e.lag << "\"";
        }
        out << ", weight_attr=\"" << e.weight << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

std::string graph_to_json(const CausalGraph& graph, const std::vector<std::string>& names) {
    json j;
    j["d"] = graph.d;
    j["dag_mode"] = graph.dag_mode;
    j["names"] = names;
    j["edges"] = json::array();
    for (const auto& e : graph.edges) {
        json je;
        je["source"] = e.source;
        je["target"] = e.target;
        je["lag"] = e.lag;
        je["weight"] = e.weight;
        je["se"] = e.se;
        je["p_value"] = e.p_value;
        if (e.source < static_cast<int>(names.size())) {
            je["source_name"] = names[static_cast<std::size_t>(e.source)];
        }
        if (e.target < static_cast<int>(names.size())) {
            je["target_name"] = names[static_cast<std::size_t>(e.target)];
        }
        j["edges"].push_back(je);
    }
    return j.dump(2);
}

CausalGraph graph_from_json(const std::string& text, std::vector<std::string>* names_out) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw Error(Errc::ParseError, std::string("bad graph json: ") + e.what());
    }
    // Discovery reports nest the graph under "graph"; accept both layouts.
    if (j.contains("graph") && j["graph"].is_object()) {
        j = j["graph"];
    }
    if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<int>() < 1) {
        throw Error(Errc::ParseError, "graph json needs a positive integer 'd'");
    }
    CausalGraph g;
    g.d = j["d"].get<int>();
    g.dag_mode = j.value("dag_mode", false);
    if (names_out && j.contains("names")) {
        *names_out = j["names"].get<std::vector<std::string>>();
    }
    try {
        for (const auto& je : j.value("edges", json::array())) {
            Edge e;
            e.source = je.at("source").get<int>();
            e.target = je.at("target").get<int>();
            e.lag = je.value("lag", 0);
            e.weight = je.value("weight", 0.0);
            e.se = je.value("se", 0.0);
            e.p_value = je.value("p_value", 1.0);
            g.edges.push_back(e);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("bad edge entry: ") + e.what());
    }
    return validate_graph(std::move(g));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t s0, std::uint64_t s1,
                          std::uint64_t s2) {
    std::uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ splitmix64(s0 + 0x1ULL));
    x = splitmix64(x ^ splitmix64(s1 + 0x2ULL));
    x = splitmix64(x ^ splitmix64(s2 + 0x3ULL));
    return x;
}

LinFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept) {
    if (X.rows() != y.size()) {
        throw Error(Errc::DimensionMismatch, "X rows do not match y length");
    }
    Eigen::MatrixXd Z;
    if (intercept) {
        Z.resize(X.rows(), X.cols() + 1);
        Z << X, Eigen::VectorXd::Ones(X.rows());
    } else {
        Z = X;
    }
    Eigen::MatrixXd G = Z.transpose() * Z;
    Eigen::VectorXd b = Z.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> solver(G);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::SingularDesign, "normal equations not solvable");
    }
    LinFit fit;
    fit.beta = solver.solve(b);
    fit.rss = (y - Z * fit.beta).squaredNorm();
    fit.intercept = intercept;
    return fit;
}

LinFit ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                 bool intercept) {
    if (X.rows() != y.size()) {
        throw Error(Errc::DimensionMismatch, "X rows do not match y length");
    }
    Eigen::MatrixXd Z;
    if (intercept) {
        Z.resize(X.rows(), X.cols() + 1);
        Z << X, Eigen::VectorXd::Ones(X.rows());
    } else {
        Z = X;
    }
    Eigen::MatrixXd G = Z.transpose() * Z;
    for (Eigen::Index k = 0; k < X.cols(); ++k) G(k, k) += lambda;  // intercept unpenalized
    Eigen::VectorXd b = Z.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> solver(G);
    if (solver.info() != Eigen::Success) {
        throw Error(Errc::SingularDesign, "ridge system not solvable");
    }
    LinFit fit;
    fit.beta = solver.solve(b);
    fit.rss = (y - Z * fit.beta).squaredNorm();
    fit.intercept = intercept;
    return fit;
}

double mean_of(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw Error(Errc::EmptySample, "mean of empty vector");
    return v.mean();
}

double stddev_of(const Eigen::VectorXd& v) {
    if (v.size() < 2) throw Error(Errc::TooFewSamples, "stddev needs at least 2 values");
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace svarfm
