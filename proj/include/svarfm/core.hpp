#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace svarfm {

enum class Errc {
    NonFinite,
    DuplicateName,
    EmptyPanel,
    TooShort,
    SingularDesign,
    DimensionMismatch,
    InvalidSpec,
    OutOfPhysicalRange,
    InvalidTarget,
    BadRange,
    UnsupportedVariant,
    IntegrationFailure,
    EmptySample,
    TooFewSamples,
    NotSquare,
    NonConvergence,
    Divergence,
    NoOracle,
    ParseError,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

const char* errc_name(Errc code);

/// T x d observation matrix with named variables; the common currency of all phases.
struct TimeSeriesPanel {
    Eigen::MatrixXd values;          // T rows (time), d columns (variables)
    std::vector<std::string> names;  // d unique identifiers
    std::optional<double> dt;        // sampling interval, arbitrary units

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    // Index of a named column, or -1 when absent.
    Eigen::Index col_index(const std::string& name) const;
};

// Validates panel invariants (finite entries, T >= 1, d >= 1, unique names)
// and returns the panel unchanged.
TimeSeriesPanel validate_panel(TimeSeriesPanel panel);

struct Edge {
    int source = 0;
    int target = 0;
    int lag = 0;  // 0 = contemporaneous
    double weight = 0.0;
    double se = 0.0;
    double p_value = 1.0;
};

/// Weighted, lag-annotated edge set with significance metadata.
struct CausalGraph {
    int d = 0;
    std::vector<Edge> edges;
    bool dag_mode = false;

    bool has_edge(int source, int target, int lag) const;
    const Edge* find_edge(int source, int target, int lag) const;
};

// Checks graph invariants: no self-edge at lag 0; when dag_mode is set the
// lag-0 subgraph must be acyclic. Returns the graph unchanged.
CausalGraph validate_graph(CausalGraph graph);

// Topological order of a lag-0 adjacency given as a boolean matrix;
// empty when the graph has a directed cycle.
std::vector<int> topological_order(const Eigen::MatrixXd& adjacency, double threshold = 0.0);

struct EffectEstimate {
    double point = 0.0;
    double se = 0.0;
    double z = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long m = 0;  // sample count
};

struct GraphMetrics {
    double f1 = 0.0;
    double tpr = 0.0;
    double fdr = 0.0;
    double auroc = 0.5;
    long shd = 0;
};

// Structure-recovery metrics over the full (source, target, lag) grid,
// excluding diagonal lag-0 cells. Edges compare as unweighted triples;
// AUROC scores cells by |weight| of the estimated edge (0 when absent).
GraphMetrics graph_metrics(const CausalGraph& estimated, const CausalGraph& truth);

// ---- CSV / DOT / JSON interfaces ----

// First row = variable names, subsequent rows = time steps, '.' decimal,
// no index column. Written with max_digits10 precision for exact round trips.
TimeSeriesPanel read_panel_csv(const std::string& path);
void write_panel_csv(const TimeSeriesPanel& panel, const std::string& path);

// DOT: lag-0 edges solid, lag>=1 dashed with label "lag=l".
std::string graph_to_dot(const CausalGraph& graph, const std::vector<std::string>& names);
std::string graph_to_json(const CausalGraph& graph, const std::vector<std::string>& names);
CausalGraph graph_from_json(const std::string& text, std::vector<std::string>* names_out = nullptr);

// ---- Randomness ----
//
// All randomness funnels through a single 64-bit seed expanded by a
// counter-based splitter, so parallel workers draw identical streams
// regardless of thread schedule.

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from (seed, s0, s1, s2).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t s0, std::uint64_t s1 = 0,
                          std::uint64_t s2 = 0);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t s0, std::uint64_t s1 = 0,
                    std::uint64_t s2 = 0) {
    return Rng(derive_seed(seed, s0, s1, s2));
}

// ---- Small shared regression helpers ----

struct LinFit {
    Eigen::VectorXd beta;  // includes intercept as last entry when fitted
    double rss = 0.0;
    bool intercept = false;
};

// Least squares of y on X (optionally with intercept); LDLT on normal equations.
LinFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept);

// Ridge with penalty lambda on all non-intercept coefficients.
LinFit ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                 bool intercept);

double mean_of(const Eigen::VectorXd& v);
double stddev_of(const Eigen::VectorXd& v);  // unbiased (n-1)

}  // namespace svarfm
