#pragma once

#include "svarfm/core.hpp"

#include <string>
#include <vector>

namespace svarfm {

enum class Provenance { SimulatorDo, VarForward, DgpHard, OdeSoft };

const char* provenance_name(Provenance p);

/// Target variable, value grid, and post-intervention outcome draws per value.
struct InterventionDataset {
    std::string target;
    std::vector<double> values;             // pairwise distinct clamp levels
    std::vector<Eigen::MatrixXd> outcomes;  // per value: M x d draws
    std::vector<std::string> names;         // d outcome column names
    Provenance provenance = Provenance::SimulatorDo;
    std::uint64_t seed = 0;

    Eigen::Index outcome_col(const std::string& name) const;
    // Column `name` of the outcomes block for value index vi.
    Eigen::VectorXd outcome_column(std::size_t vi, const std::string& name) const;
};

// Invariants: values pairwise distinct, every outcomes block nonempty and of
// equal width. Returns the dataset unchanged.
InterventionDataset validate_intervention_dataset(InterventionDataset ds);

// Appends the blocks of `extra` (same target/provenance/names) to `base`.
InterventionDataset merge_intervention_datasets(InterventionDataset base,
                                                const InterventionDataset& extra);

}  // namespace svarfm
