#include "svarfm/intervention_data.hpp"

#include <algorithm>
#include <cmath>

namespace svarfm {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::SimulatorDo: return "simulator_do";
        case Provenance::VarForward: return "var_forward";
        case Provenance::DgpHard: return "dgp_hard";
        case Provenance::OdeSoft: return "ode_soft";
    }
    return "unknown";
}

Eigen::Index InterventionDataset::outcome_col(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
        throw Error(Errc::InvalidTarget, "no outcome column named '" + name + "'");
    return static_cast<Eigen::Index>(it - names.begin());
}

Eigen::VectorXd InterventionDataset::outcome_column(std::size_t vi, const std::string& name) const {
    if (vi >= outcomes.size())
        throw Error(Errc::BadRange, "value index out of range");
    return outcomes[vi].col(outcome_col(name));
}

InterventionDataset validate_intervention_dataset(InterventionDataset ds) {
    if (ds.target.empty())
        throw Error(Errc::InvalidSpec, "intervention dataset has no target");
    if (ds.values.empty())
        throw Error(Errc::InvalidSpec, "intervention dataset has no values");
    if (ds.values.size() != ds.outcomes.size())
        throw Error(Errc::InvalidSpec, "value / outcome block count mismatch");
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
        if (!std::isfinite(ds.values[i]))
            throw Error(Errc::InvalidSpec, "non-finite intervention value");
        for (std::size_t j = i + 1; j < ds.values.size(); ++j)
            if (ds.values[i] == ds.values[j])
                throw Error(Errc::InvalidSpec, "duplicate intervention value");
    }
    const Eigen::Index d = static_cast<Eigen::Index>(ds.names.size());
    if (d == 0) throw Error(Errc::InvalidSpec, "intervention dataset has no column names");
    for (const auto& block : ds.outcomes) {
        if (block.rows() == 0)
            throw Error(Errc::InvalidSpec, "empty outcome block");
        if (block.cols() != d)
            throw Error(Errc::InvalidSpec, "outcome block width does not match names");
        if (!block.allFinite())
            throw Error(Errc::NonFinite, "non-finite outcome draw");
    }
    return ds;
}

InterventionDataset merge_intervention_datasets(InterventionDataset base,
                                                const InterventionDataset& extra) {
    if (base.target != extra.target)
        throw Error(Errc::InvalidSpec, "cannot merge datasets with different targets");
    if (base.names != extra.names)
        throw Error(Errc::InvalidSpec, "cannot merge datasets with different columns");
    if (base.provenance != extra.provenance)
        throw Error(Errc::InvalidSpec, "cannot merge datasets with different provenance");
    for (std::size_t i = 0; i < extra.values.size(); ++i) {
        base.values.push_back(extra.values[i]);
        base.outcomes.push_back(extra.outcomes[i]);
    }
    return validate_intervention_dataset(std::move(base));
}

}  // namespace svarfm
