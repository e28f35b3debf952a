#pragma once

#include "cqm/estimator.hpp"

#include <cstddef>
#include <vector>

namespace cqm {

/// N weighted joint scenarios. For the appointment problem each scenario is
/// one duration per slot.
struct ScenarioSet {
    std::vector<std::vector<double>> xi;
    WeightVector weights;

    std::size_t size() const { return xi.size(); }
    std::size_t dim() const { return xi.empty() ? 0 : xi.front().size(); }

    /// Throws InvalidArgument on ragged rows, non-finite entries or bad weights.
    void validate() const;
};

}  // namespace cqm
