#pragma once

#include <vector>

namespace ddsra {

struct AssignmentResult {
    std::vector<int> row_to_col;  // one column per row (square matrix)
    double cost = 0;
};

// Minimum-cost perfect matching on a square cost matrix, O(n^3) potentials
// method. Costs must be finite. Deterministic for identical input.
AssignmentResult hungarian_min_cost(const std::vector<std::vector<double>>& cost);

}  // namespace ddsra
