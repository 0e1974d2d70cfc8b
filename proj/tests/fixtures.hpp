#pragma once

#include "hartree/ground_state.hpp"

namespace testing {

// Converged ground states shared between test cases. At N = 800 the roundoff
// floor of the residual is near 1e-8, so larger grids use that tolerance.
const hartree::GroundState& solved(int n, hartree::SolverMethod method = hartree::SolverMethod::fixed_point,
                                   int N = 400);

} // namespace testing
