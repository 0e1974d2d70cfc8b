#pragma once

#include "hartree/radial_grid.hpp"

#include <Eigen/Dense>

namespace hartree::detail {

struct ShootingResult {
    Eigen::VectorXd profile;
    double lambda;     // eigen-parameter of the normalized problem
    double trust;      // radius (in r) up to which the nonlinear trajectory is used
    int bisections;
};

// Profile of -Delta U + (1+mu) U = (I2 * U^2) U at the grid nodes, from the
// normalized system u'' + (n-1)/s u' = -W u, W'' + (n-1)/s W' = -u^2, u(0) = 1.
ShootingResult shoot(const RadialGrid& grid, double mass_shift);

} // namespace hartree::detail
