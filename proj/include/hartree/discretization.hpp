#pragma once

#include "hartree/radial_grid.hpp"

#include <Eigen/Dense>

#include <memory>

namespace hartree {

// Spectral Galerkin on the Gauss grid for r^(n-1) dr: Lagrange basis at the
// nodes, diagonal mass W = diag(weights), stiffness T = D^T W D (natural
// condition at r_max; regularity at 0 comes from the measure). -Delta_k u is
// represented by W^-1 T u + k(k+n-2)/r^2 u. Work is done in the scaled
// coordinates c = W^(1/2) u, where the operator is the symmetric matrix
// H = W^(-1/2) T W^(-1/2); this avoids dividing by the tiny weights near the
// origin.
struct Discretization {
    GridPtr grid;
    Eigen::MatrixXd D;
    Eigen::MatrixXd T;
    Eigen::VectorXd w;
    Eigen::VectorXd sqrt_w;
    Eigen::MatrixXd H;
    Eigen::MatrixXd K0; // rows of the k = 0 sector kernel

    static std::shared_ptr<const Discretization> make(GridPtr grid);

    int size() const { return grid->size(); }
    int dim() const { return grid->dim; }
    // k(k+n-2)/r^2 at the nodes
    Eigen::VectorXd centrifugal(int k) const;
    // -Delta_k u at the nodes
    Eigen::VectorXd laplacian(const Eigen::VectorXd& u, int k = 0) const;
    double weighted_norm(const Eigen::VectorXd& u) const;
    Eigen::VectorXd scaled(const Eigen::VectorXd& u) const { return sqrt_w.cwiseProduct(u); }
    Eigen::VectorXd unscaled(const Eigen::VectorXd& c) const { return c.cwiseQuotient(sqrt_w); }
};

// d/dr on a gauss_radial grid (any sector); the diagonal comes from the
// Jacobi equation.
Eigen::MatrixXd radial_differentiation(const RadialGrid& g);

using DiscretizationPtr = std::shared_ptr<const Discretization>;

} // namespace hartree
