#include "hartree/discretization.hpp"
#include "hartree/newton_potential.hpp"
#include "hartree/quadrature.hpp"

#include <stdexcept>

namespace hartree {

Eigen::MatrixXd radial_differentiation(const RadialGrid& g)
{
    if (g.scheme != GridScheme::gauss_radial) throw std::invalid_argument("radial_differentiation: gauss_radial grid required");
    Eigen::MatrixXd D = differentiation_matrix<double>(g.nodes, g.panels.front().bary);
    Eigen::VectorXd x = (2.0 / g.r_max) * g.nodes.array() - 1.0;
    D.diagonal() = (2.0 / g.r_max) * gauss_jacobi_diagonal<double>(x, 0.0, double(g.dim + 2 * g.sector - 1));
    return D;
}

std::shared_ptr<const Discretization> Discretization::make(GridPtr grid)
{
    if (grid->scheme != GridScheme::gauss_radial || grid->sector != 0)
        throw std::invalid_argument("Discretization: operators require the gauss_radial scheme");
    auto d = std::make_shared<Discretization>();
    d->grid = grid;
    d->w = grid->weights;
    d->D = radial_differentiation(*grid);
    d->T = d->D.transpose() * d->w.asDiagonal() * d->D;
    d->T = 0.5 * (d->T + d->T.transpose()).eval();
    d->sqrt_w = d->w.cwiseSqrt();
    // H = W^(-1/2) T W^(-1/2) = (W^(1/2) D W^(-1/2))^T (W^(1/2) D W^(-1/2))
    Eigen::MatrixXd B = d->sqrt_w.asDiagonal() * d->D * d->sqrt_w.cwiseInverse().asDiagonal();
    d->H = B.transpose() * B;
    d->H = 0.5 * (d->H + d->H.transpose()).eval();
    d->K0 = kernel_matrix(*grid, sector_kernel(grid->dim, 0));
    return d;
}

Eigen::VectorXd Discretization::centrifugal(int k) const
{
    const int n = dim();
    return (k * (k + n - 2)) / grid->nodes.array().square();
}

Eigen::VectorXd Discretization::laplacian(const Eigen::VectorXd& u, int k) const
{
    Eigen::VectorXd y = unscaled(H * scaled(u));
    if (k != 0) y += centrifugal(k).cwiseProduct(u);
    return y;
}

double Discretization::weighted_norm(const Eigen::VectorXd& u) const
{
    return std::sqrt(w.dot(u.cwiseProduct(u)));
}

} // namespace hartree
