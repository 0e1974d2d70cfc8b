#pragma once

#include "hartree/radial_grid.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace hartree {

// K(r, rho) = rho/(n-2) (1 - rho^(n-2)/r^(n-2)) for 0 < rho <= r.
double kernel_K(int n, double r, double rho);

// G_k(r, rho) = r_<^k / r_>^(k+n-2) / (2k+n-2)
double sector_kernel_value(int n, int k, double r, double rho);

// scale * r_<^inner / r_>^outer
struct PowerKernel {
    double inner;
    double outer;
    double scale;
};

PowerKernel sector_kernel(int n, int k);

// coef * integral_A^B rho^power p(rho) d rho added to row, where p is the grid
// interpolant of the values the row is applied to.
void accumulate_power_integral(const RadialGrid& g, double A, double B, double power, double coef,
                               Eigen::RowVectorXd& row);

// Row q with q.dot(h) = integral_0^r_max K(r, rho) h(rho) rho^(n-1+shift) d rho.
// r may lie anywhere in [0, inf).
Eigen::RowVectorXd kernel_row(const RadialGrid& g, double r, const PowerKernel& K, double shift = 0.0);
Eigen::MatrixXd kernel_matrix(const RadialGrid& g, const PowerKernel& K, double shift = 0.0);

// (I2 * f)(r) on the grid of f, via the split integral_I2 f - integral_0^r K f.
RadialFunction radial_newton_potential(const RadialFunction& f);
double newton_potential_at(const RadialFunction& f, double r);

// -(1/r^(n-1)) integral_0^r rho^(n-1) u2 d rho at every node
RadialFunction potential_radial_derivative(const RadialFunction& u2);

struct SectorCoefficient {
    int k;
    int m;
    RadialFunction f;
};

// g_km(r) = integral G_k(r, rho) f_km(rho) rho^(n-1) d rho, per coefficient.
std::vector<SectorCoefficient> multipole_potential(const RadialGrid& grid,
                                                   const std::vector<SectorCoefficient>& coeffs);
double sector_potential_at(int k, const RadialFunction& f, double r);

// --- spherical harmonics ---------------------------------------------------

int harmonic_dimension(int n, int k);
double gegenbauer(int k, double lambda, double t);
// Real orthonormal spherical harmonic on S^2, m in [-l, l].
double real_spherical_harmonic(int l, int m, const Eigen::Vector3d& unit);
// Partial sum over k <= K of the sector expansion of |x-y|^(2-n), built from
// G_k and the zonal addition formula.
double zonal_expansion(int n, int K, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Sector coefficients f_lm(r) = integral_S2 f(r w) Y_lm(w) dw for l <= K.
std::vector<SectorCoefficient> project_sectors_3d(const GridPtr& grid,
                                                  const std::function<double(const Eigen::Vector3d&)>& f,
                                                  int K, int angular_points = 48);
// sum over coefficients of g_lm(|x|) Y_lm(x/|x|), g from sector_potential_at
double evaluate_multipole_3d(const std::vector<SectorCoefficient>& coeffs, const Eigen::Vector3d& x);

// --- brute-force oracle ----------------------------------------------------

// Cell-centred samples of a function on a cube of m^3 cells.
struct BoxSamples {
    Eigen::Vector3d lower;
    double h = 0;
    int m = 0;
    Eigen::VectorXd values;

    static BoxSamples sample(const std::function<double(const Eigen::Vector3d&)>& f, const Eigen::Vector3d& center,
                             double half_width, int m);
    Eigen::Vector3d cell_center(int i, int j, int k) const;
};

double direct_newton_potential_nd(int n, const BoxSamples& samples, const Eigen::Vector3d& x);

} // namespace hartree
