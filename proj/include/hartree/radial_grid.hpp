#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hartree {

// gauss_radial: Gauss rule for the full measure r^(n-1) dr on (0, r_max)
// (Gauss-Jacobi with exponents 0 and n-1); the operator discretization uses it.
enum class GridScheme { gauss_legendre_mapped, composite_clenshaw_curtis, gauss_radial };

std::string to_string(GridScheme s);
GridScheme parse_scheme(const std::string& name);

double sphere_area(int n);

// Default truncation radius per dimension (30, 25, 20 for n = 3, 4, 5).
double default_r_max(int n);

// A contiguous block of nodes sharing one polynomial interpolant.
struct Panel {
    double lo;
    double hi;
    int first;
    int count;
    Eigen::VectorXd bary;
};

// Quadrature for integral_0^r_max f(r) r^(n-1) dr. The weights carry the
// r^(n-1) factor but not |S^(n-1)|.
struct RadialGrid {
    int dim = 3;
    double r_max = 0;
    GridScheme scheme = GridScheme::gauss_legendre_mapped;
    // gauss_radial only: nodes are Gauss for r^(n+2k-1) dr; weights still
    // integrate f r^(n-1) (exactly when f = r^(2k) times a polynomial)
    int sector = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    Eigen::VectorXd plain_weights; // weights without r^(n-1)
    std::vector<Panel> panels;

    int size() const { return static_cast<int>(nodes.size()); }
    // one global interpolant through all nodes
    bool spectral() const { return scheme != GridScheme::composite_clenshaw_curtis; }
    std::string descriptor() const;
    const Panel& panel_at(double r) const;

    // row such that row.dot(values) is the interpolant at r (inside [0, r_max]).
    Eigen::RowVectorXd interpolation_row(double r) const;
    // adds scale * interpolation row at r into out
    void accumulate_interpolation(double r, double scale, Eigen::RowVectorXd& out) const;
    double interpolate(const Eigen::VectorXd& values, double r) const;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr build_grid(int n, double r_max, int N, GridScheme scheme = GridScheme::gauss_legendre_mapped);
GridPtr build_operator_grid(int n, double r_max, int N);
// operator grid for functions r^k g(r), g smooth
GridPtr build_sector_grid(int n, double r_max, int N, int k);

struct ExponentialTail {
    double amplitude;
    double rate;
};

struct RadialFunction {
    GridPtr grid;
    Eigen::VectorXd values;
    std::optional<ExponentialTail> tail;

    RadialFunction() = default;
    RadialFunction(GridPtr g, Eigen::VectorXd v, std::optional<ExponentialTail> t = std::nullopt);

    // interpolant inside the grid, tail model (or zero) beyond r_max
    double operator()(double r) const;
};

bool same_grid(const RadialGrid& a, const RadialGrid& b);

// integral_r^inf c e^(-tau s) s^(n-1) ds
double exponential_tail_integral(int n, double r, const ExponentialTail& t);

double integrate_radial(const RadialGrid& grid, const RadialFunction& f);

// Fits c e^(-tau r) to the positive values on the last `count` nodes.
std::optional<ExponentialTail> fit_exponential_tail(const RadialGrid& grid, const Eigen::VectorXd& values,
                                                    int count = 12);

} // namespace hartree
