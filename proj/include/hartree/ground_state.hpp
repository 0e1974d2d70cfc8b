#pragma once

#include "hartree/discretization.hpp"
#include "hartree/radial_grid.hpp"

#include <string>
#include <utility>

namespace hartree {

enum class SolverMethod { shooting, fixed_point };

std::string to_string(SolverMethod m);
SolverMethod parse_method(const std::string& name);

struct SolverConfig {
    SolverMethod method = SolverMethod::fixed_point;
    double tol = 1e-10;
    int max_iter = 2000;
    double damping = 0.5;
    // solves -Delta u + (1 + mass_shift) u = (I2 * u^2) u
    double mass_shift = 0.0;
};

struct GroundState {
    int dim = 3;
    DiscretizationPtr disc;
    RadialFunction profile;
    RadialFunction potential;
    double l2_mass = 0;
    double energy = 0;
    double nu = 0;
    double residual = 0;
    double mass_shift = 0;
    SolverMethod method = SolverMethod::fixed_point;
    double tol = 0;
    int iterations = 0;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual(best_residual) {}
    double best_residual;
};

GroundState solve_ground_state(GridPtr grid, const SolverConfig& cfg);
GroundState solve_ground_state(DiscretizationPtr disc, const SolverConfig& cfg);

// Builds a GroundState record (potential, mass, energy, nu, residual) around a
// given profile.
GroundState make_ground_state(DiscretizationPtr disc, const Eigen::VectorXd& profile, double mass_shift,
                              SolverMethod method, double tol, int iterations);

// ||-Delta U + (1+mu) U - (I2 * U^2) U||_W / ||U||_W
double equation_residual(const GroundState& gs);
double equation_residual(const Discretization& disc, const Eigen::VectorXd& u, double mass_shift = 0.0);

// F(u) = 1/2 int |grad u|^2 + (1+mu) u^2 - 1/4 int (I2 * u^2) u^2
double energy_functional(const Discretization& disc, const Eigen::VectorXd& u, double mass_shift = 0.0);

// integral over R^n of (I2 * u^2) u^2, two ways: pairing u^2 with the
// potential from the Lemma-form radial reduction, and the symmetric double
// quadrature 2 int u^2(r) int_{rho<r} G_0(r, rho) u^2(rho).
double nonlocal_pairing(const GroundState& gs);
double nonlocal_double_quadrature(const GroundState& gs);

// nu^(n-2) = Gamma((n-2)/2) / (4 pi^(n/2)) * mass
double decay_constant(int n, double l2_mass);

struct DecayFit {
    double rate;     // minus the fitted slope against Phi(r)
    double nu_check; // relative rms defect of the fit
    int points;
};

// Fits log U + (n-1)/2 log r against Phi(r) = int_nu^r sqrt(1 - (nu/s)^(n-2)) ds.
DecayFit fit_decay(const GroundState& gs, std::pair<double, double> window);
// Exponential rate of |U'| on the window.
double derivative_decay_rate(const GroundState& gs, std::pair<double, double> window);

// z(r) = (1+mu) U(sqrt(1+mu) r) on the grid of gs.
RadialFunction rescale_state(const GroundState& gs, double mu);

// --- cache file ------------------------------------------------------------
// line 1: grid descriptor
// line 2: method=<m> tol=<t> residual=<r> mass=<m> nu=<v> energy=<e>
// then one "r value" row per node, 17 significant digits.
struct GroundStateCache {
    std::string grid;
    SolverMethod method = SolverMethod::fixed_point;
    double tol = 0;
    double residual = 0;
    double mass = 0;
    double nu = 0;
    double energy = 0;
    Eigen::VectorXd r;
    Eigen::VectorXd values;
};

// %.17g
std::string format_real(double x);
std::string format_cache(const GroundState& gs);
GroundStateCache parse_cache(const std::string& text);
// Rebuilds the record on disc; throws if the grid does not match the cache.
GroundState restore_ground_state(const GroundStateCache& c, DiscretizationPtr disc);

} // namespace hartree
