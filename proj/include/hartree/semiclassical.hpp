#pragma once

#include "hartree/ground_state.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hartree {

// --- potentials ------------------------------------------------------------

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    static Box cube(int n, double half_width);
    bool contains(const Eigen::VectorXd& x, double slack = 0.0) const;
};

struct Potential {
    int dim = 3;
    std::string name;
    std::function<double(const Eigen::VectorXd&)> value;
    // analytic gradient, when known
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> analytic_gradient;

    double operator()(const Eigen::VectorXd& x) const { return value(x); }
    // analytic, else central differences with step 1e-5 (1 + |x|)
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    // central differences of the gradient
    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
};

// Catalog and expressions:
//   quadratic[:a]            a |x|^2
//   double_well[:a,b]        a (x1^2 - b^2)^2 + x2^2 + ... + xn^2
//   ring[:a,R]               a (x1^2 + x2^2 - R^2)^2 + x3^2 + ... + xn^2
//   constant[:mu]            mu
//   linear[:c1,...,cn]       c . x
//   expr:<text>              + - * / ^ exp cos over x1..xn
Potential make_potential(const std::string& spec, int n);

// Expression evaluator over x1..xn; throws std::invalid_argument on syntax errors.
class Expression {
public:
    Expression(const std::string& text, int n);
    double operator()(const Eigen::VectorXd& x) const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    int dim_;
};

struct PotentialCheck {
    double min_one_plus_v = 0; // inf-proxy of 1 + V on the samples
    bool finite = true;        // V and its gradient finite on the samples
    bool ok = false;
};

// 1 + V > 0 and finite derivatives on the box corners and `samples` random points.
PotentialCheck check_potential(const Potential& V, const Box& box, int samples = 2000, unsigned seed = 1);

// --- shell quadrature ------------------------------------------------------

// Product rule on S^(n-1): Gauss-Jacobi in each polar angle, trapezoid in the
// azimuth, exact for harmonics up to `degree`.
struct AngularRule {
    int dim = 3;
    int degree = 0;
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd weights;
    static AngularRule make(int n, int degree);
};

// --- soliton quantities ----------------------------------------------------

// C0 = int int U^2(x) U^2(y) / |x-y|^(n-2) = (n-2)|S^(n-1)| int (I2*U^2) U^2
double constant_C0(const GroundState& gs);
// the same from the symmetric double quadrature
double constant_C0_double_quadrature(const GroundState& gs);
// C1 = 1/4 int (I2*U^2) U^2, the constant in f(z) = C1 (1+mu)^(3-n/2)
double constant_C1(const GroundState& gs);
// int (I2*z^2) z^2 for z = rescale_state(gs, mu)
double rescaled_nonlocal(const GroundState& gs, double mu);

struct ShellOptions {
    int degree = 20;
    // relative disagreement allowed between the rule and one 4 degrees finer
    double refine_tol = 1e-8;
    bool refine = true;
};

class ShellDegreeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Integrals against z_xi^2, z = (1+V(eps xi)) U(sqrt(1+V(eps xi)) |x - xi|):
//   potential: int V(eps x) z^2, variation: int (V(eps x) - V(eps xi)) z^2,
//   squared: int (V(eps x) - V(eps xi))^2 z^2, mass: int z^2.
struct ShellMoments {
    double v_at_center = 0;
    double mass = 0;
    double potential = 0;
    double variation = 0;
    double squared = 0;
};

ShellMoments shell_moments(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                           const ShellOptions& opt = {});

// f_eps(z_xi) = 1/2 ||z||^2 - 1/4 int (I2*z^2) z^2 + 1/2 int V(eps x) z^2
double soliton_energy(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                      const ShellOptions& opt = {});
// (int |V(eps x) - V(eps xi)|^2 z_xi^2)^(1/2)
double gradient_bound_proxy(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                            const ShellOptions& opt = {});
// 1/2 int (V(eps x) - V(eps xi)) z_xi^2
double gamma_leading(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                     const ShellOptions& opt = {});
// C1 (1 + v)^(3 - n/2)
double leading_term(const GroundState& gs, double v);

// --- sweeps ----------------------------------------------------------------

struct SlopeFit {
    double slope = 0;
    double intercept = 0;
    double stderr_slope = 0;
    double residual = 0; // rms of the log-log residuals
    double lo() const { return slope - 2 * stderr_slope; }
    double hi() const { return slope + 2 * stderr_slope; }
};

// least squares of log y against log x
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepRow {
    double eps = 0;
    Eigen::VectorXd point; // physical point eps * xi
    double energy = 0;
    double leading = 0;
    double gradient_proxy = 0;
    double gamma = 0;
    double energy_error = 0; // |energy - leading|
};

struct PointFits {
    Eigen::VectorXd point;
    SlopeFit gradient_proxy;
    SlopeFit gamma;
    SlopeFit energy_error;
};

struct SemiclassicalReport {
    int dim = 3;
    std::string potential;
    std::vector<double> eps;
    std::vector<SweepRow> rows;
    std::vector<PointFits> fits;
    double C0 = 0;
    double C1 = 0;
};

std::vector<double> default_eps();

// Evaluates each quantity at xi = point / eps for every eps (strictly decreasing).
SemiclassicalReport semiclassical_sweep(const GroundState& gs, const Potential& V,
                                        const std::vector<Eigen::VectorXd>& points, const std::vector<double>& eps,
                                        const ShellOptions& opt = {});

// --- concentration prediction ----------------------------------------------

enum class CriticalKind { minimum, maximum, saddle, degenerate };
std::string to_string(CriticalKind k);

struct CriticalPoint {
    Eigen::VectorXd x;
    double value = 0;         // V(x)
    double h = 0;             // C1 (1 + V(x))^(3 - n/2)
    double gradient_norm = 0;
    Eigen::VectorXd hessian_eigenvalues;
    CriticalKind kind = CriticalKind::degenerate;
    // at scale eps, xi = x / eps; NaN at degenerate points (often a continuum)
    double gradient_proxy = std::numeric_limits<double>::quiet_NaN();
};

struct ConcentrationOptions {
    int starts = 256;
    unsigned seed = 7;
    double gradient_tol = 1e-9;
    double merge_distance = 1e-6;
};

struct ConcentrationResult {
    std::vector<CriticalPoint> points;
    std::vector<std::string> notes;
};

// Critical points of V in the box by multistart Newton on grad V = 0 (with a
// pseudo-inverse so critical manifolds are reached too), sorted by V.
ConcentrationResult predict_concentration(const GroundState& gs, const Potential& V, const Box& box, double eps,
                                          const ConcentrationOptions& opt = {}, const ShellOptions& shell = {});

// Argmin/argmax of V and of h on random samples of the box.
struct RankCheck {
    int argmin_v = -1, argmin_h = -1, argmax_v = -1, argmax_h = -1;
    bool agree() const { return argmin_v == argmin_h && argmax_v == argmax_h; }
};
RankCheck rank_invariance(const GroundState& gs, const Potential& V, const Box& box, int samples = 10000,
                          unsigned seed = 3);

} // namespace hartree
