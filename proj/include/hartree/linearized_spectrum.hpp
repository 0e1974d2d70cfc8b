#pragma once

#include "hartree/ground_state.hpp"
#include "hartree/newton_potential.hpp"

#include <optional>
#include <utility>
#include <string>
#include <vector>

namespace hartree {

// L_k = -Delta_k + (1+mu) - (I2 * U^2) - 2 P_k with
// (P_k f)(r) = U(r) int G_k(r, rho) U(rho) f(rho) rho^(n-1) d rho.
// Sector k functions are written f = r^k g; since -Delta_k (r^k g) =
// r^k (-Delta_(n+2k) g), g lives on the Gauss grid for r^(n+2k-1) dr and is
// smooth at the origin. `matrix` acts on c = sqrt(wk) g, wk the weights of that
// measure, and is symmetric; c.norm() is the L^2(r^(n-1) dr) norm of f.
struct SectorOperator {
    int dim = 3;
    int k = 0;
    double mass_shift = 0;
    GridPtr grid; // sector grid
    Eigen::VectorXd sqrt_wk;
    Eigen::VectorXd rk; // r^k at the nodes
    Eigen::MatrixXd matrix;

    Eigen::VectorXd scaled(const Eigen::VectorXd& f) const { return sqrt_wk.cwiseProduct(f.cwiseQuotient(rk)); }
    Eigen::VectorXd unscaled(const Eigen::VectorXd& c) const { return rk.cwiseProduct(c.cwiseQuotient(sqrt_wk)); }
    double norm(const Eigen::VectorXd& f) const { return scaled(f).norm(); }
    // L_k f at the sector nodes
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
};

struct SectorOptions {
    bool drop_nonlocal = false;           // zero the P_k term
    std::optional<PowerKernel> kernel;    // replaces G_k in P_k
};

SectorOperator assemble_sector(const Discretization& disc, const Eigen::VectorXd& profile, int k, double mu,
                               const SectorOptions& opt = {});
SectorOperator assemble_sector(const GroundState& gs, int k, double mu = 0.0, const SectorOptions& opt = {});

struct SpectrumResult {
    int k = 0;
    GridPtr grid;
    Eigen::VectorXd eigenvalues;    // ascending
    Eigen::MatrixXd eigenvectors;   // radial profiles on the sector grid, unit norm
    Eigen::MatrixXd scaled_vectors; // the same as sector coordinates c
    int ground_eigenfunction_sign_changes = 0;
    // weighted mass of each eigenvector beyond r_max / 2; near 1 for states
    // that are artefacts of the finite box
    Eigen::VectorXd outer_mass;
};

SpectrumResult lowest_eigenpairs(const SectorOperator& op, int m);

// sign changes of f at the nodes, ignoring entries below `floor` * max|f|
int sign_changes(const Eigen::VectorXd& f, double floor = 1e-10);

// U' at the nodes of `at` from the integrated equation
// r^(n-1) U'(r) = int_0^r rho^(n-1) ((1+mu) - I2*U^2) U d rho,
// the derivative compatible with the weak form of the operator.
Eigen::VectorXd profile_derivative(const GroundState& gs, const RadialGrid& at);
Eigen::VectorXd profile_derivative(const GroundState& gs);

struct IdentityDefects {
    double lu;        // ||L U + 2 (I2*U^2) U|| / ||U||
    double l_ru;      // ||L(rU') + 2U - 4 (I2*U^2) U|| / ||U||
    double l_2u_ru;   // ||L(2U + rU') + 2U|| / ||U||
    double wrong_sign; // ||L(2U + rU') - 2U|| / ||U||
};

IdentityDefects check_identities(const GroundState& gs);
double check_identity_2U_rU(const GroundState& gs);

// ||L_1 U'|| / ||U'||
double zero_mode_residual(const GroundState& gs);

// Identity defects and zero-mode residual over a sequence of grid sizes.
struct RefinementPoint {
    int N = 0;
    bool converged = false;
    IdentityDefects defects{};
    double zero_mode_residual = 0;
    // L U + 2 (I2*U^2) U is the discrete equation itself, so on its own grid
    // it only shows the solver tolerance; this is the same defect of the
    // interpolated profile on the reference grid
    double lu_transferred = 0;
    std::string error;
};

// relative equation residual of gs.profile interpolated onto `fine`
double transferred_residual(const GroundState& gs, const Discretization& fine);

std::vector<RefinementPoint> refinement_study(int n, double r_max, const std::vector<int>& sizes, double tol,
                                              int reference_n = 400);
// log(e1/e2) / log(N2/N1)
double observed_order(double e1, int N1, double e2, int N2);
// indices of the first two consecutive converged points, if any
std::optional<std::pair<int, int>> first_converged_pair(const std::vector<RefinementPoint>& pts);

// <phi, (L_k - L_1) phi> = int (k(k+n-2) - (n-1))/r^2 phi^2 r^(n-1) dr
// + 2 int int U phi (G_1 - G_k) U phi, for a unit-norm phi sampled on the
// sector-k grid; `first` replaces G_1.
double compute_Wk(const GroundState& gs, const Eigen::VectorXd& phi, int k,
                  std::optional<PowerKernel> first = std::nullopt);
// the centrifugal part alone
double Wk_centrifugal(const GroundState& gs, const Eigen::VectorXd& phi, int k);

// The first-sector kernel as displayed next to W_k: r_< / r_>^(n-2), scale 1/n.
PowerKernel displayed_first_kernel(int n);

struct SectorRecord {
    int k = 0;
    double lambda0 = 0;
    double lambda1 = 0;
    double zero_mode_residual = 0; // k = 1 only
    double W_k = 0;                // k >= 2 only
    double W_k_displayed = 0;      // k >= 2, displayed first-sector kernel
    int sign_changes = 0;
    std::string error;
};

struct ReportOptions {
    // repeats the k = 0 gap at twice the grid size
    bool gap_study = true;
    bool drop_nonlocal = false;
};

struct NondegeneracyReport {
    int dim = 3;
    int grid_n = 0;
    int k_max = 0;
    std::vector<SectorRecord> sectors;
    double zero_mode_residual = 0;
    double tol_zero = 0;          // 100 * zero_mode_residual
    double k1_correlation = 0;    // |<phi_10, U'>| / (||phi_10|| ||U'||)
    double k0_min_abs = 0;        // min |lambda| in sector 0
    double k0_min_abs_refined = 0; // the same at 2N (gap study)
    double gap = 0;               // delta_0 = k0_min_abs / 2
    bool gap_stable = false;      // refined value within 5%
    bool nondegenerate = false;
    std::vector<std::string> failures;
};

// Eigenvalues of the sector operators built from the rescaled soliton
// (1+mu) U(sqrt(1+mu) r) with mass 1+mu, against (1+mu) times the bare ones.
struct ScalingRecord {
    int k = 0;
    int index = 0;
    double bare = 0;
    double scaled = 0;
    double rel_err = 0;
    bool localized = false; // outer mass of the bare eigenvector below 0.1
};

std::vector<ScalingRecord> hessian_scaling(const GroundState& gs, double mu, const std::vector<int>& ks, int m);

NondegeneracyReport nondegeneracy_report(const GroundState& gs, int k_max, const ReportOptions& opt = {});

std::string format_report(const NondegeneracyReport& r);
// k,lambda0,lambda1,zero_mode_residual,W_k
std::string format_spectrum_csv(const NondegeneracyReport& r);

} // namespace hartree
