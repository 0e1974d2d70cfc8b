#include "hartree/linearized_spectrum.hpp"
#include "hartree/parallel.hpp"
#include "hartree/quadrature.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hartree {

Eigen::VectorXd SectorOperator::apply(const Eigen::VectorXd& f) const
{
    return unscaled(matrix * scaled(f));
}

namespace {

struct SectorData {
    GridPtr grid;
    Eigen::VectorXd wk;
    Eigen::VectorXd rk;
    Eigen::VectorXd U;
    Eigen::VectorXd v;
    Eigen::MatrixXd H;
};

// values of the base-grid interpolant at the nodes of `at`
Eigen::VectorXd resample(const RadialGrid& base, const Eigen::VectorXd& f, const RadialGrid& at)
{
    Eigen::VectorXd out(at.size());
    for (int i = 0; i < at.size(); ++i) out(i) = base.interpolate(f, at.nodes(i));
    return out;
}

SectorData sector_data(const Discretization& disc, const Eigen::VectorXd& profile, int k)
{
    SectorData s;
    Eigen::VectorXd v = disc.K0 * profile.cwiseAbs2();
    if (k == 0) {
        s.grid = disc.grid;
        s.wk = disc.w;
        s.rk = Eigen::VectorXd::Ones(disc.size());
        s.U = profile;
        s.v = v;
        s.H = disc.H;
        return s;
    }
    const RadialGrid& base = *disc.grid;
    s.grid = build_sector_grid(base.dim, base.r_max, base.size(), k);
    const auto& g = *s.grid;
    s.rk = g.nodes.array().pow(k);
    s.wk = g.weights.cwiseProduct(s.rk.cwiseAbs2());
    s.U = resample(base, profile, g);
    s.v = resample(base, v, g);
    Eigen::VectorXd sw = s.wk.cwiseSqrt();
    Eigen::MatrixXd D = radial_differentiation(g);
    Eigen::MatrixXd B = sw.asDiagonal() * D * sw.cwiseInverse().asDiagonal();
    s.H = B.transpose() * B;
    s.H = 0.5 * (s.H + s.H.transpose()).eval();
    return s;
}

// The P_k pairing in c coordinates. Q acts on s = U g with the extra rho^k in
// its weight; interpolating U f = rho^k s instead is unstable on the sector
// grids (the Lagrange basis is huge near the origin for large k).
Eigen::MatrixXd nonlocal_block(const SectorData& s, const Eigen::MatrixXd& Q)
{
    Eigen::VectorXd sw = s.wk.cwiseSqrt();
    Eigen::VectorXd left = sw.cwiseProduct(s.U).cwiseQuotient(s.rk);
    Eigen::VectorXd right = s.U.cwiseQuotient(sw);
    return left.asDiagonal() * Q * right.asDiagonal();
}

Eigen::MatrixXd sector_kernel_matrix(const RadialGrid& g, const PowerKernel& K)
{
    return kernel_matrix(g, K, double(g.sector));
}

} // namespace

SectorOperator assemble_sector(const Discretization& disc, const Eigen::VectorXd& profile, int k, double mu,
                               const SectorOptions& opt)
{
    if (k < 0) throw std::invalid_argument("assemble_sector: k must be >= 0");
    if (!(1 + mu > 0)) throw std::invalid_argument("assemble_sector: requires 1 + mu > 0");
    if (profile.size() != disc.size()) throw std::invalid_argument("assemble_sector: profile length mismatch");

    SectorData s = sector_data(disc, profile, k);
    SectorOperator op;
    op.dim = disc.dim();
    op.k = k;
    op.mass_shift = mu;
    op.grid = s.grid;
    op.sqrt_wk = s.wk.cwiseSqrt();
    op.rk = s.rk;
    op.matrix = s.H;
    op.matrix.diagonal() += ((1 + mu) - s.v.array()).matrix();
    if (!opt.drop_nonlocal) {
        Eigen::MatrixXd Q = k == 0 && !opt.kernel ? disc.K0
                                                  : sector_kernel_matrix(*s.grid, opt.kernel.value_or(sector_kernel(disc.dim(), k)));
        Eigen::MatrixXd P = nonlocal_block(s, Q);
        op.matrix -= P + P.transpose();
    }
    return op;
}

SectorOperator assemble_sector(const GroundState& gs, int k, double mu, const SectorOptions& opt)
{
    return assemble_sector(*gs.disc, gs.profile.values, k, mu, opt);
}

int sign_changes(const Eigen::VectorXd& f, double floor)
{
    double cut = floor * f.cwiseAbs().maxCoeff();
    int count = 0, last = 0;
    for (int i = 0; i < f.size(); ++i) {
        if (std::abs(f(i)) <= cut) continue;
        int s = f(i) > 0 ? 1 : -1;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

SpectrumResult lowest_eigenpairs(const SectorOperator& op, int m)
{
    if (m < 1) throw std::invalid_argument("lowest_eigenpairs: m must be >= 1");
    if (!op.grid) throw std::invalid_argument("lowest_eigenpairs: operator has no grid");
    const int N = op.matrix.rows();
    m = std::min(m, N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix);
    if (es.info() != Eigen::Success) throw std::runtime_error("lowest_eigenpairs: eigensolve failed");

    SpectrumResult r;
    r.k = op.k;
    r.grid = op.grid;
    r.eigenvalues = es.eigenvalues().head(m);
    r.scaled_vectors = es.eigenvectors().leftCols(m);
    r.eigenvectors.resize(N, m);
    r.outer_mass = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd c = r.scaled_vectors.col(j);
        // positive mean: sum w f = (sqrt_wk r^-k) . c
        if (op.sqrt_wk.cwiseQuotient(op.rk).dot(c) < 0) c = -c;
        r.scaled_vectors.col(j) = c;
        r.eigenvectors.col(j) = op.unscaled(c);
        for (int i = 0; i < N; ++i)
            if (op.grid->nodes(i) > 0.5 * op.grid->r_max) r.outer_mass(j) += c(i) * c(i);
    }
    // Counted on the unit vector c, ignoring entries at the rounding level of
    // an eigenvector computed to backward error eps ||A||.
    const Eigen::VectorXd& ev = es.eigenvalues();
    double gap = N > 1 ? ev(1) - ev(0) : 1.0;
    double noise = 10 * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff() / std::max(gap, 1e-300);
    r.ground_eigenfunction_sign_changes = sign_changes(r.scaled_vectors.col(0), std::max(noise, 1e-10));
    return r;
}

Eigen::VectorXd profile_derivative(const GroundState& gs, const RadialGrid& at)
{
    const RadialGrid& g = *gs.disc->grid;
    const int n = g.dim;
    Eigen::VectorXd src = ((1 + gs.mass_shift) - gs.potential.values.array()).matrix().cwiseProduct(gs.profile.values);
    Eigen::VectorXd du(at.size());
    parallel_for(at.size(), [&](int i) {
        double r = at.nodes(i);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.size());
        accumulate_power_integral(g, 0.0, r, n - 1.0, 1.0, row);
        du(i) = row.dot(src) / std::pow(r, n - 1);
    });
    return du;
}

Eigen::VectorXd profile_derivative(const GroundState& gs)
{
    return profile_derivative(gs, *gs.disc->grid);
}

IdentityDefects check_identities(const GroundState& gs)
{
    const auto& d = *gs.disc;
    auto L = assemble_sector(gs, 0, gs.mass_shift);
    const Eigen::VectorXd& U = gs.profile.values;
    Eigen::VectorXd vU = gs.potential.values.cwiseProduct(U);
    Eigen::VectorXd rU = d.grid->nodes.cwiseProduct(profile_derivative(gs));
    double nu = d.weighted_norm(U);
    Eigen::VectorXd L2 = L.apply(2 * U + rU);
    IdentityDefects out;
    out.lu = d.weighted_norm(L.apply(U) + 2 * vU) / nu;
    out.l_ru = d.weighted_norm(L.apply(rU) + 2 * U - 4 * vU) / nu;
    out.l_2u_ru = d.weighted_norm(L2 + 2 * U) / nu;
    out.wrong_sign = d.weighted_norm(L2 - 2 * U) / nu;
    return out;
}

double check_identity_2U_rU(const GroundState& gs)
{
    return check_identities(gs).l_2u_ru;
}

namespace {

double zero_mode_residual(const SectorOperator& L1, const GroundState& gs)
{
    Eigen::VectorXd c = L1.scaled(profile_derivative(gs, *L1.grid));
    return (L1.matrix * c).norm() / c.norm();
}

} // namespace

double zero_mode_residual(const GroundState& gs)
{
    return zero_mode_residual(assemble_sector(gs, 1, gs.mass_shift), gs);
}

double transferred_residual(const GroundState& gs, const Discretization& fine)
{
    Eigen::VectorXd u(fine.size());
    for (int i = 0; i < u.size(); ++i) u(i) = gs.profile(fine.grid->nodes(i));
    return equation_residual(fine, u, gs.mass_shift);
}

std::vector<RefinementPoint> refinement_study(int n, double r_max, const std::vector<int>& sizes, double tol,
                                              int reference_n)
{
    auto fine = Discretization::make(build_operator_grid(n, r_max, reference_n));
    std::vector<RefinementPoint> pts(sizes.size());
    parallel_for(int(sizes.size()), [&](int i) {
        auto& p = pts[i];
        p.N = sizes[i];
        try {
            SolverConfig cfg;
            cfg.tol = tol;
            auto gs = solve_ground_state(build_operator_grid(n, r_max, p.N), cfg);
            p.defects = check_identities(gs);
            p.zero_mode_residual = zero_mode_residual(gs);
            p.lu_transferred = transferred_residual(gs, *fine);
            p.converged = true;
        } catch (const std::exception& e) {
            p.error = e.what();
        }
    }, 4);
    return pts;
}

double observed_order(double e1, int N1, double e2, int N2)
{
    return std::log(e1 / e2) / std::log(double(N2) / N1);
}

std::optional<std::pair<int, int>> first_converged_pair(const std::vector<RefinementPoint>& pts)
{
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i].converged && pts[i + 1].converged) return std::make_pair(int(i), int(i + 1));
    return std::nullopt;
}

PowerKernel displayed_first_kernel(int n)
{
    return {1.0, double(n - 2), 1.0 / n};
}

double Wk_centrifugal(const GroundState& gs, const Eigen::VectorXd& phi, int k)
{
    const int n = gs.dim;
    auto g = build_sector_grid(n, gs.disc->grid->r_max, gs.disc->size(), k);
    if (phi.size() != g->size()) throw std::invalid_argument("Wk_centrifugal: phi must live on the sector grid");
    double a = k * (k + n - 2) - (n - 1);
    return a * g->weights.dot(phi.cwiseAbs2().cwiseQuotient(g->nodes.cwiseAbs2()));
}

double compute_Wk(const GroundState& gs, const Eigen::VectorXd& phi, int k, std::optional<PowerKernel> first)
{
    if (k < 2) throw std::invalid_argument("compute_Wk: k must be >= 2");
    SectorData s = sector_data(*gs.disc, gs.profile.values, k);
    if (phi.size() != s.grid->size()) throw std::invalid_argument("compute_Wk: phi must live on the sector grid");
    Eigen::VectorXd c = s.wk.cwiseSqrt().cwiseProduct(phi.cwiseQuotient(s.rk));
    if (std::abs(c.norm() - 1) > 1e-8) throw std::invalid_argument("compute_Wk: phi must be normalized");
    const int n = gs.dim;
    Eigen::MatrixXd Q = sector_kernel_matrix(*s.grid, first.value_or(sector_kernel(n, 1))) -
                        sector_kernel_matrix(*s.grid, sector_kernel(n, k));
    return Wk_centrifugal(gs, phi, k) + 2 * c.dot(nonlocal_block(s, Q) * c);
}

namespace {

double k0_min_abs(const GroundState& gs, bool drop)
{
    SectorOptions o;
    o.drop_nonlocal = drop;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble_sector(gs, 0, gs.mass_shift, o).matrix,
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("k = 0 eigensolve failed");
    return es.eigenvalues().cwiseAbs().minCoeff();
}

} // namespace

std::vector<ScalingRecord> hessian_scaling(const GroundState& gs, double mu, const std::vector<int>& ks, int m)
{
    if (!(1 + mu > 0)) throw std::invalid_argument("hessian_scaling: requires 1 + mu > 0");
    RadialFunction z = rescale_state(gs, mu);
    std::vector<std::vector<ScalingRecord>> per(ks.size());
    parallel_for(int(ks.size()), [&](int i) {
        const int k = ks[i];
        auto bare = lowest_eigenpairs(assemble_sector(gs, k, gs.mass_shift), m);
        auto sc = lowest_eigenpairs(assemble_sector(*gs.disc, z.values, k, gs.mass_shift + mu), m);
        const double f = (1 + gs.mass_shift + mu) / (1 + gs.mass_shift);
        for (int j = 0; j < bare.eigenvalues.size(); ++j) {
            ScalingRecord r;
            r.k = k;
            r.index = j;
            r.bare = bare.eigenvalues(j);
            r.scaled = sc.eigenvalues(j);
            r.rel_err = std::abs(r.scaled / (f * r.bare) - 1);
            r.localized = bare.outer_mass(j) < 0.1;
            per[i].push_back(r);
        }
    });
    std::vector<ScalingRecord> out;
    for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
    return out;
}

NondegeneracyReport nondegeneracy_report(const GroundState& gs, int k_max, const ReportOptions& opt)
{
    if (k_max < 2) throw std::invalid_argument("nondegeneracy_report: k_max must be >= 2");
    const auto& d = *gs.disc;
    NondegeneracyReport rep;
    rep.dim = gs.dim;
    rep.grid_n = d.size();
    rep.k_max = k_max;
    rep.sectors.resize(k_max + 1);

    SectorOptions so;
    so.drop_nonlocal = opt.drop_nonlocal;
    std::vector<SpectrumResult> spectra(k_max + 1);
    std::vector<SectorOperator> ops(k_max + 1);
    parallel_for(k_max + 1, [&](int k) {
        auto& rec = rep.sectors[k];
        rec.k = k;
        try {
            ops[k] = assemble_sector(gs, k, gs.mass_shift, so);
            spectra[k] = lowest_eigenpairs(ops[k], 2);
            rec.lambda0 = spectra[k].eigenvalues(0);
            rec.lambda1 = spectra[k].eigenvalues(1);
            rec.sign_changes = spectra[k].ground_eigenfunction_sign_changes;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });

    // k = 1: zero mode
    auto& r1 = rep.sectors[1];
    if (r1.error.empty()) {
        Eigen::VectorXd c = ops[1].scaled(profile_derivative(gs, *ops[1].grid));
        rep.zero_mode_residual = (ops[1].matrix * c).norm() / c.norm();
        r1.zero_mode_residual = rep.zero_mode_residual;
        rep.tol_zero = 100 * rep.zero_mode_residual;
        rep.k1_correlation = std::abs(spectra[1].scaled_vectors.col(0).dot(c)) / c.norm();
    }
    parallel_for(std::max(0, k_max - 1), [&](int j) {
        const int k = j + 2;
        auto& rec = rep.sectors[k];
        if (!rec.error.empty()) return;
        try {
            Eigen::VectorXd phi = spectra[k].eigenvectors.col(0);
            rec.W_k = compute_Wk(gs, phi, k);
            rec.W_k_displayed = compute_Wk(gs, phi, k, displayed_first_kernel(gs.dim));
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });

    // k = 0: kernel gap
    if (rep.sectors[0].error.empty()) {
        rep.k0_min_abs = k0_min_abs(gs, opt.drop_nonlocal);
        rep.k0_min_abs_refined = rep.k0_min_abs;
        if (opt.gap_study) {
            try {
                SolverConfig cfg;
                cfg.tol = std::max(gs.tol, 1e-8);
                cfg.mass_shift = gs.mass_shift;
                auto fine = solve_ground_state(build_operator_grid(gs.dim, d.grid->r_max, 2 * d.size()), cfg);
                rep.k0_min_abs_refined = k0_min_abs(fine, opt.drop_nonlocal);
            } catch (const std::exception& e) {
                rep.failures.push_back(std::string("gap study: ") + e.what());
            }
        }
        rep.gap = 0.5 * std::min(rep.k0_min_abs, rep.k0_min_abs_refined);
        rep.gap_stable = std::abs(rep.k0_min_abs_refined / rep.k0_min_abs - 1) < 0.05;
    }

    auto fail = [&](const std::string& s) { rep.failures.push_back(s); };
    for (const auto& rec : rep.sectors)
        if (!rec.error.empty()) fail("sector " + std::to_string(rec.k) + ": " + rec.error);
    if (r1.error.empty() && !(std::abs(r1.lambda0) < rep.tol_zero)) fail("k=1 lowest eigenvalue is not a zero mode");
    if (rep.sectors[0].error.empty()) {
        if (!(rep.k0_min_abs > rep.gap && rep.k0_min_abs > rep.tol_zero)) fail("k=0 sector has a near-zero eigenvalue");
        if (!rep.gap_stable) fail("k=0 gap not stable under grid doubling");
    }
    for (int k = 2; k <= k_max; ++k) {
        const auto& rec = rep.sectors[k];
        if (rec.error.empty() && !(rec.lambda0 > 0)) fail("lambda_" + std::to_string(k) + ",0 not positive");
        if (rec.error.empty() && !(rec.W_k > 0)) fail("W_" + std::to_string(k) + " not positive");
    }
    rep.nondegenerate = rep.failures.empty();
    return rep;
}

std::string format_report(const NondegeneracyReport& r)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "nondegeneracy n=" << r.dim << " N=" << r.grid_n << " k_max=" << r.k_max << '\n';
    os << "zero_mode_residual " << r.zero_mode_residual << '\n';
    os << "tol_zero " << r.tol_zero << '\n';
    os << "k1_correlation " << r.k1_correlation << '\n';
    os << "k0_min_abs " << r.k0_min_abs << '\n';
    os << "k0_min_abs_refined " << r.k0_min_abs_refined << '\n';
    os << "gap " << r.gap << '\n';
    os << "gap_stable " << (r.gap_stable ? "yes" : "no") << '\n';
    for (const auto& s : r.sectors) {
        os << "sector k=" << s.k;
        if (!s.error.empty()) {
            os << " error=\"" << s.error << "\"\n";
            continue;
        }
        os << " lambda0=" << s.lambda0 << " lambda1=" << s.lambda1 << " sign_changes=" << s.sign_changes;
        if (s.k == 1) os << " zero_mode_residual=" << s.zero_mode_residual;
        if (s.k >= 2) os << " W_k=" << s.W_k << " W_k_displayed_kernel=" << s.W_k_displayed;
        os << '\n';
    }
    for (const auto& f : r.failures) os << "failure " << f << '\n';
    os << "verdict " << (r.nondegenerate ? "nondegenerate" : "not_certified") << '\n';
    return os.str();
}

std::string format_spectrum_csv(const NondegeneracyReport& r)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "k,lambda0,lambda1,zero_mode_residual,W_k\n";
    for (const auto& s : r.sectors) {
        os << s.k << ',';
        if (s.error.empty()) os << s.lambda0 << ',' << s.lambda1;
        else os << ',';
        os << ',';
        if (s.k == 1 && s.error.empty()) os << s.zero_mode_residual;
        os << ',';
        if (s.k >= 2 && s.error.empty()) os << s.W_k;
        os << '\n';
    }
    return os.str();
}

} // namespace hartree
