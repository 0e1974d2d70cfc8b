// Acceptance driver: one PASS/FAIL line per criterion, details indented above it.

#include "hartree/ground_state.hpp"
#include "hartree/linearized_spectrum.hpp"
#include "hartree/newton_potential.hpp"
#include "hartree/runner.hpp"
#include "hartree/semiclassical.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

using namespace hartree;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& what)
{
    std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <typename... Args>
void detail(const char* fmt, Args... args)
{
    std::printf("  ");
    std::printf(fmt, args...);
    std::printf("\n");
}

std::map<int, GroundState> fixed_point_states;

const GroundState& state(int n)
{
    return fixed_point_states.at(n);
}

Eigen::VectorXd axis_point(int n, double x1)
{
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p(0) = x1;
    return p;
}

void criteria_1_2()
{
    bool ok1 = true, ok2 = true;
    for (int n : {3, 4, 5}) {
        auto t0 = Clock::now();
        auto disc = Discretization::make(build_operator_grid(n, default_r_max(n), 400));
        SolverConfig fp;
        auto gs = solve_ground_state(disc, fp);
        SolverConfig sc;
        sc.method = SolverMethod::shooting;
        auto sh = solve_ground_state(disc, sc);
        double secs = seconds_since(t0);
        double diff = disc->weighted_norm(sh.profile.values - gs.profile.values) / disc->weighted_norm(gs.profile.values);
        detail("n=%d  ||U_shoot - U_fp|| / ||U|| = %.3e  (< 1e-6)  time %.2f s (< 60 s)", n, diff, secs);
        detail("n=%d  residual fixed point %.3e, shooting %.3e  (< 1e-8)", n, gs.residual, sh.residual);
        ok1 = ok1 && diff < 1e-6 && secs < 60;
        ok2 = ok2 && gs.residual < 1e-8;
        fixed_point_states.emplace(n, gs);
    }
    verdict(1, ok1, "shooting and fixed point agree to 1e-6 at N = 400 within 60 s, n = 3, 4, 5");
    verdict(2, ok2, "equation residual < 1e-8, n = 3, 4, 5");
}

void criterion_3()
{
    auto g = build_grid(3, 4.0, 128, GridScheme::composite_clenshaw_curtis);
    Eigen::VectorXd ind = (g->nodes.array() < 1.0).cast<double>();
    RadialFunction ball(g, ind);
    bool ok = true;
    for (double r : {0.0, 1.5, 2.0, 3.0}) {
        double exact = r == 0 ? 0.5 : 1.0 / (3 * r);
        double got = newton_potential_at(ball, r);
        detail("r=%.1f  radial %.15f  analytic %.15f  |diff| %.2e  (< 1e-8)", r, got, exact, std::abs(got - exact));
        ok = ok && std::abs(got - exact) < 1e-8;
    }
    auto s = BoxSamples::sample([](const Eigen::Vector3d& y) { return y.norm() < 1.0 ? 1.0 : 0.0; },
                                Eigen::Vector3d::Zero(), 2.2, 63);
    for (double r : {0.0, 1.5, 2.0}) {
        double oracle = direct_newton_potential_nd(3, s, Eigen::Vector3d(r, 0, 0));
        double got = newton_potential_at(ball, r);
        detail("r=%.1f  oracle %.6f  |radial - oracle| %.2e  (< 2e-3)", r, oracle, std::abs(got - oracle));
        ok = ok && std::abs(got - oracle) < 2e-3;
    }
    verdict(3, ok, "unit-ball potential matches 1/2 and 1/(3r) to 1e-8 and the direct oracle to 2e-3");
}

void criterion_4()
{
    auto st = multipole_study(8);
    bool monotone = true;
    for (size_t K = 0; K < st.max_error.size(); ++K) {
        detail("K_max=%zu  max relative error over %d points %.3e", K, int(st.rows.size() / st.max_error.size()),
               st.max_error[K]);
        if (K > 0 && st.max_error[K] > st.max_error[K - 1]) monotone = false;
    }
    double worst_ratio = 0;
    for (const auto& r : st.rows) worst_ratio = std::max(worst_ratio, r.ratio);
    detail("largest r_< / r_> %.3f  monotone %s", worst_ratio, monotone ? "yes" : "no");
    verdict(4, st.max_error.back() < 1e-4 && monotone && worst_ratio <= 0.5,
            "multipole error < 1e-4 at K_max = 8 for r_</r_> <= 0.5, decreasing in K_max");
}

void criterion_5()
{
    bool ok = true;
    for (int n : {3, 4, 5}) {
        auto id = check_identities(state(n));
        detail("n=%d N=400  LU %.2e  L(rU') %.2e  L(2U+rU') %.2e  (< 1e-4)", n, id.lu, id.l_ru, id.l_2u_ru);
        ok = ok && id.lu < 1e-4 && id.l_ru < 1e-4 && id.l_2u_ru < 1e-4;
        auto pts = refinement_study(n, default_r_max(n), {48, 56, 64, 72}, 1e-9);
        for (const auto& p : pts)
            if (!p.converged) detail("n=%d N=%d  solver did not converge", n, p.N);
        auto pair = first_converged_pair(pts);
        if (!pair) {
            detail("n=%d  no two consecutive converged grids", n);
            ok = false;
            continue;
        }
        const auto& a = pts[pair->first];
        const auto& b = pts[pair->second];
        double o_lu = observed_order(a.lu_transferred, a.N, b.lu_transferred, b.N);
        double o_ru = observed_order(a.defects.l_ru, a.N, b.defects.l_ru, b.N);
        double o_2u = observed_order(a.defects.l_2u_ru, a.N, b.defects.l_2u_ru, b.N);
        detail("n=%d N=%d->%d  LU(on N=400 grid) %.2e->%.2e order %.1f", n, a.N, b.N, a.lu_transferred,
               b.lu_transferred, o_lu);
        detail("n=%d N=%d->%d  L(rU') %.2e->%.2e order %.1f  L(2U+rU') %.2e->%.2e order %.1f  (>= 1.8)", n, a.N, b.N,
               a.defects.l_ru, b.defects.l_ru, o_ru, a.defects.l_2u_ru, b.defects.l_2u_ru, o_2u);
        ok = ok && o_lu >= 1.8 && o_ru >= 1.8 && o_2u >= 1.8;
    }
    verdict(5, ok, "identity defects < 1e-4 at N = 400 and shrinking at order >= 1.8");
}

void criterion_6()
{
    auto t0 = Clock::now();
    bool ok = true;
    for (int n : {3, 4, 5}) {
        auto rep = nondegeneracy_report(state(n), 8);
        const auto& s = rep.sectors;
        bool positive = true;
        double min_lambda = 1e300, min_w = 1e300;
        for (int k = 2; k <= 8; ++k) {
            positive = positive && s[k].lambda0 > 0 && s[k].W_k > 0;
            min_lambda = std::min(min_lambda, s[k].lambda0);
            min_w = std::min(min_w, s[k].W_k);
        }
        bool zero = std::abs(s[1].lambda0) < rep.tol_zero;
        bool corr = rep.k1_correlation > 0.999;
        bool gap = rep.k0_min_abs > rep.gap && rep.gap_stable;
        detail("n=%d  |lambda_10| %.2e < %.2e  corr %.6f  k=0 min|lambda| %.4f > gap %.4f (2N: %.4f)", n,
               std::abs(s[1].lambda0), rep.tol_zero, rep.k1_correlation, rep.k0_min_abs, rep.gap,
               rep.k0_min_abs_refined);
        detail("n=%d  min_{k=2..8} lambda_k0 %.4f  min W_k %.4f  verdict %s", n, min_lambda, min_w,
               rep.nondegenerate ? "nondegenerate" : "not established");
        ok = ok && zero && corr && gap && positive && rep.nondegenerate;
    }
    double secs = seconds_since(t0);
    detail("time %.1f s (< 300 s)", secs);
    verdict(6, ok && secs < 300, "nondegeneracy certificate for n = 3, 4, 5");
}

void criterion_7()
{
    const double mu = 0.3;
    bool ok = true;
    for (int n : {3, 4, 5}) {
        auto recs = hessian_scaling(state(n), mu, {0, 1, 2}, 4);
        double tol_zero = 100 * zero_mode_residual(state(n));
        for (int k : {0, 1, 2}) {
            int checked = 0;
            double worst = 0;
            const ScalingRecord* lowest = nullptr;
            for (const auto& r : recs) {
                if (r.k != k) continue;
                if (r.index == 0) lowest = &r;
                if (!r.localized) continue;
                ++checked;
                if (std::abs(r.bare) < tol_zero) {
                    ok = ok && std::abs(r.scaled) < (1 + mu) * tol_zero;
                    continue;
                }
                worst = std::max(worst, r.rel_err);
            }
            if (checked == 0) {
                // No eigenvalue of the sector below the default box: the lowest state sits at the
                // threshold of the essential spectrum and moves with the box as ~1/R^2. Enlarge the
                // box until that correction is below the tolerance.
                detail("n=%d k=%d  lowest %.8f is not localized on R=%g, rel err %.2e", n, k,
                       lowest ? lowest->bare : 0.0, default_r_max(n), lowest ? lowest->rel_err : 0.0);
                bool resolved = false;
                for (double f : {2.0, 4.0, 8.0}) {
                    double R = f * default_r_max(n);
                    int N = int(std::lround(400 * std::sqrt(f)));
                    SolverConfig cfg;
                    cfg.tol = 1e-9;
                    auto big = solve_ground_state(build_operator_grid(n, R, N), cfg);
                    auto r = hessian_scaling(big, mu, {k}, 1).at(0);
                    detail("n=%d k=%d  R=%g N=%d  lowest %.8f  rel err %.2e", n, k, R, N, r.bare, r.rel_err);
                    if (r.rel_err < 1e-4) {
                        resolved = true;
                        break;
                    }
                }
                ok = ok && resolved;
                continue;
            }
            detail("n=%d k=%d  %d resolved eigenvalues, max rel err %.2e  (< 1e-4)", n, k, checked, worst);
            ok = ok && worst < 1e-4;
        }
    }
    verdict(7, ok, "rescaled-soliton sector eigenvalues equal (1+mu) x bare for k = 0, 1, 2 at mu = 0.3");
}

void criterion_8()
{
    bool ok = true;
    const auto eps = default_eps();
    for (int n : {3, 4, 5}) {
        const auto& gs = state(n);
        auto quad = semiclassical_sweep(gs, make_potential("quadratic", n), {axis_point(n, 0), axis_point(n, 2.0)}, eps);
        auto dw = semiclassical_sweep(gs, make_potential("double_well", n), {axis_point(n, 1.0)}, eps);
        double regular = quad.fits[1].gradient_proxy.slope;
        double critical = dw.fits[0].gradient_proxy.slope;
        double gamma = quad.fits[0].gamma.slope;
        detail("n=%d  proxy exponent: quadratic at (2,0,..) %.3f in [0.9, 1.1]; double-well minimum (1,0,..) %.3f "
               "in [1.9, 2.1]", n, regular, critical);
        detail("n=%d  gamma exponent at the quadratic minimum %.3f in [1.9, 2.1]", n, gamma);
        ok = ok && regular >= 0.9 && regular <= 1.1 && critical >= 1.9 && critical <= 2.1 && gamma >= 1.9 &&
             gamma <= 2.1;
        double worst = 0;
        for (double m : {0.3, -0.2}) {
            Potential V = make_potential("constant:" + std::to_string(m), n);
            for (double e : eps) {
                Eigen::VectorXd xi = Eigen::VectorXd::Constant(n, 0.7) / e;
                worst = std::max(worst, std::abs(soliton_energy(gs, V, e, xi) / leading_term(gs, m) - 1));
            }
        }
        detail("n=%d  constant V: max |f_eps / (C1 (1+mu)^(3-n/2)) - 1| %.2e  (< 1e-6)", n, worst);
        ok = ok && worst < 1e-6;
    }
    verdict(8, ok, "eps exponents of the gradient proxy and gamma, and constant-V exactness");
}

void criterion_9()
{
    bool ok = true;
    for (int n : {3, 4, 5}) {
        const auto& gs = state(n);
        Potential V = make_potential("double_well", n);
        Box box = Box::cube(n, 2.0);
        auto res = predict_concentration(gs, V, box, 0.05);
        std::vector<Eigen::VectorXd> want = {axis_point(n, -1), axis_point(n, 1), axis_point(n, 0)};
        std::vector<CriticalKind> kinds = {CriticalKind::minimum, CriticalKind::minimum, CriticalKind::saddle};
        bool found = res.points.size() == 3;
        double worst = 0;
        if (found)
            for (int i = 0; i < 3; ++i) {
                worst = std::max(worst, (res.points[i].x - want[i]).norm());
                found = found && res.points[i].kind == kinds[i];
            }
        detail("n=%d  %zu critical points, max distance to (+-1,0,..), 0: %.2e  (< 1e-8)", n, res.points.size(), worst);
        ok = ok && found && worst < 1e-8;
        auto rk = rank_invariance(gs, V, box, 10000);
        detail("n=%d  10^4 samples: argmin V %d argmin h %d, argmax V %d argmax h %d", n, rk.argmin_v, rk.argmin_h,
               rk.argmax_v, rk.argmax_h);
        ok = ok && rk.agree();
    }
    verdict(9, ok, "double-well critical points recovered to 1e-8; h and V rank samples alike");
}

} // namespace

int main()
{
    auto t0 = Clock::now();
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    std::printf("%d of 9 criteria failed (%.1f s)\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
