#include "hartree/newton_potential.hpp"
#include "hartree/parallel.hpp"
#include "hartree/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace hartree {

namespace {

const Rule1D<double>& cached_gauss_legendre(int m)
{
    thread_local std::map<int, Rule1D<double>> cache;
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, gauss_legendre<double>(m)).first;
    return it->second;
}

void require_finite(const Eigen::VectorXd& v, const char* what)
{
    if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

} // namespace

double kernel_K(int n, double r, double rho)
{
    if (!(r > 0) || !(rho > 0)) throw std::invalid_argument("kernel_K: radii must be positive");
    if (rho > r) throw std::invalid_argument("kernel_K: requires rho <= r");
    return rho / (n - 2) * (1.0 - std::pow(rho / r, n - 2));
}

double sector_kernel_value(int n, int k, double r, double rho)
{
    if (!(r > 0) || !(rho > 0)) throw std::invalid_argument("sector_kernel_value: radii must be positive");
    if (k < 0) throw std::invalid_argument("sector_kernel_value: k must be >= 0");
    double lo = std::min(r, rho), hi = std::max(r, rho);
    return std::pow(lo / hi, k) / std::pow(hi, n - 2) / (2 * k + n - 2);
}

PowerKernel sector_kernel(int n, int k)
{
    if (k < 0) throw std::invalid_argument("sector_kernel: k must be >= 0");
    return {double(k), double(k + n - 2), 1.0 / (2 * k + n - 2)};
}

void accumulate_power_integral(const RadialGrid& g, double A, double B, double power, double coef,
                               Eigen::RowVectorXd& row)
{
    if (!(B > A)) return;
    if (power < 0 && A <= 0) throw std::invalid_argument("accumulate_power_integral: singular weight at 0");

    std::vector<double> cuts{A, B};
    for (const auto& p : g.panels) {
        if (p.lo > A && p.lo < B) cuts.push_back(p.lo);
    }
    if (power < 0) {
        // geometric grading away from the singular end
        for (double c = 2 * A; c < B; c *= 2) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());

    const double apow = std::abs(power);
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
        double a = cuts[s], b = cuts[s + 1];
        if (!(b > a)) continue;
        const Panel& p = g.panel_at(0.5 * (a + b));
        auto lo = std::lower_bound(g.nodes.data(), g.nodes.data() + g.size(), a);
        auto hi = std::upper_bound(g.nodes.data(), g.nodes.data() + g.size(), b);
        int inside = static_cast<int>(hi - lo);
        int exact = static_cast<int>(std::ceil(0.5 * (p.count + apow))) + 8;
        int m = std::min(exact, 16 + 2 * inside + static_cast<int>(std::ceil(apow)));
        const auto& ref = cached_gauss_legendre(m);
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        Eigen::VectorXd x = g.nodes.segment(p.first, p.count);
        for (int q = 0; q < m; ++q) {
            double t = mid + half * ref.x(q);
            double wt = coef * half * ref.w(q) * std::pow(t, power);
            accumulate_lagrange<double>(x, p.bary, t, wt, row, p.first);
        }
    }
}

Eigen::RowVectorXd kernel_row(const RadialGrid& g, double r, const PowerKernel& K, double shift)
{
    if (!(r >= 0)) throw std::invalid_argument("kernel_row: r must be >= 0");
    const int n = g.dim;
    const double R = g.r_max;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.size());
    if (r > 0)
        accumulate_power_integral(g, 0.0, std::min(r, R), K.inner + n - 1 + shift, K.scale * std::pow(r, -K.outer), row);
    if (r < R) {
        if (r == 0) {
            if (K.inner == 0) accumulate_power_integral(g, 0.0, R, n - 1 - K.outer + shift, K.scale, row);
        } else {
            accumulate_power_integral(g, r, R, n - 1 - K.outer + shift, K.scale * std::pow(r, K.inner), row);
        }
    }
    return row;
}

Eigen::MatrixXd kernel_matrix(const RadialGrid& g, const PowerKernel& K, double shift)
{
    Eigen::MatrixXd M(g.size(), g.size());
    parallel_for(g.size(), [&](int i) { M.row(i) = kernel_row(g, g.nodes(i), K, shift); });
    return M;
}

namespace {

// integral_I2 f - integral_0^r K(r, rho) f(rho) d rho with the sampled part of f
double lemma_potential(const RadialGrid& g, const Eigen::VectorXd& f, double total, double r)
{
    const int n = g.dim;
    double R = std::min(r, g.r_max);
    Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(g.size());
    Eigen::RowVectorXd cn = Eigen::RowVectorXd::Zero(g.size());
    accumulate_power_integral(g, 0.0, R, 1.0, 1.0, c1);
    accumulate_power_integral(g, 0.0, R, n - 1.0, 1.0, cn);
    double inner = r > 0 ? (c1.dot(f) - cn.dot(f) / std::pow(r, n - 2)) / (n - 2) : 0.0;
    return total - inner;
}

double first_moment(const RadialGrid& g, const Eigen::VectorXd& f)
{
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.size());
    accumulate_power_integral(g, 0.0, g.r_max, 1.0, 1.0, row);
    return row.dot(f) / (g.dim - 2);
}

} // namespace

RadialFunction radial_newton_potential(const RadialFunction& f)
{
    require_finite(f.values, "radial_newton_potential");
    const RadialGrid& g = *f.grid;
    double total = first_moment(g, f.values);
    Eigen::VectorXd v(g.size());
    parallel_for(g.size(), [&](int i) { v(i) = lemma_potential(g, f.values, total, g.nodes(i)); });
    return RadialFunction(f.grid, v);
}

double newton_potential_at(const RadialFunction& f, double r)
{
    require_finite(f.values, "newton_potential_at");
    const RadialGrid& g = *f.grid;
    return lemma_potential(g, f.values, first_moment(g, f.values), r);
}

RadialFunction potential_radial_derivative(const RadialFunction& u2)
{
    require_finite(u2.values, "potential_radial_derivative");
    const RadialGrid& g = *u2.grid;
    double scale = std::max(1.0, u2.values.cwiseAbs().maxCoeff());
    if (u2.values.minCoeff() < -1e-14 * scale)
        throw std::invalid_argument("potential_radial_derivative: density must be nonnegative");
    const int n = g.dim;
    Eigen::VectorXd d(g.size());
    parallel_for(g.size(), [&](int i) {
        double r = g.nodes(i);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.size());
        accumulate_power_integral(g, 0.0, r, n - 1.0, 1.0, row);
        d(i) = -row.dot(u2.values) / std::pow(r, n - 1);
    });
    return RadialFunction(u2.grid, d);
}

std::vector<SectorCoefficient> multipole_potential(const RadialGrid& grid,
                                                   const std::vector<SectorCoefficient>& coeffs)
{
    std::map<int, Eigen::MatrixXd> kernels;
    for (const auto& c : coeffs) {
        if (!same_grid(grid, *c.f.grid)) throw std::invalid_argument("multipole_potential: grid mismatch");
        if (c.k < 0) throw std::invalid_argument("multipole_potential: k must be >= 0");
        require_finite(c.f.values, "multipole_potential");
        if (!kernels.count(c.k)) kernels.emplace(c.k, kernel_matrix(grid, sector_kernel(grid.dim, c.k)));
    }
    std::vector<SectorCoefficient> out;
    out.reserve(coeffs.size());
    for (const auto& c : coeffs) {
        Eigen::VectorXd g = kernels.at(c.k) * c.f.values;
        out.push_back({c.k, c.m, RadialFunction(c.f.grid, g)});
    }
    return out;
}

double sector_potential_at(int k, const RadialFunction& f, double r)
{
    return kernel_row(*f.grid, r, sector_kernel(f.grid->dim, k)).dot(f.values);
}

// --- spherical harmonics ---------------------------------------------------

int harmonic_dimension(int n, int k)
{
    auto binom = [](int a, int b) -> long long {
        if (b < 0 || a < b) return 0;
        long long r = 1;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    return static_cast<int>(binom(k + n - 1, n - 1) - binom(k + n - 3, n - 1));
}

double gegenbauer(int k, double lambda, double t)
{
    if (k == 0) return 1.0;
    double c0 = 1.0, c1 = 2 * lambda * t;
    for (int j = 2; j <= k; ++j) {
        double c2 = (2 * t * (j + lambda - 1) * c1 - (j + 2 * lambda - 2) * c0) / j;
        c0 = c1;
        c1 = c2;
    }
    return c1;
}

namespace {

double assoc_legendre(int l, int m, double x)
{
    double pmm = 1.0;
    if (m > 0) {
        double s = std::sqrt(std::max(0.0, (1 - x) * (1 + x)));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= -fact * s;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2 * m + 1) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = ((2 * ll - 1) * x * pmmp1 - (ll + m - 1) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

} // namespace

double real_spherical_harmonic(int l, int m, const Eigen::Vector3d& unit)
{
    if (l < 0 || std::abs(m) > l) throw std::invalid_argument("real_spherical_harmonic: need |m| <= l");
    const int am = std::abs(m);
    double ct = std::clamp(unit.z(), -1.0, 1.0);
    double phi = std::atan2(unit.y(), unit.x());
    double norm = std::sqrt((2 * l + 1) / (4 * std::numbers::pi) * std::exp(std::lgamma(l - am + 1) - std::lgamma(l + am + 1)));
    double p = assoc_legendre(l, am, ct);
    if (m == 0) return norm * p;
    if (m > 0) return std::sqrt(2.0) * norm * p * std::cos(am * phi);
    return std::sqrt(2.0) * norm * p * std::sin(am * phi);
}

double zonal_expansion(int n, int K, const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    double r = x.norm(), rho = y.norm();
    double t = std::clamp(x.dot(y) / (r * rho), -1.0, 1.0);
    double lambda = 0.5 * (n - 2);
    double area = sphere_area(n);
    double s = 0;
    for (int k = 0; k <= K; ++k) {
        // sum_m Y_km(x) Y_km(y) = dim(k)/|S| C_k(t)/C_k(1)
        double addition = harmonic_dimension(n, k) / area * gegenbauer(k, lambda, t) / gegenbauer(k, lambda, 1.0);
        s += (n - 2) * area * sector_kernel_value(n, k, r, rho) * addition;
    }
    return s;
}

std::vector<SectorCoefficient> project_sectors_3d(const GridPtr& grid,
                                                  const std::function<double(const Eigen::Vector3d&)>& f, int K,
                                                  int angular_points)
{
    if (grid->dim != 3) throw std::invalid_argument("project_sectors_3d: grid must be three-dimensional");
    auto gl = gauss_legendre<double>(angular_points);
    const int nphi = 2 * angular_points;
    std::vector<Eigen::Vector3d> dirs;
    std::vector<double> wts;
    for (int a = 0; a < angular_points; ++a) {
        double ct = gl.x(a), st = std::sqrt(1 - ct * ct);
        for (int b = 0; b < nphi; ++b) {
            double ph = 2 * std::numbers::pi * (b + 0.5) / nphi;
            dirs.emplace_back(st * std::cos(ph), st * std::sin(ph), ct);
            wts.push_back(gl.w(a) * 2 * std::numbers::pi / nphi);
        }
    }
    std::vector<std::pair<int, int>> lm;
    for (int l = 0; l <= K; ++l)
        for (int m = -l; m <= l; ++m) lm.emplace_back(l, m);
    Eigen::MatrixXd Y(dirs.size(), lm.size());
    for (size_t d = 0; d < dirs.size(); ++d)
        for (size_t c = 0; c < lm.size(); ++c) Y(d, c) = wts[d] * real_spherical_harmonic(lm[c].first, lm[c].second, dirs[d]);

    const int N = grid->size();
    Eigen::MatrixXd F(N, dirs.size());
    parallel_for(N, [&](int i) {
        for (size_t d = 0; d < dirs.size(); ++d) F(i, d) = f(grid->nodes(i) * dirs[d]);
    });
    Eigen::MatrixXd C = F * Y;
    std::vector<SectorCoefficient> out;
    for (size_t c = 0; c < lm.size(); ++c) out.push_back({lm[c].first, lm[c].second, RadialFunction(grid, C.col(c))});
    return out;
}

double evaluate_multipole_3d(const std::vector<SectorCoefficient>& coeffs, const Eigen::Vector3d& x)
{
    double r = x.norm();
    Eigen::Vector3d u = r > 0 ? Eigen::Vector3d(x / r) : Eigen::Vector3d(0, 0, 1);
    double s = 0;
    for (const auto& c : coeffs) s += sector_potential_at(c.k, c.f, r) * real_spherical_harmonic(c.k, c.m, u);
    return s;
}

// --- brute-force oracle ----------------------------------------------------

BoxSamples BoxSamples::sample(const std::function<double(const Eigen::Vector3d&)>& f, const Eigen::Vector3d& center,
                              double half_width, int m)
{
    if (m < 1 || m > 64) throw std::invalid_argument("BoxSamples: cell count per axis must be in [1, 64]");
    BoxSamples s;
    s.lower = center.array() - half_width;
    s.h = 2 * half_width / m;
    s.m = m;
    s.values.resize(m * m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) s.values((i * m + j) * m + k) = f(s.cell_center(i, j, k));
    return s;
}

Eigen::Vector3d BoxSamples::cell_center(int i, int j, int k) const
{
    return lower + h * Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5);
}

double direct_newton_potential_nd(int n, const BoxSamples& s, const Eigen::Vector3d& x)
{
    if (n != 3) throw std::invalid_argument("direct_newton_potential_nd: only n = 3 is supported");
    Eigen::Vector3d rel = (x - s.lower) / s.h;
    if ((rel.array() < 0).any() || (rel.array() > s.m).any())
        throw std::invalid_argument("direct_newton_potential_nd: point outside the sample box");
    Eigen::Array3i own = rel.array().floor().cast<int>().min(s.m - 1);
    // equal-volume ball around the singular cell: integral of 1/|y| = 2 pi a^2
    const double a = s.h * std::cbrt(3.0 / (4 * std::numbers::pi));
    const double h3 = s.h * s.h * s.h;
    double sum = 0;
    for (int i = 0; i < s.m; ++i)
        for (int j = 0; j < s.m; ++j)
            for (int k = 0; k < s.m; ++k) {
                double f = s.values((i * s.m + j) * s.m + k);
                if (f == 0) continue;
                if (i == own(0) && j == own(1) && k == own(2))
                    sum += f * 2 * std::numbers::pi * a * a;
                else
                    sum += f * h3 / (x - s.cell_center(i, j, k)).norm();
            }
    return sum / (4 * std::numbers::pi);
}

} // namespace hartree
