#include "doctest.h"
#include "oracles.hpp"

#include "hartree/newton_potential.hpp"
#include "hartree/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace hartree;

namespace {

RadialFunction unit_ball(const GridPtr& g)
{
    Eigen::VectorXd f = (g->nodes.array() < 1.0).cast<double>();
    return RadialFunction(g, f);
}

} // namespace

TEST_CASE("kernel_K values")
{
    CHECK(kernel_K(3, 1.7, 1.7) == 0.0);
    CHECK(kernel_K(3, 2, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(kernel_K(5, 2, 1) == doctest::Approx(7.0 / 24).epsilon(1e-15));
    CHECK_THROWS(kernel_K(3, 1, 2));
    CHECK_THROWS(kernel_K(3, 0, 0));
}

TEST_CASE("sector kernel values and structure")
{
    CHECK(sector_kernel_value(3, 0, 2, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sector_kernel_value(3, 1, 1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(sector_kernel_value(5, 2, 2, 1) == doctest::Approx(1.0 / 224).epsilon(1e-15));
    CHECK_THROWS(sector_kernel_value(3, 0, -1, 1));
    CHECK_THROWS(sector_kernel_value(3, -1, 1, 1));

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.01, 10.0), lam(0.1, 5.0);
    std::uniform_int_distribution<int> kd(0, 10), nd(3, 5);
    for (int t = 0; t < 1000; ++t) {
        int n = nd(rng), k = kd(rng);
        double r = u(rng), rho = u(rng), l = lam(rng);
        double g = sector_kernel_value(n, k, r, rho);
        CHECK(g == doctest::Approx(sector_kernel_value(n, k, rho, r)).epsilon(1e-14));
        CHECK(sector_kernel_value(n, k, l * r, l * rho) == doctest::Approx(std::pow(l, 2 - n) * g).epsilon(1e-12));
        if (k >= 2 && r != rho) CHECK(sector_kernel_value(n, 1, r, rho) > g);
    }
}

TEST_CASE("radial potential of the unit ball")
{
    // panel boundary at r = 1 keeps the indicator piecewise polynomial
    auto g = build_grid(3, 4.0, 128, GridScheme::composite_clenshaw_curtis);
    auto f = unit_ball(g);
    CHECK(std::abs(newton_potential_at(f, 0.0) - 0.5) < 1e-12);
    for (double r : {1.5, 2.0, 3.0}) CHECK(std::abs(newton_potential_at(f, r) - 1.0 / (3 * r)) < 1e-12);
    auto v = radial_newton_potential(f);
    for (int i = 0; i < g->size(); ++i) {
        double r = g->nodes(i);
        double exact = r < 1 ? 0.5 - r * r / 6 : 1.0 / (3 * r);
        CHECK(std::abs(v.values(i) - exact) < 1e-12);
    }
    auto zero = radial_newton_potential(RadialFunction(g, Eigen::VectorXd::Zero(g->size())));
    CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd bad = f.values;
    bad(3) = std::nan("");
    CHECK_THROWS(radial_newton_potential(RadialFunction(g, bad)));
}

TEST_CASE("potential is harmonic outside the support")
{
    for (int n : {3, 4, 5}) {
        auto g = build_grid(n, 4.0, 128, GridScheme::composite_clenshaw_curtis);
        auto f = unit_ball(g);
        const double h = 1e-2;
        for (double r : {1.5, 2.0, 3.0, 6.0}) {
            double v[5];
            for (int j = -2; j <= 2; ++j) v[j + 2] = newton_potential_at(f, r + j * h);
            double d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h);
            double d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h);
            double res = d2 + (n - 1) / r * d1;
            CHECK(std::abs(res) < 1e-6);
        }
        // outside the ball the potential is mass/((n-2) r^(n-2)) with mass 1/n
        CHECK(std::abs(newton_potential_at(f, 2.0) - 1.0 / (n * (n - 2) * std::pow(2.0, n - 2))) < 1e-12);
    }
}

TEST_CASE("radial derivative identity")
{
    auto gb = build_grid(3, 4.0, 128, GridScheme::composite_clenshaw_curtis);
    Eigen::VectorXd ball = (gb->nodes.array() < 1.0).cast<double>();
    auto db = potential_radial_derivative(RadialFunction(gb, ball));
    for (int i = 0; i < gb->size(); ++i) {
        double r = gb->nodes(i);
        double exact = r < 1 ? -r / 3 : -1.0 / (3 * r * r);
        CHECK(std::abs(db.values(i) - exact) < 1e-12);
    }
    // at r = 2: -(1/4)(1/3)
    auto g = build_grid(3, 10.0, 120);
    Eigen::VectorXd u2 = (-g->nodes.array().square()).exp();
    RadialFunction fu(g, u2);
    auto d = potential_radial_derivative(fu);
    const double h = 1e-4;
    for (int i = 5; i < g->size(); i += 13) {
        double r = g->nodes(i);
        double fd = (newton_potential_at(fu, r + h) - newton_potential_at(fu, r - h)) / (2 * h);
        CHECK(std::abs(fd - d.values(i)) < 1e-8);
    }
    CHECK(potential_radial_derivative(RadialFunction(g, Eigen::VectorXd::Zero(120))).values.norm() == 0.0);
    CHECK_THROWS(potential_radial_derivative(RadialFunction(g, -u2)));
}

TEST_CASE("k = 0 sector equals the radial potential")
{
    for (int n : {3, 4, 5}) {
        auto g = build_grid(n, 20.0, 200);
        Eigen::VectorXd f = (-g->nodes.array()).exp() * (1 + 0.3 * g->nodes.array().square());
        RadialFunction rf(g, f);
        const double s = std::sqrt(sphere_area(n));
        auto out = multipole_potential(*g, {{0, 0, RadialFunction(g, s * f)}});
        auto v = radial_newton_potential(rf);
        double err = (out[0].f.values / s - v.values).norm() / v.values.norm();
        CHECK(err < 1e-10);
    }
    auto g = build_grid(3, 10.0, 64);
    auto out = multipole_potential(*g, {{2, 1, RadialFunction(g, Eigen::VectorXd::Zero(64))}});
    CHECK(out[0].f.values.norm() == 0.0);
    auto other = build_grid(3, 10.0, 32);
    CHECK_THROWS(multipole_potential(*g, {{0, 0, RadialFunction(other, Eigen::VectorXd::Zero(32))}}));
}

TEST_CASE("kernel rows against direct quadrature of the kernel")
{
    // smooth density, independent adaptive quadrature of each side of the diagonal
    for (int n : {3, 5}) {
        auto g = build_grid(n, 12.0, 160);
        auto dens = [](double r) { return std::exp(-r) * (1 + r); };
        Eigen::VectorXd f(g->size());
        for (int i = 0; i < g->size(); ++i) f(i) = dens(g->nodes(i));
        for (int k : {0, 1, 3, 6}) {
            auto K = sector_kernel(n, k);
            for (double r : {0.05, 0.9, 3.3, 11.0, 15.0}) {
                auto integrand = [&](double rho) {
                    return rho > 0 ? sector_kernel_value(n, k, r, rho) * dens(rho) * std::pow(rho, n - 1) : 0.0;
                };
                double ref = oracle::adaptive_simpson(integrand, 0.0, std::min(r, 12.0), 1e-15);
                if (r < 12.0) ref += oracle::adaptive_simpson(integrand, r, 12.0, 1e-15);
                double got = kernel_row(*g, r, K).dot(f);
                CHECK(std::abs(got - ref) <= 1e-11 * std::abs(ref) + 1e-15);
            }
        }
    }
}

TEST_CASE("gegenbauer addition formula reproduces the Newton kernel")
{
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int n : {3, 4, 5}) {
        for (int k = 0; k < 8; ++k) {
            double lambda = 0.5 * (n - 2);
            double id = (n - 2) * harmonic_dimension(n, k) / ((2 * k + n - 2) * gegenbauer(k, lambda, 1.0));
            CHECK(id == doctest::Approx(1.0).epsilon(1e-13));
        }
        Eigen::VectorXd x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x(i) = nd(rng);
            y(i) = nd(rng);
        }
        x *= 2.0 / x.norm();
        y *= 0.8 / y.norm();
        double exact = std::pow((x - y).norm(), 2 - n);
        double prev = 1e9;
        for (int K : {2, 4, 8, 16, 32}) {
            double err = std::abs(zonal_expansion(n, K, x, y) - exact);
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev < 1e-12);
    }
    CHECK(harmonic_dimension(3, 4) == 9);
    CHECK(harmonic_dimension(4, 2) == 9);
    CHECK(harmonic_dimension(5, 1) == 5);
}

TEST_CASE("real spherical harmonics are orthonormal")
{
    auto gl = gauss_legendre<double>(20);
    const int np = 40;
    for (int l1 = 0; l1 <= 4; ++l1)
        for (int m1 = -l1; m1 <= l1; ++m1)
            for (int l2 = 0; l2 <= 4; ++l2)
                for (int m2 = -l2; m2 <= l2; ++m2) {
                    double s = 0;
                    for (int a = 0; a < 20; ++a)
                        for (int b = 0; b < np; ++b) {
                            double ct = gl.x(a);
                            double st = std::sqrt(1 - ct * ct), ph = 2 * std::numbers::pi * b / np;
                            Eigen::Vector3d w(st * std::cos(ph), st * std::sin(ph), ct);
                            s += gl.w(a) * 2 * std::numbers::pi / np * real_spherical_harmonic(l1, m1, w)
                               * real_spherical_harmonic(l2, m2, w);
                        }
                    CHECK(std::abs(s - ((l1 == l2 && m1 == m2) ? 1.0 : 0.0)) < 1e-13);
                }
}

TEST_CASE("direct oracle")
{
    auto ball = [](const Eigen::Vector3d& y) { return y.norm() < 1.0 ? 1.0 : 0.0; };
    auto s = BoxSamples::sample(ball, Eigen::Vector3d::Zero(), 1.2, 63);
    CHECK(std::abs(direct_newton_potential_nd(3, s, Eigen::Vector3d::Zero()) - 0.5) < 2e-3);
    auto z = BoxSamples::sample([](const Eigen::Vector3d&) { return 0.0; }, Eigen::Vector3d::Zero(), 1.0, 8);
    CHECK(direct_newton_potential_nd(3, z, Eigen::Vector3d(0.1, 0.2, 0.3)) == 0.0);
    CHECK_THROWS(direct_newton_potential_nd(4, s, Eigen::Vector3d::Zero()));
    CHECK_THROWS(direct_newton_potential_nd(3, s, Eigen::Vector3d(5, 0, 0)));
    CHECK_THROWS(BoxSamples::sample(ball, Eigen::Vector3d::Zero(), 1.0, 65));

    // translation invariance
    Eigen::Vector3d a(0.31, -0.17, 0.05);
    auto gauss = [](const Eigen::Vector3d& y) { return std::exp(-2 * y.squaredNorm()); };
    auto shifted = [&](const Eigen::Vector3d& y) { return gauss(y - a); };
    auto s0 = BoxSamples::sample(gauss, Eigen::Vector3d::Zero(), 3.0, 48);
    auto s1 = BoxSamples::sample(shifted, a, 3.0, 48);
    Eigen::Vector3d x(0.4, 0.7, -0.2);
    CHECK(std::abs(direct_newton_potential_nd(3, s0, x) - direct_newton_potential_nd(3, s1, x + a)) < 1e-12);
}

TEST_CASE("radial ball potential against the direct oracle")
{
    auto g = build_grid(3, 4.0, 128, GridScheme::composite_clenshaw_curtis);
    auto f = unit_ball(g);
    auto ball = [](const Eigen::Vector3d& y) { return y.norm() < 1.0 ? 1.0 : 0.0; };
    auto s = BoxSamples::sample(ball, Eigen::Vector3d::Zero(), 2.2, 63);
    CHECK(std::abs(direct_newton_potential_nd(3, s, Eigen::Vector3d::Zero()) - newton_potential_at(f, 0.0)) < 2e-3);
    CHECK(std::abs(direct_newton_potential_nd(3, s, Eigen::Vector3d(2, 0, 0)) - newton_potential_at(f, 2.0)) < 2e-3);
}

TEST_CASE("dipole sector of a gaussian density against the oracle")
{
    // U = exp(-r^2): U d_x1 U = U U'(r) x1/r lives purely in the (1, 1) sector
    auto g = build_grid(3, 6.0, 96);
    Eigen::VectorXd uu(g->size());
    for (int i = 0; i < g->size(); ++i) {
        double r = g->nodes(i);
        uu(i) = std::exp(-r * r) * (-2 * r * std::exp(-r * r));
    }
    auto dens = [](const Eigen::Vector3d& y) { return -2 * y.x() * std::exp(-2 * y.squaredNorm()); };
    auto coeffs = project_sectors_3d(g, dens, 2, 24);
    // only (1, 1) survives; its radial part is |S^2|^(1/2) U U' / sqrt(3) up to the phase of Y_11
    const double c = std::sqrt(4 * std::numbers::pi / 3);
    for (const auto& cf : coeffs) {
        if (cf.k == 1 && cf.m == 1)
            CHECK((cf.f.values.cwiseAbs() - c * uu.cwiseAbs()).norm() < 1e-12 * uu.norm());
        else
            CHECK(cf.f.values.norm() < 1e-13 * uu.norm());
    }
    auto s = BoxSamples::sample(dens, Eigen::Vector3d::Zero(), 4.0, 63);
    for (Eigen::Vector3d x : {Eigen::Vector3d(3.5, 0, 0), Eigen::Vector3d(2.0, 2.0, 1.0), Eigen::Vector3d(-1.5, 3.0, 0.5)}) {
        double ref = direct_newton_potential_nd(3, s, x);
        double got = evaluate_multipole_3d(coeffs, x);
        CHECK(std::abs(got - ref) < 1e-4 * std::abs(ref));
    }
}
