#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hartree {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Nodes (ascending) and weights of a 1D rule on [-1,1] or a mapped interval.
template <typename Scalar>
struct Rule1D {
    Vector<Scalar> x;
    Vector<Scalar> w;
};

// Gauss-Legendre on [-1,1] by Newton iteration on the three-term recurrence.
template <typename Scalar = double>
Rule1D<Scalar> gauss_legendre(int m)
{
    if (m < 1) throw std::invalid_argument("gauss_legendre: m must be >= 1");
    Rule1D<Scalar> rule{Vector<Scalar>(m), Vector<Scalar>(m)};
    const Scalar pi = std::numbers::pi_v<Scalar>;
    auto legendre = [m](Scalar x, Scalar& dp) {
        Scalar p0 = 1, p1 = x;
        for (int k = 2; k <= m; ++k) {
            Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        if (m == 1) p0 = 1;
        dp = m * (x * p1 - p0) / (x * x - 1);
        return p1;
    };
    for (int i = 0; i < (m + 1) / 2; ++i) {
        Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(m) + Scalar(0.5)));
        Scalar dp = 1;
        for (int it = 0; it < 100; ++it) {
            Scalar dx = legendre(x, dp) / dp;
            x -= dx;
            if (std::abs(dx) <= 2 * std::numeric_limits<Scalar>::epsilon()) break;
        }
        legendre(x, dp);
        Scalar w = 2 / ((1 - x * x) * dp * dp);
        rule.x(i) = -x;
        rule.x(m - 1 - i) = x;
        rule.w(i) = w;
        rule.w(m - 1 - i) = w;
    }
    if (m % 2 == 1) rule.x(m / 2) = 0;
    return rule;
}

// Jacobi polynomial P_m^(a,b)(x) and its derivative.
template <typename Scalar>
Scalar jacobi_polynomial(int m, Scalar a, Scalar b, Scalar x, Scalar& dp)
{
    Scalar p0 = 1, p1 = (a - b) / 2 + (a + b + 2) * x / 2;
    if (m == 0) {
        dp = 0;
        return p0;
    }
    for (int k = 2; k <= m; ++k) {
        Scalar c = 2 * k + a + b;
        Scalar a1 = 2 * k * (k + a + b) * (c - 2);
        Scalar a2 = (c - 1) * (a * a - b * b);
        Scalar a3 = (c - 2) * (c - 1) * c;
        Scalar a4 = 2 * (k + a - 1) * (k + b - 1) * c;
        Scalar p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    Scalar c = 2 * m + a + b;
    dp = (m * ((a - b) - c * x) * p1 + 2 * (m + a) * (m + b) * p0) / (c * (1 - x * x));
    return p1;
}

// Gauss-Jacobi for the weight (1-t)^a (1+t)^b on [-1,1]: Golub-Welsch
// eigenvalues as starting points, Newton polish on the recurrence, and the
// closed-form weights (accurate even where they are tiny).
template <typename Scalar = double>
Rule1D<Scalar> gauss_jacobi(int m, Scalar a, Scalar b)
{
    if (m < 1) throw std::invalid_argument("gauss_jacobi: m must be >= 1");
    if (a <= -1 || b <= -1) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
    Vector<Scalar> diag(m), sub(std::max(m - 1, 1));
    for (int k = 0; k < m; ++k) {
        Scalar s = 2 * k + a + b;
        diag(k) = (s == 0) ? (b - a) / (a + b + 2) : (b * b - a * a) / (s * (s + 2));
        if (k + 1 < m) {
            Scalar kk = k + 1;
            Scalar t = 2 * kk + a + b;
            sub(k) = 2 / t * std::sqrt(kk * (kk + a) * (kk + b) * (kk + a + b) / ((t - 1) * (t + 1)));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es;
    Vector<Scalar> x;
    if (m == 1) {
        x = diag;
    } else {
        Vector<Scalar> sd = sub.head(m - 1);
        es.computeFromTridiagonal(diag, sd, Eigen::EigenvaluesOnly);
        x = es.eigenvalues();
    }
    const Scalar logc = (a + b + 1) * std::log(Scalar(2)) + std::lgamma(m + a + 1) + std::lgamma(m + b + 1)
                      - std::lgamma(m + a + b + 1) - std::lgamma(Scalar(m + 1));
    Rule1D<Scalar> rule{Vector<Scalar>(m), Vector<Scalar>(m)};
    for (int k = 0; k < m; ++k) {
        Scalar t = x(k), dp = 1;
        for (int it = 0; it < 20; ++it) {
            Scalar dx = jacobi_polynomial(m, a, b, t, dp) / dp;
            t -= dx;
            if (std::abs(dx) <= 2 * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1e-3), std::abs(t))) break;
        }
        jacobi_polynomial(m, a, b, t, dp);
        rule.x(k) = t;
        rule.w(k) = std::exp(logc) / ((1 - t * t) * dp * dp);
    }
    return rule;
}

// Fejer's first rule (open Clenshaw-Curtis) on [-1,1]; nodes are Chebyshev
// points of the first kind, so endpoints are never sampled.
template <typename Scalar = double>
Rule1D<Scalar> fejer_first(int m)
{
    if (m < 1) throw std::invalid_argument("fejer_first: m must be >= 1");
    const Scalar pi = std::numbers::pi_v<Scalar>;
    Rule1D<Scalar> rule{Vector<Scalar>(m), Vector<Scalar>(m)};
    for (int k = 0; k < m; ++k) {
        Scalar th = pi * (2 * (m - 1 - k) + 1) / (2 * m);
        Scalar s = 0;
        for (int j = 1; j <= m / 2; ++j) s += std::cos(2 * j * th) / (4 * Scalar(j) * j - 1);
        rule.x(k) = std::cos(th);
        rule.w(k) = 2 / Scalar(m) * (1 - 2 * s);
    }
    return rule;
}

template <typename Scalar>
Rule1D<Scalar> map_rule(const Rule1D<Scalar>& ref, Scalar lo, Scalar hi)
{
    Scalar half = (hi - lo) / 2;
    Scalar mid = (hi + lo) / 2;
    Rule1D<Scalar> out{(mid + half * ref.x.array()).matrix(), (half * ref.w.array()).matrix()};
    return out;
}

// Barycentric weights of Gauss-Legendre or Gauss-Jacobi points (given with
// their own quadrature weights), up to a common factor.
template <typename Scalar>
Vector<Scalar> gauss_barycentric(const Rule1D<Scalar>& gl)
{
    const int m = static_cast<int>(gl.x.size());
    Vector<Scalar> lam(m);
    for (int j = 0; j < m; ++j) {
        Scalar s = std::sqrt((1 - gl.x(j) * gl.x(j)) * gl.w(j));
        lam(j) = (j % 2 == 0) ? s : -s;
    }
    return lam;
}

// Barycentric weights for Chebyshev points of the first kind in ascending order.
template <typename Scalar>
Vector<Scalar> chebyshev1_barycentric(int m)
{
    const Scalar pi = std::numbers::pi_v<Scalar>;
    Vector<Scalar> lam(m);
    for (int k = 0; k < m; ++k) {
        int j = m - 1 - k;
        Scalar s = std::sin(pi * (2 * j + 1) / (2 * m));
        lam(k) = (j % 2 == 0) ? s : -s;
    }
    return lam;
}

// Adds scale * l_j(t) into out(offset + j) for the barycentric interpolant on
// nodes x with weights lam.
template <typename Scalar, typename Out>
void accumulate_lagrange(const Vector<Scalar>& x, const Vector<Scalar>& lam, Scalar t, Scalar scale,
                         Out& out, int offset)
{
    const int m = static_cast<int>(x.size());
    for (int j = 0; j < m; ++j) {
        if (t == x(j)) {
            out(offset + j) += scale;
            return;
        }
    }
    Scalar den = 0;
    for (int j = 0; j < m; ++j) den += lam(j) / (t - x(j));
    if (std::isfinite(den) && den != 0) {
        for (int j = 0; j < m; ++j) out(offset + j) += scale * (lam(j) / (t - x(j))) / den;
        return;
    }
    // The second form can cancel to zero where the Lebesgue function is huge
    // (near r = 0 on strongly weighted Gauss nodes). First form, in logs:
    // l_j(t) = lam_j prod_k (t - x_k) / ((t - x_j) lam_r prod_{k != r} (x_r - x_k)).
    const int r = m - 1;
    Scalar logc = std::log(std::abs(lam(r))), sgnc = lam(r) < 0 ? -1 : 1;
    Scalar logl = 0, sgnl = 1;
    for (int k = 0; k < m; ++k) {
        logl += std::log(std::abs(t - x(k)));
        if (t < x(k)) sgnl = -sgnl;
        if (k == r) continue;
        logc += std::log(std::abs(x(r) - x(k)));
        if (x(r) < x(k)) sgnc = -sgnc;
    }
    for (int j = 0; j < m; ++j) {
        Scalar d = t - x(j);
        Scalar s = sgnl * sgnc * (lam(j) < 0 ? -1 : 1) * (d < 0 ? -1 : 1);
        out(offset + j) += scale * s * std::exp(logl - logc + std::log(std::abs(lam(j))) - std::log(std::abs(d)));
    }
}

// Spectral differentiation matrix D(i,j) = l_j'(x_i).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> differentiation_matrix(const Vector<Scalar>& x,
                                                                            const Vector<Scalar>& lam)
{
    const int m = static_cast<int>(x.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> D(m, m);
    for (int i = 0; i < m; ++i) {
        Scalar diag = 0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            D(i, j) = (lam(j) / lam(i)) / (x(i) - x(j));
            diag -= D(i, j);
        }
        D(i, i) = diag;
    }
    return D;
}

// Diagonal of the differentiation matrix at the Gauss-Jacobi(alpha, beta)
// nodes on [-1, 1], from the Jacobi equation: P''/(2P') at a zero. The sum
// form above cancels badly when the weights span many orders of magnitude.
template <typename Scalar>
Vector<Scalar> gauss_jacobi_diagonal(const Vector<Scalar>& x, Scalar alpha, Scalar beta)
{
    Vector<Scalar> d(x.size());
    for (int i = 0; i < x.size(); ++i)
        d(i) = ((alpha + beta + 2) * x(i) - (beta - alpha)) / (2 * (1 - x(i) * x(i)));
    return d;
}

} // namespace hartree
