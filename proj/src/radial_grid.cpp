#include "hartree/radial_grid.hpp"
#include "hartree/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hartree {

std::string to_string(GridScheme s)
{
    switch (s) {
    case GridScheme::gauss_legendre_mapped: return "gauss_legendre_mapped";
    case GridScheme::composite_clenshaw_curtis: return "composite_clenshaw_curtis";
    case GridScheme::gauss_radial: return "gauss_radial";
    }
    return "unknown";
}

GridScheme parse_scheme(const std::string& name)
{
    if (name == "gauss_legendre_mapped") return GridScheme::gauss_legendre_mapped;
    if (name == "composite_clenshaw_curtis") return GridScheme::composite_clenshaw_curtis;
    if (name == "gauss_radial") return GridScheme::gauss_radial;
    throw std::invalid_argument("unknown grid scheme: " + name);
}

double sphere_area(int n)
{
    if (n < 2) throw std::invalid_argument("sphere_area: n must be >= 2");
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

double default_r_max(int n)
{
    switch (n) {
    case 3: return 30.0;
    case 4: return 25.0;
    case 5: return 20.0;
    }
    throw std::invalid_argument("supported dimensions are 3, 4, 5");
}

std::string RadialGrid::descriptor() const
{
    std::ostringstream os;
    os.precision(17);
    os << "n=" << dim << " r_max=" << r_max << " N=" << size() << " scheme=" << to_string(scheme);
    if (sector > 0) os << " sector=" << sector;
    return os.str();
}

const Panel& RadialGrid::panel_at(double r) const
{
    auto it = std::upper_bound(panels.begin(), panels.end(), r,
                               [](double v, const Panel& p) { return v < p.hi; });
    if (it == panels.end()) return panels.back();
    return *it;
}

void RadialGrid::accumulate_interpolation(double r, double scale, Eigen::RowVectorXd& out) const
{
    const Panel& p = panel_at(r);
    Eigen::VectorXd x = nodes.segment(p.first, p.count);
    accumulate_lagrange<double>(x, p.bary, r, scale, out, p.first);
}

Eigen::RowVectorXd RadialGrid::interpolation_row(double r) const
{
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(size());
    accumulate_interpolation(r, 1.0, row);
    return row;
}

double RadialGrid::interpolate(const Eigen::VectorXd& values, double r) const
{
    const Panel& p = panel_at(r);
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(p.count);
    Eigen::VectorXd x = nodes.segment(p.first, p.count);
    accumulate_lagrange<double>(x, p.bary, r, 1.0, row, 0);
    return row.dot(values.segment(p.first, p.count));
}

namespace {

void check_grid_args(int n, double r_max, int N)
{
    if (n < 3 || n > 5) throw std::invalid_argument("build_grid: supported dimensions are 3, 4, 5");
    if (!(r_max > 0) || !std::isfinite(r_max)) throw std::invalid_argument("build_grid: r_max must be positive");
    if (N < 16) throw std::invalid_argument("build_grid: N must be >= 16");
}

} // namespace

GridPtr build_operator_grid(int n, double r_max, int N)
{
    return build_grid(n, r_max, N, GridScheme::gauss_radial);
}

GridPtr build_sector_grid(int n, double r_max, int N, int k)
{
    check_grid_args(n, r_max, N);
    if (k < 0) throw std::invalid_argument("build_sector_grid: k must be >= 0");
    auto g = std::make_shared<RadialGrid>();
    g->dim = n;
    g->r_max = r_max;
    g->scheme = GridScheme::gauss_radial;
    g->sector = k;
    auto ref = gauss_jacobi<double>(N, 0.0, double(n + 2 * k - 1));
    g->nodes = 0.5 * r_max * (ref.x.array() + 1.0);
    g->weights = std::pow(0.5 * r_max, n + 2 * k) * ref.w.array() / g->nodes.array().pow(2 * k);
    g->plain_weights = g->weights.array() / g->nodes.array().pow(n - 1);
    g->panels.push_back({0.0, r_max, 0, N, gauss_barycentric(ref)});
    return g;
}

GridPtr build_grid(int n, double r_max, int N, GridScheme scheme)
{
    if (scheme == GridScheme::gauss_radial) return build_sector_grid(n, r_max, N, 0);
    check_grid_args(n, r_max, N);

    auto g = std::make_shared<RadialGrid>();
    g->dim = n;
    g->r_max = r_max;
    g->scheme = scheme;
    g->nodes.resize(N);
    g->plain_weights.resize(N);

    if (scheme == GridScheme::gauss_legendre_mapped) {
        auto ref = gauss_legendre<double>(N);
        auto rule = map_rule(ref, 0.0, r_max);
        g->nodes = rule.x;
        g->plain_weights = rule.w;
        g->panels.push_back({0.0, r_max, 0, N, gauss_barycentric(ref)});
    } else {
        // panels of about 16 Fejer points each
        const int np = std::max(1, N / 16);
        const double h = r_max / np;
        int first = 0;
        for (int p = 0; p < np; ++p) {
            int count = N / np + (p < N % np ? 1 : 0);
            double lo = p * h;
            double hi = (p + 1 == np) ? r_max : (p + 1) * h;
            auto rule = map_rule(fejer_first<double>(count), lo, hi);
            g->nodes.segment(first, count) = rule.x;
            g->plain_weights.segment(first, count) = rule.w;
            g->panels.push_back({lo, hi, first, count, chebyshev1_barycentric<double>(count)});
            first += count;
        }
    }
    g->weights = g->plain_weights.array() * g->nodes.array().pow(n - 1);
    return g;
}

RadialFunction::RadialFunction(GridPtr g, Eigen::VectorXd v, std::optional<ExponentialTail> t)
    : grid(std::move(g)), values(std::move(v)), tail(t)
{
    if (!grid) throw std::invalid_argument("RadialFunction: null grid");
    if (values.size() != grid->size()) throw std::invalid_argument("RadialFunction: length mismatch with grid");
    if (tail && !(tail->rate > 0)) throw std::invalid_argument("RadialFunction: tail rate must be positive");
}

double RadialFunction::operator()(double r) const
{
    if (r > grid->r_max) return tail ? tail->amplitude * std::exp(-tail->rate * r) : 0.0;
    return grid->interpolate(values, r);
}

bool same_grid(const RadialGrid& a, const RadialGrid& b)
{
    if (&a == &b) return true;
    return a.dim == b.dim && a.scheme == b.scheme && a.sector == b.sector && a.size() == b.size() &&
           a.r_max == b.r_max;
}

double exponential_tail_integral(int n, double r, const ExponentialTail& t)
{
    // c e^(-tau r) sum_k (n-1)!/k! r^k / tau^(n-k)
    double fact = std::tgamma(n);
    double sum = 0, kfact = 1;
    for (int k = 0; k < n; ++k) {
        if (k > 0) kfact *= k;
        sum += fact / kfact * std::pow(r, k) / std::pow(t.rate, n - k);
    }
    return t.amplitude * std::exp(-t.rate * r) * sum;
}

double integrate_radial(const RadialGrid& grid, const RadialFunction& f)
{
    if (!same_grid(grid, *f.grid)) throw std::invalid_argument("integrate_radial: grid mismatch");
    double s = grid.weights.dot(f.values);
    if (f.tail) s += exponential_tail_integral(grid.dim, grid.r_max, *f.tail);
    return s;
}

std::optional<ExponentialTail> fit_exponential_tail(const RadialGrid& grid, const Eigen::VectorXd& values,
                                                    int count)
{
    const int N = grid.size();
    count = std::min(count, N);
    std::vector<double> xs, ys;
    for (int i = N - count; i < N; ++i) {
        if (values(i) > 0 && std::isfinite(std::log(values(i)))) {
            xs.push_back(grid.nodes(i));
            ys.push_back(std::log(values(i)));
        }
    }
    if (xs.size() < 3) return std::nullopt;
    Eigen::MatrixXd A(xs.size(), 2);
    Eigen::VectorXd b(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = xs[i];
        b(i) = ys[i];
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    if (!(c(1) < 0)) return std::nullopt;
    return ExponentialTail{std::exp(c(0)), -c(1)};
}

} // namespace hartree
