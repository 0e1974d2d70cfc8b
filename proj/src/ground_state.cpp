#include "hartree/ground_state.hpp"
#include "hartree/newton_potential.hpp"
#include "hartree/quadrature.hpp"
#include "shooting.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <vector>
#include <sstream>
#include <numbers>
#include <stdexcept>

namespace hartree {

std::string to_string(SolverMethod m)
{
    return m == SolverMethod::shooting ? "shooting" : "fixed_point";
}

SolverMethod parse_method(const std::string& name)
{
    if (name == "shooting") return SolverMethod::shooting;
    if (name == "fixed_point") return SolverMethod::fixed_point;
    throw std::invalid_argument("unknown solver method: " + name);
}

double decay_constant(int n, double l2_mass)
{
    double c = std::tgamma(0.5 * (n - 2)) / (4 * std::pow(std::numbers::pi, 0.5 * n));
    return std::pow(c * l2_mass, 1.0 / (n - 2));
}

double equation_residual(const Discretization& disc, const Eigen::VectorXd& u, double mass_shift)
{
    double nu = disc.weighted_norm(u);
    if (nu == 0) return 0.0;
    Eigen::VectorXd v = disc.K0 * u.cwiseAbs2();
    Eigen::VectorXd c = disc.scaled(u);
    Eigen::VectorXd r = disc.H * c + (1 + mass_shift) * c - v.cwiseProduct(c);
    return r.norm() / nu;
}

double equation_residual(const GroundState& gs)
{
    return equation_residual(*gs.disc, gs.profile.values, gs.mass_shift);
}

double energy_functional(const Discretization& disc, const Eigen::VectorXd& u, double mass_shift)
{
    Eigen::VectorXd u2 = u.cwiseAbs2();
    Eigen::VectorXd v = disc.K0 * u2;
    Eigen::VectorXd c = disc.scaled(u);
    double quad = 0.5 * (c.dot(disc.H * c) + (1 + mass_shift) * c.squaredNorm());
    double quart = 0.25 * disc.w.dot(v.cwiseProduct(u2));
    return sphere_area(disc.dim()) * (quad - quart);
}

namespace {

std::optional<ExponentialTail> profile_tail(const RadialGrid& g, const Eigen::VectorXd& u)
{
    // fit away from the outer boundary, where the natural condition bends the profile
    std::vector<int> idx;
    for (int i = 0; i < g.size(); ++i)
        if (g.nodes(i) > 0.5 * g.r_max && g.nodes(i) < 0.8 * g.r_max && u(i) > 0) idx.push_back(i);
    if (idx.size() < 3) return std::nullopt;
    Eigen::MatrixXd A(idx.size(), 2);
    Eigen::VectorXd b(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
        A(j, 0) = 1;
        A(j, 1) = g.nodes(idx[j]);
        b(j) = std::log(u(idx[j]));
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    if (!(c(1) < 0)) return std::nullopt;
    return ExponentialTail{std::exp(c(0)), -c(1)};
}

} // namespace

GroundState make_ground_state(DiscretizationPtr disc, const Eigen::VectorXd& profile, double mass_shift,
                              SolverMethod method, double tol, int iterations)
{
    GroundState gs;
    const int n = disc->dim();
    gs.dim = n;
    gs.disc = disc;
    gs.profile = RadialFunction(disc->grid, profile, profile_tail(*disc->grid, profile));
    gs.potential = RadialFunction(disc->grid, disc->K0 * profile.cwiseAbs2());
    gs.l2_mass = sphere_area(n) * disc->w.dot(profile.cwiseAbs2());
    gs.energy = energy_functional(*disc, profile, mass_shift);
    gs.nu = decay_constant(n, gs.l2_mass);
    gs.residual = equation_residual(*disc, profile, mass_shift);
    gs.mass_shift = mass_shift;
    gs.method = method;
    gs.tol = tol;
    gs.iterations = iterations;
    return gs;
}

namespace {

GroundState fixed_point(DiscretizationPtr disc, const SolverConfig& cfg)
{
    const auto& g = *disc->grid;
    const int n = g.dim;
    const double mass = 1 + cfg.mass_shift;
    // iterate on c = W^(1/2) u with A = H + (1+mu)
    Eigen::MatrixXd A = disc->H;
    A.diagonal().array() += mass;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw SolverError("fixed_point: operator factorization failed", INFINITY);

    Eigen::VectorXd u = (-0.5 * g.nodes.array().square()).exp();
    u /= std::sqrt(sphere_area(n) * disc->w.dot(u.cwiseAbs2()));
    Eigen::VectorXd c = disc->scaled(u);

    double best = INFINITY;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        Eigen::VectorXd v = disc->K0 * u.cwiseAbs2();
        Eigen::VectorXd b = v.cwiseProduct(c);
        Eigen::VectorXd y = llt.solve(b);
        // stabilizing factor: ratio of the quadratic to the quartic form
        double s = c.dot(A * c) / c.dot(b);
        if (!(s > 0) || !std::isfinite(s)) throw SolverError("fixed_point: lost positivity", best);
        c = (1 - cfg.damping) * c + cfg.damping * std::pow(s, 1.5) * y;
        c = c.cwiseAbs();
        u = disc->unscaled(c);
        if (u.maxCoeff() <= 0) throw SolverError("fixed_point: iterate collapsed to zero", best);
        double res = equation_residual(*disc, u, cfg.mass_shift);
        best = std::min(best, res);
        if (res <= cfg.tol) return make_ground_state(disc, u, cfg.mass_shift, SolverMethod::fixed_point, cfg.tol, it);
    }
    std::ostringstream msg;
    msg << "fixed_point: no convergence within max_iter (best residual " << std::scientific << best << ")";
    throw SolverError(msg.str(), best);
}

} // namespace

GroundState solve_ground_state(DiscretizationPtr disc, const SolverConfig& cfg)
{
    if (!(cfg.tol > 0)) throw std::invalid_argument("solver tol must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("solver max_iter must be >= 1");
    if (!(cfg.damping > 0 && cfg.damping <= 1)) throw std::invalid_argument("solver damping must lie in (0, 1]");
    if (!(1 + cfg.mass_shift > 0)) throw std::invalid_argument("solver requires 1 + mass_shift > 0");
    if (cfg.method == SolverMethod::fixed_point) return fixed_point(disc, cfg);
    auto shot = detail::shoot(*disc->grid, cfg.mass_shift);
    return make_ground_state(disc, shot.profile, cfg.mass_shift, SolverMethod::shooting, cfg.tol, shot.bisections);
}

GroundState solve_ground_state(GridPtr grid, const SolverConfig& cfg)
{
    return solve_ground_state(Discretization::make(std::move(grid)), cfg);
}

double nonlocal_pairing(const GroundState& gs)
{
    const auto& g = *gs.disc->grid;
    RadialFunction u2(gs.disc->grid, gs.profile.values.cwiseAbs2());
    RadialFunction v = radial_newton_potential(u2);
    return sphere_area(g.dim) * g.weights.dot(v.values.cwiseProduct(u2.values));
}

double nonlocal_double_quadrature(const GroundState& gs)
{
    const auto& g = *gs.disc->grid;
    const int n = g.dim;
    Eigen::VectorXd u2 = gs.profile.values.cwiseAbs2();
    double s = 0;
    for (int i = 0; i < g.size(); ++i) {
        double r = g.nodes(i);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(g.size());
        accumulate_power_integral(g, 0.0, r, n - 1.0, 1.0 / ((n - 2) * std::pow(r, n - 2)), row);
        s += g.weights(i) * u2(i) * row.dot(u2);
    }
    return 2 * sphere_area(n) * s;
}

DecayFit fit_decay(const GroundState& gs, std::pair<double, double> window)
{
    const auto& g = *gs.disc->grid;
    const int n = gs.dim;
    const double nu = gs.nu;
    auto [lo, hi] = window;
    if (!(lo > nu) || !(hi > lo) || hi >= g.r_max) throw std::invalid_argument("fit_decay: window must satisfy nu < lo < hi < r_max");
    std::vector<int> idx;
    for (int i = 0; i < g.size(); ++i)
        if (g.nodes(i) >= lo && g.nodes(i) <= hi) idx.push_back(i);
    if (idx.size() < 10) throw std::invalid_argument("fit_decay: window holds fewer than 10 nodes");
    const auto gl = gauss_legendre<double>(64);
    auto phi = [&](double r) {
        // s = nu + t^2 removes the square-root endpoint behavior
        double T = std::sqrt(r - nu), s = 0;
        for (int q = 0; q < gl.x.size(); ++q) {
            double t = 0.5 * T * (gl.x(q) + 1);
            double x = nu + t * t;
            s += 0.5 * T * gl.w(q) * 2 * t * std::sqrt(1 - std::pow(nu / x, n - 2));
        }
        return s;
    };
    Eigen::MatrixXd A(idx.size(), 2);
    Eigen::VectorXd y(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
        double r = g.nodes(idx[j]);
        double u = gs.profile.values(idx[j]);
        if (!(u > 1e-12)) throw std::invalid_argument("fit_decay: profile underflows inside the window");
        A(j, 0) = 1;
        A(j, 1) = -phi(r);
        y(j) = std::log(u) + 0.5 * (n - 1) * std::log(r);
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    Eigen::VectorXd res = A * c - y;
    double spread = y.maxCoeff() - y.minCoeff();
    return {c(1), std::sqrt(res.squaredNorm() / res.size()) / spread, static_cast<int>(idx.size())};
}

double derivative_decay_rate(const GroundState& gs, std::pair<double, double> window)
{
    const auto& g = *gs.disc->grid;
    Eigen::VectorXd du = gs.disc->D * gs.profile.values;
    std::vector<int> idx;
    for (int i = 0; i < g.size(); ++i)
        if (g.nodes(i) >= window.first && g.nodes(i) <= window.second && std::abs(du(i)) > 0) idx.push_back(i);
    if (idx.size() < 10) throw std::invalid_argument("derivative_decay_rate: window holds fewer than 10 nodes");
    Eigen::MatrixXd A(idx.size(), 2);
    Eigen::VectorXd y(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
        A(j, 0) = 1;
        A(j, 1) = g.nodes(idx[j]);
        y(j) = std::log(std::abs(du(idx[j])));
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
    return -c(1);
}

RadialFunction rescale_state(const GroundState& gs, double mu)
{
    if (!(1 + mu > 0)) throw std::invalid_argument("rescale_state: requires 1 + mu > 0");
    const auto& g = *gs.disc->grid;
    const double a = 1 + mu, b = std::sqrt(1 + mu);
    Eigen::VectorXd z(g.size());
    for (int i = 0; i < g.size(); ++i) z(i) = a * gs.profile(b * g.nodes(i));
    std::optional<ExponentialTail> tail;
    if (gs.profile.tail) tail = ExponentialTail{a * gs.profile.tail->amplitude, b * gs.profile.tail->rate};
    return RadialFunction(gs.profile.grid, z, tail);
}

} // namespace hartree

namespace hartree {

std::string format_real(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_cache(const GroundState& gs)
{
    const auto& g = *gs.disc->grid;
    std::string out = g.descriptor() + "\n";
    out += "method=" + to_string(gs.method) + " tol=" + format_real(gs.tol) + " residual=" + format_real(gs.residual) +
           " mass=" + format_real(gs.l2_mass) + " nu=" + format_real(gs.nu) + " energy=" + format_real(gs.energy) +
           "\n";
    for (int i = 0; i < g.size(); ++i) out += format_real(g.nodes(i)) + " " + format_real(gs.profile.values(i)) + "\n";
    return out;
}

namespace {

double parse_real(const std::string& s, const std::string& what)
{
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw std::invalid_argument("cache: bad " + what + " '" + s + "'");
    return v;
}

} // namespace

GroundStateCache parse_cache(const std::string& text)
{
    std::istringstream in(text);
    GroundStateCache c;
    std::string line;
    if (!std::getline(in, c.grid) || c.grid.rfind("n=", 0) != 0) throw std::invalid_argument("cache: missing grid header");
    if (!std::getline(in, line)) throw std::invalid_argument("cache: missing solver header");
    std::istringstream hs(line);
    std::string item;
    std::map<std::string, std::string> kv;
    while (hs >> item) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("cache: bad header item '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    for (const char* key : {"method", "tol", "residual", "mass", "nu", "energy"})
        if (!kv.count(key)) throw std::invalid_argument(std::string("cache: header lacks ") + key);
    if (kv.size() != 6) throw std::invalid_argument("cache: unexpected header items");
    c.method = parse_method(kv["method"]);
    c.tol = parse_real(kv["tol"], "tol");
    c.residual = parse_real(kv["residual"], "residual");
    c.mass = parse_real(kv["mass"], "mass");
    c.nu = parse_real(kv["nu"], "nu");
    c.energy = parse_real(kv["energy"], "energy");
    std::vector<double> r, v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a >> b) || (ls >> extra)) throw std::invalid_argument("cache: bad row '" + line + "'");
        r.push_back(parse_real(a, "node"));
        v.push_back(parse_real(b, "value"));
    }
    if (r.empty()) throw std::invalid_argument("cache: no rows");
    c.r = Eigen::Map<Eigen::VectorXd>(r.data(), Eigen::Index(r.size()));
    c.values = Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
    return c;
}

GroundState restore_ground_state(const GroundStateCache& c, DiscretizationPtr disc)
{
    const auto& g = *disc->grid;
    if (c.grid != g.descriptor()) throw std::invalid_argument("cache: grid '" + c.grid + "' does not match '" + g.descriptor() + "'");
    if (c.r.size() != g.size() || c.r != g.nodes) throw std::invalid_argument("cache: nodes differ from the grid");
    return make_ground_state(disc, c.values, 0.0, c.method, c.tol, 0);
}

} // namespace hartree
