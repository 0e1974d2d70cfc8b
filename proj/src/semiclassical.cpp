#include "hartree/semiclassical.hpp"
#include "hartree/parallel.hpp"
#include "hartree/quadrature.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hartree {

// --- boxes and potentials --------------------------------------------------

Box Box::cube(int n, double half_width)
{
    return {Eigen::VectorXd::Constant(n, -half_width), Eigen::VectorXd::Constant(n, half_width)};
}

bool Box::contains(const Eigen::VectorXd& x, double slack) const
{
    return ((x - lower).array() >= -slack).all() && ((upper - x).array() >= -slack).all();
}

Eigen::VectorXd Potential::gradient(const Eigen::VectorXd& x) const
{
    if (analytic_gradient) return analytic_gradient(x);
    const double h = 1e-5 * (1 + x.norm());
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd y = x;
    for (int i = 0; i < x.size(); ++i) {
        y(i) = x(i) + h;
        double fp = value(y);
        y(i) = x(i) - h;
        double fm = value(y);
        y(i) = x(i);
        g(i) = (fp - fm) / (2 * h);
    }
    return g;
}

Eigen::MatrixXd Potential::hessian(const Eigen::VectorXd& x) const
{
    const double h = 1e-5 * (1 + x.norm());
    const int n = int(x.size());
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd y = x;
    for (int i = 0; i < n; ++i) {
        y(i) = x(i) + h;
        Eigen::VectorXd gp = gradient(y);
        y(i) = x(i) - h;
        Eigen::VectorXd gm = gradient(y);
        y(i) = x(i);
        H.col(i) = (gp - gm) / (2 * h);
    }
    return 0.5 * (H + H.transpose());
}

// --- expressions -----------------------------------------------------------

struct Expression::Node {
    char op = 0; // 'n' number, 'x' variable, 'e' exp, 'c' cos, '~' negate, or + - * / ^
    double value = 0;
    int index = 0;
    std::shared_ptr<const Node> a, b;

    double eval(const Eigen::VectorXd& x) const
    {
        switch (op) {
        case 'n': return value;
        case 'x': return x(index);
        case 'e': return std::exp(a->eval(x));
        case 'c': return std::cos(a->eval(x));
        case '~': return -a->eval(x);
        case '+': return a->eval(x) + b->eval(x);
        case '-': return a->eval(x) - b->eval(x);
        case '*': return a->eval(x) * b->eval(x);
        case '/': return a->eval(x) / b->eval(x);
        case '^': {
            double base = a->eval(x);
            // small integer powers exactly
            if (b->op == 'n' && b->value == std::round(b->value) && std::abs(b->value) <= 8) {
                int p = int(b->value);
                double r = 1;
                for (int i = 0; i < std::abs(p); ++i) r *= base;
                return p < 0 ? 1 / r : r;
            }
            return std::pow(base, b->eval(x));
        }
        }
        return 0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
    Parser(const std::string& s, int n) : s_(s), n_(n) {}

    NodePtr parse()
    {
        NodePtr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    const std::string& s_;
    int n_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw std::invalid_argument("expression: " + what + " at position " + std::to_string(pos_));
    }
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static NodePtr binary(char op, NodePtr a, NodePtr b)
    {
        auto n = std::make_shared<Expression::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }
    NodePtr expr()
    {
        NodePtr e = term();
        for (;;) {
            if (eat('+')) e = binary('+', e, term());
            else if (eat('-')) e = binary('-', e, term());
            else return e;
        }
    }
    NodePtr term()
    {
        NodePtr e = unary();
        for (;;) {
            if (eat('*')) e = binary('*', e, unary());
            else if (eat('/')) e = binary('/', e, unary());
            else return e;
        }
    }
    NodePtr unary()
    {
        if (eat('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->op = '~';
            n->a = unary();
            return n;
        }
        if (eat('+')) return unary();
        return power();
    }
    NodePtr power()
    {
        NodePtr base = primary();
        if (eat('^')) return binary('^', base, unary());
        return base;
    }
    NodePtr primary()
    {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += size_t(end - begin);
            auto n = std::make_shared<Expression::Node>();
            n->op = 'n';
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string word = s_.substr(start, pos_ - start);
            if (word == "exp" || word == "cos") {
                if (!eat('(')) fail("expected '(' after " + word);
                auto n = std::make_shared<Expression::Node>();
                n->op = word == "exp" ? 'e' : 'c';
                n->a = expr();
                if (!eat(')')) fail("missing ')'");
                return n;
            }
            if (word.size() >= 2 && word[0] == 'x' &&
                std::all_of(word.begin() + 1, word.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
                int i = std::stoi(word.substr(1));
                if (i < 1 || i > n_) fail("variable " + word + " out of range");
                auto n = std::make_shared<Expression::Node>();
                n->op = 'x';
                n->index = i - 1;
                return n;
            }
            fail("unknown name '" + word + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

std::vector<double> parse_params(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("potential: bad parameter '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument("potential: bad parameter '" + item + "'");
        out.push_back(v);
    }
    return out;
}

} // namespace

Expression::Expression(const std::string& text, int n) : root_(Parser(text, n).parse()), dim_(n) {}

double Expression::operator()(const Eigen::VectorXd& x) const
{
    if (x.size() != dim_) throw std::invalid_argument("expression: dimension mismatch");
    return root_->eval(x);
}

Potential make_potential(const std::string& spec, int n)
{
    if (n < 2) throw std::invalid_argument("potential: dimension must be >= 2");
    auto colon = spec.find(':');
    std::string name = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    Potential V;
    V.dim = n;
    V.name = spec;
    if (name == "expr") {
        if (rest.empty()) throw std::invalid_argument("potential: empty expression");
        Expression e(rest, n);
        V.value = [e](const Eigen::VectorXd& x) { return e(x); };
        return V;
    }
    std::vector<double> p = parse_params(rest);
    auto want = [&](size_t count, std::vector<double> defaults) {
        if (p.empty()) p = std::move(defaults);
        if (p.size() != count) throw std::invalid_argument("potential: " + name + " takes " + std::to_string(count) + " parameters");
    };
    if (name == "quadratic") {
        want(1, {1.0});
        double a = p[0];
        V.value = [a](const Eigen::VectorXd& x) { return a * x.squaredNorm(); };
        V.analytic_gradient = [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 2 * a * x; };
    } else if (name == "double_well") {
        want(2, {0.25, 1.0});
        double a = p[0], b = p[1];
        V.value = [a, b](const Eigen::VectorXd& x) {
            double q = x(0) * x(0) - b * b;
            return a * q * q + x.tail(x.size() - 1).squaredNorm();
        };
        V.analytic_gradient = [a, b](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            Eigen::VectorXd g = 2 * x;
            g(0) = 4 * a * x(0) * (x(0) * x(0) - b * b);
            return g;
        };
    } else if (name == "ring") {
        want(2, {0.25, 1.0});
        double a = p[0], R = p[1];
        V.value = [a, R](const Eigen::VectorXd& x) {
            double q = x(0) * x(0) + x(1) * x(1) - R * R;
            return a * q * q + x.tail(x.size() - 2).squaredNorm();
        };
        V.analytic_gradient = [a, R](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            Eigen::VectorXd g = 2 * x;
            double q = x(0) * x(0) + x(1) * x(1) - R * R;
            g(0) = 4 * a * q * x(0);
            g(1) = 4 * a * q * x(1);
            return g;
        };
    } else if (name == "constant") {
        want(1, {0.0});
        double mu = p[0];
        V.value = [mu](const Eigen::VectorXd&) { return mu; };
        V.analytic_gradient = [n](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(n); };
    } else if (name == "linear") {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        c(0) = 0.1;
        if (!p.empty()) {
            if (int(p.size()) != n) throw std::invalid_argument("potential: linear takes n parameters");
            c = Eigen::Map<Eigen::VectorXd>(p.data(), n);
        }
        V.value = [c](const Eigen::VectorXd& x) { return c.dot(x); };
        V.analytic_gradient = [c](const Eigen::VectorXd&) -> Eigen::VectorXd { return c; };
    } else {
        throw std::invalid_argument("unknown potential: " + name);
    }
    return V;
}

PotentialCheck check_potential(const Potential& V, const Box& box, int samples, unsigned seed)
{
    const int n = V.dim;
    std::vector<Eigen::VectorXd> pts;
    for (int mask = 0; mask < (1 << n); ++mask) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = (mask >> i & 1) ? box.upper(i) : box.lower(i);
        pts.push_back(x);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
        pts.push_back(x);
    }
    PotentialCheck c;
    c.min_one_plus_v = std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
        double v = V(x);
        if (!std::isfinite(v) || !V.gradient(x).allFinite()) c.finite = false;
        c.min_one_plus_v = std::min(c.min_one_plus_v, 1 + v);
    }
    c.ok = c.finite && c.min_one_plus_v > 0;
    return c;
}

// --- quadrature ------------------------------------------------------------

AngularRule AngularRule::make(int n, int degree)
{
    if (n < 2) throw std::invalid_argument("AngularRule: n must be >= 2");
    if (degree < 0) throw std::invalid_argument("AngularRule: degree must be >= 0");
    const double pi = std::numbers::pi;
    AngularRule rule;
    rule.dim = n;
    rule.degree = degree;
    // polar angles theta_1..theta_(n-2) carry sin^(n-1-j); t = cos theta with
    // weight (1-t^2)^((m-1)/2)
    const int q = degree / 2 + 1;
    std::vector<Rule1D<double>> polar;
    for (int j = 1; j <= n - 2; ++j) {
        double a = 0.5 * (n - 1 - j - 1);
        polar.push_back(gauss_jacobi<double>(q, a, a));
    }
    const int m_az = degree + 1;
    std::vector<int> idx(polar.size(), 0);
    std::vector<double> w;
    for (;;) {
        for (int a = 0; a < m_az; ++a) {
            double phi = 2 * pi * a / m_az;
            Eigen::VectorXd x(n);
            double s = 1, wt = 2 * pi / m_az;
            for (size_t j = 0; j < polar.size(); ++j) {
                double t = polar[j].x(idx[j]);
                x(j) = s * t;
                s *= std::sqrt(std::max(0.0, 1 - t * t));
                wt *= polar[j].w(idx[j]);
            }
            x(n - 2) = s * std::cos(phi);
            x(n - 1) = s * std::sin(phi);
            rule.points.push_back(x);
            w.push_back(wt);
        }
        size_t j = 0;
        while (j < idx.size() && ++idx[j] == q) idx[j++] = 0;
        if (j == idx.size()) break;
    }
    rule.weights = Eigen::Map<Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
    return rule;
}

// --- soliton quantities ----------------------------------------------------

double constant_C0(const GroundState& gs)
{
    const int n = gs.dim;
    return (n - 2) * sphere_area(n) * nonlocal_pairing(gs);
}

double constant_C0_double_quadrature(const GroundState& gs)
{
    const int n = gs.dim;
    return (n - 2) * sphere_area(n) * nonlocal_double_quadrature(gs);
}

double constant_C1(const GroundState& gs)
{
    return 0.25 * nonlocal_pairing(gs);
}

double rescaled_nonlocal(const GroundState& gs, double mu)
{
    RadialFunction z = rescale_state(gs, mu);
    GroundState zs = make_ground_state(gs.disc, z.values, mu, gs.method, gs.tol, 0);
    return nonlocal_pairing(zs);
}

double leading_term(const GroundState& gs, double v)
{
    if (!(1 + v > 0)) throw std::invalid_argument("leading_term: requires 1 + V > 0");
    return constant_C1(gs) * std::pow(1 + v, 3 - 0.5 * gs.dim);
}

namespace {

void check_bare(const GroundState& gs)
{
    if (gs.mass_shift != 0) throw std::invalid_argument("semiclassical: ground state must have mass 1");
}

ShellMoments moments_with(const RadialFunction& z, const Potential& V, double eps, const Eigen::VectorXd& xi,
                          double v0, const AngularRule& rule)
{
    const auto& g = *z.grid;
    Eigen::VectorXd z2w = g.weights.cwiseProduct(z.values.cwiseAbs2());
    const double cut = 1e-30 * z2w.cwiseAbs().maxCoeff();
    const Eigen::VectorXd p = eps * xi;
    const int N = g.size();
    Eigen::VectorXd pot = Eigen::VectorXd::Zero(N), var = pot, sq = pot;
    parallel_for(N, [&](int i) {
        if (std::abs(z2w(i)) <= cut) return;
        double a = 0, b = 0, c = 0;
        for (size_t k = 0; k < rule.points.size(); ++k) {
            double v = V(p + eps * g.nodes(i) * rule.points[k]);
            double d = v - v0;
            a += rule.weights(k) * v;
            b += rule.weights(k) * d;
            c += rule.weights(k) * d * d;
        }
        pot(i) = z2w(i) * a;
        var(i) = z2w(i) * b;
        sq(i) = z2w(i) * c;
    });
    ShellMoments m;
    m.v_at_center = v0;
    m.mass = sphere_area(g.dim) * z2w.sum();
    m.potential = pot.sum();
    m.variation = var.sum();
    m.squared = sq.sum();
    return m;
}

bool close(double a, double b, double tol, double scale)
{
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b)}) + 1e-15 * scale;
}

} // namespace

ShellMoments shell_moments(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                           const ShellOptions& opt)
{
    check_bare(gs);
    if (!(eps > 0)) throw std::invalid_argument("semiclassical: eps must be positive");
    if (xi.size() != gs.dim || V.dim != gs.dim) throw std::invalid_argument("semiclassical: dimension mismatch");
    const double v0 = V(eps * xi);
    RadialFunction z = rescale_state(gs, v0);
    ShellMoments m = moments_with(z, V, eps, xi, v0, AngularRule::make(gs.dim, opt.degree));
    if (opt.refine) {
        ShellMoments f = moments_with(z, V, eps, xi, v0, AngularRule::make(gs.dim, opt.degree + 4));
        double scale = std::abs(m.potential) + std::abs(v0) * m.mass + m.mass;
        if (!close(m.potential, f.potential, opt.refine_tol, scale) || !close(m.variation, f.variation, opt.refine_tol, scale) ||
            !close(m.squared, f.squared, opt.refine_tol, scale * std::max(1.0, std::abs(v0))))
            throw ShellDegreeError("shell quadrature: degree " + std::to_string(opt.degree) +
                                   " disagrees with degree " + std::to_string(opt.degree + 4) + "; raise the degree");
    }
    return m;
}

double soliton_energy(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                      const ShellOptions& opt)
{
    ShellMoments m = shell_moments(gs, V, eps, xi, opt);
    RadialFunction z = rescale_state(gs, m.v_at_center);
    return energy_functional(*gs.disc, z.values, 0.0) + 0.5 * m.potential;
}

double gradient_bound_proxy(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                            const ShellOptions& opt)
{
    return std::sqrt(std::max(0.0, shell_moments(gs, V, eps, xi, opt).squared));
}

double gamma_leading(const GroundState& gs, const Potential& V, double eps, const Eigen::VectorXd& xi,
                     const ShellOptions& opt)
{
    return 0.5 * shell_moments(gs, V, eps, xi, opt).variation;
}

// --- sweeps ----------------------------------------------------------------

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need at least two points");
    const int m = int(x.size());
    Eigen::MatrixXd A(m, 2);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) throw std::invalid_argument("fit_loglog: values must be positive");
        A(i, 0) = 1;
        A(i, 1) = std::log(x[i]);
        b(i) = std::log(y[i]);
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    Eigen::VectorXd r = b - A * c;
    SlopeFit f;
    f.intercept = c(0);
    f.slope = c(1);
    f.residual = std::sqrt(r.squaredNorm() / m);
    if (m > 2) {
        double s2 = r.squaredNorm() / (m - 2);
        Eigen::Matrix2d cov = s2 * (A.transpose() * A).inverse();
        f.stderr_slope = std::sqrt(cov(1, 1));
    }
    return f;
}

std::vector<double> default_eps()
{
    return {0.2, 0.1, 0.05, 0.025};
}

SemiclassicalReport semiclassical_sweep(const GroundState& gs, const Potential& V,
                                        const std::vector<Eigen::VectorXd>& points, const std::vector<double>& eps,
                                        const ShellOptions& opt)
{
    if (eps.empty()) throw std::invalid_argument("semiclassical_sweep: empty eps list");
    for (size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0)) throw std::invalid_argument("semiclassical_sweep: eps must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw std::invalid_argument("semiclassical_sweep: eps must be strictly decreasing");
    }
    SemiclassicalReport rep;
    rep.dim = gs.dim;
    rep.potential = V.name;
    rep.eps = eps;
    rep.C0 = constant_C0(gs);
    rep.C1 = constant_C1(gs);
    for (const auto& p : points) {
        PointFits pf;
        pf.point = p;
        std::vector<double> gp, ga, ee;
        for (double e : eps) {
            Eigen::VectorXd xi = p / e;
            ShellMoments m = shell_moments(gs, V, e, xi, opt);
            RadialFunction z = rescale_state(gs, m.v_at_center);
            SweepRow row;
            row.eps = e;
            row.point = p;
            row.energy = energy_functional(*gs.disc, z.values, 0.0) + 0.5 * m.potential;
            row.leading = rep.C1 * std::pow(1 + m.v_at_center, 3 - 0.5 * gs.dim);
            row.gradient_proxy = std::sqrt(std::max(0.0, m.squared));
            row.gamma = 0.5 * m.variation;
            row.energy_error = std::abs(row.energy - row.leading);
            rep.rows.push_back(row);
            gp.push_back(row.gradient_proxy);
            ga.push_back(std::abs(row.gamma));
            ee.push_back(row.energy_error);
        }
        auto fit = [&](const std::vector<double>& y) {
            bool positive = std::all_of(y.begin(), y.end(), [](double v) { return v > 0; });
            return positive && eps.size() >= 2 ? fit_loglog(eps, y) : SlopeFit{};
        };
        pf.gradient_proxy = fit(gp);
        pf.gamma = fit(ga);
        pf.energy_error = fit(ee);
        rep.fits.push_back(pf);
    }
    return rep;
}

// --- concentration ---------------------------------------------------------

std::string to_string(CriticalKind k)
{
    switch (k) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
    }
    return "unknown";
}

namespace {

// pseudo-inverse Newton step for grad V = 0
Eigen::VectorXd newton_step(const Eigen::MatrixXd& H, const Eigen::VectorXd& g)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd& ev = es.eigenvalues();
    double cut = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd gc = es.eigenvectors().transpose() * g;
    for (int i = 0; i < gc.size(); ++i) gc(i) = std::abs(ev(i)) > cut ? gc(i) / ev(i) : 0.0;
    return -(es.eigenvectors() * gc);
}

std::optional<Eigen::VectorXd> newton_critical(const Potential& V, Eigen::VectorXd x, const Box& box, double tol)
{
    const double slack = 1e-6 * (box.upper - box.lower).maxCoeff();
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd g = V.gradient(x);
        double gn = g.norm();
        if (!std::isfinite(gn)) return std::nullopt;
        if (gn <= 1e-3 * tol) break;
        Eigen::VectorXd s = newton_step(V.hessian(x), g);
        if (s.norm() == 0) s = -g;
        double t = 1;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            Eigen::VectorXd y = x + t * s;
            double yn = V.gradient(y).norm();
            if (std::isfinite(yn) && yn < gn) {
                x = y;
                moved = true;
                break;
            }
        }
        if (!moved) break;
        if (!box.contains(x, 10 * slack + 1)) return std::nullopt;
    }
    if (!(V.gradient(x).norm() <= tol) || !box.contains(x, slack)) return std::nullopt;
    return x;
}

} // namespace

ConcentrationResult predict_concentration(const GroundState& gs, const Potential& V, const Box& box, double eps,
                                          const ConcentrationOptions& opt, const ShellOptions& shell)
{
    const int n = V.dim;
    if (box.lower.size() != n || box.upper.size() != n) throw std::invalid_argument("predict_concentration: box dimension mismatch");
    if (!((box.upper - box.lower).array() > 0).all()) throw std::invalid_argument("predict_concentration: empty box");
    ConcentrationResult res;
    auto chk = check_potential(V, box);
    if (!chk.ok) res.notes.push_back("potential fails 1 + V > 0 or finiteness on box samples");

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::VectorXd> starts(opt.starts);
    for (auto& s : starts) {
        s.resize(n);
        for (int i = 0; i < n; ++i) s(i) = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
    }
    std::vector<std::optional<Eigen::VectorXd>> found(starts.size());
    parallel_for(int(starts.size()), [&](int i) { found[i] = newton_critical(V, starts[i], box, opt.gradient_tol); });

    for (const auto& f : found) {
        if (!f) continue;
        bool dup = false;
        for (const auto& c : res.points)
            if ((c.x - *f).norm() < opt.merge_distance) dup = true;
        if (dup) continue;
        CriticalPoint c;
        c.x = *f;
        res.points.push_back(c);
    }
    if (res.points.empty()) res.notes.push_back("no critical point found in the box");

    const double C1 = constant_C1(gs);
    std::vector<std::exception_ptr> errors(res.points.size());
    parallel_for(int(res.points.size()), [&](int i) {
        auto& c = res.points[i];
        try {
            c.value = V(c.x);
            c.gradient_norm = V.gradient(c.x).norm();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V.hessian(c.x), Eigen::EigenvaluesOnly);
            c.hessian_eigenvalues = es.eigenvalues();
            double scale = std::max(1.0, c.hessian_eigenvalues.cwiseAbs().maxCoeff());
            double small = c.hessian_eigenvalues.cwiseAbs().minCoeff();
            if (small < 1e-6 * scale) c.kind = CriticalKind::degenerate;
            else if (c.hessian_eigenvalues.minCoeff() > 0) c.kind = CriticalKind::minimum;
            else if (c.hessian_eigenvalues.maxCoeff() < 0) c.kind = CriticalKind::maximum;
            else c.kind = CriticalKind::saddle;
            if (1 + c.value > 0) c.h = C1 * std::pow(1 + c.value, 3 - 0.5 * n);
            if (1 + c.value > 0 && c.kind != CriticalKind::degenerate)
                c.gradient_proxy = gradient_bound_proxy(gs, V, eps, c.x / eps, shell);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    if (std::any_of(res.points.begin(), res.points.end(), [](const CriticalPoint& c) { return c.kind == CriticalKind::degenerate; }))
        res.notes.push_back("degenerate Hessian at some critical points (critical manifold or higher-order point)");
    std::sort(res.points.begin(), res.points.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.value != b.value) return a.value < b.value;
        return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
    });
    return res;
}

RankCheck rank_invariance(const GroundState& gs, const Potential& V, const Box& box, int samples, unsigned seed)
{
    const int n = V.dim;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RankCheck r;
    const double C1 = constant_C1(gs), expo = 3 - 0.5 * n;
    double vmin = 0, vmax = 0, hmin = 0, hmax = 0;
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
        double v = V(x);
        double h = C1 * std::pow(1 + v, expo);
        if (s == 0 || v < vmin) vmin = v, r.argmin_v = s;
        if (s == 0 || v > vmax) vmax = v, r.argmax_v = s;
        if (s == 0 || h < hmin) hmin = h, r.argmin_h = s;
        if (s == 0 || h > hmax) hmax = h, r.argmax_h = s;
    }
    return r;
}

} // namespace hartree
