#include "shooting.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace hartree::detail {

namespace odeint = boost::numeric::odeint;

namespace {

// y = (u, u', W, W', M) with M(s) = int_0^s t^(n-1) u^2 dt
using State = std::array<double, 5>;

constexpr double kStart = 1e-3;
constexpr double kAbsTol = 1e-20;
constexpr double kRelTol = 1e-13;

struct Coupled {
    int n;
    void operator()(const State& y, State& dy, double s) const
    {
        dy[0] = y[1];
        dy[1] = -(n - 1) / s * y[1] - y[2] * y[0];
        dy[2] = y[3];
        dy[3] = -(n - 1) / s * y[3] - y[0] * y[0];
        dy[4] = std::pow(s, n - 1) * y[0] * y[0];
    }
};

// Taylor data at small s for u(0) = 1, W(0) = w0.
State series(int n, double w0, double s)
{
    double a = -w0 / (2.0 * n);
    double c = -1.0 / (2.0 * n);
    double b = -(w0 * a + c) / (4.0 * (n + 2));
    double d = -a / (2.0 * (n + 2));
    double s2 = s * s;
    State y;
    y[0] = 1 + a * s2 + b * s2 * s2;
    y[1] = 2 * a * s + 4 * b * s2 * s;
    y[2] = w0 + c * s2 + d * s2 * s2;
    y[3] = 2 * c * s + 4 * d * s2 * s;
    y[4] = std::pow(s, n) / n + 2 * a * std::pow(s, n + 2) / (n + 2);
    return y;
}

enum class Outcome { crossed, turned, ran_out };

struct Trajectory {
    Outcome outcome;
    double event;
};

// Integrates from the origin until u changes sign or starts to grow; calls
// sink(k, state) for every requested output radius reached before that. With
// outputs requested, returns once they are all served.
template <typename Sink>
Trajectory integrate(int n, double w0, const std::vector<double>& outputs, Sink&& sink, double s_cap = 1e3)
{
    size_t next = 0;
    while (next < outputs.size() && outputs[next] <= kStart) {
        sink(next, series(n, w0, outputs[next]));
        ++next;
    }
    auto stepper = odeint::make_dense_output(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(series(n, w0, kStart), kStart, 1e-4);
    Coupled sys{n};
    while (stepper.current_time() < s_cap) {
        auto [t0, t1] = stepper.do_step(sys);
        (void)t0;
        const State& y = stepper.current_state();
        bool crossed = y[0] < 0;
        bool turned = y[1] > 0;
        double limit = t1;
        if (crossed || turned) {
            // first output beyond which the trajectory has already failed
            limit = t0;
        }
        while (next < outputs.size() && outputs[next] <= limit) {
            State x;
            stepper.calc_state(outputs[next], x);
            sink(next, x);
            ++next;
        }
        if (crossed) return {Outcome::crossed, t1};
        if (turned) return {Outcome::turned, t1};
        if (!outputs.empty() && next == outputs.size()) return {Outcome::ran_out, t1};
    }
    return {Outcome::ran_out, stepper.current_time()};
}

Trajectory classify(int n, double w0)
{
    return integrate(n, w0, {}, [](size_t, const State&) {});
}

// Decaying solution of u'' + (n-1)/s u' = (lambda - m/((n-2) s^(n-2))) u,
// integrated inward from s_far; returns values at outputs (descending order
// handled internally) and the moments int s^(n-1) u^2, int s u^2 over [s_c, s_far].
struct Tail {
    std::vector<double> values;
    double at_match;
    double moment_n;
    double moment_1;
};

Tail inward_tail(int n, double lambda, double mass, double s_c, double s_far, const std::vector<double>& outputs)
{
    using TState = std::array<double, 4>;
    auto q = [&](double s) { return lambda - mass / ((n - 2) * std::pow(s, n - 2)); };
    auto sys = [&](const TState& y, TState& dy, double s) {
        dy[0] = y[1];
        dy[1] = -(n - 1) / s * y[1] + q(s) * y[0];
        dy[2] = std::pow(s, n - 1) * y[0] * y[0];
        dy[3] = s * y[0] * y[0];
    };
    // WKB slope at the far end; the inward direction damps any mismatch
    double k = std::sqrt(std::max(q(s_far), 1e-12));
    TState y{1.0, -(k + 0.5 * (n - 1) / s_far), 0.0, 0.0};
    auto stepper = odeint::make_dense_output(kAbsTol, kRelTol, odeint::runge_kutta_dopri5<TState>());
    stepper.initialize(y, s_far, -1e-3);

    Tail out;
    out.values.assign(outputs.size(), 0.0);
    int next = static_cast<int>(outputs.size()) - 1;
    while (next >= 0 && outputs[next] >= s_far) {
        out.values[next] = 0.0;
        --next;
    }
    while (stepper.current_time() > s_c) {
        auto [t0, t1] = stepper.do_step(sys);
        (void)t0;
        while (next >= 0 && outputs[next] >= std::max(t1, s_c)) {
            TState x;
            stepper.calc_state(outputs[next], x);
            out.values[next] = x[0];
            --next;
        }
    }
    TState m;
    stepper.calc_state(s_c, m);
    out.at_match = m[0];
    // moments accumulate with a negative sign inward
    out.moment_n = -m[2];
    out.moment_1 = -m[3];
    return out;
}

} // namespace

ShootingResult shoot(const RadialGrid& grid, double mass_shift)
{
    const int n = grid.dim;
    if (!(1 + mass_shift > 0)) throw std::invalid_argument("shoot: requires 1 + mass_shift > 0");

    // bracket the separatrix value of W(0)
    double lo = 0.0, hi = 1.0;
    if (classify(n, lo).outcome != Outcome::turned) throw std::runtime_error("shoot: lower bracket failed");
    int guard = 0;
    while (classify(n, hi).outcome != Outcome::crossed) {
        lo = hi;
        hi *= 2;
        if (++guard > 60) throw std::runtime_error("shoot: upper bracket failed");
    }
    int bisections = 0;
    while (hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi && bisections < 200) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (classify(n, mid).outcome == Outcome::crossed)
            hi = mid;
        else
            lo = mid;
        ++bisections;
    }

    // the two bracketing trajectories agree up to the radius where the growing
    // mode takes over; beyond it the nonlinear trajectory is not trusted
    double reach = std::min(classify(n, lo).event, classify(n, hi).event);
    const int samples = 8000;
    std::vector<double> s(samples);
    for (int j = 0; j < samples; ++j) s[j] = reach * (j + 1) / samples;
    std::vector<State> a(samples), b(samples);
    std::vector<bool> ha(samples, false), hb(samples, false);
    integrate(n, lo, s, [&](size_t k, const State& y) { a[k] = y; ha[k] = true; });
    integrate(n, hi, s, [&](size_t k, const State& y) { b[k] = y; hb[k] = true; });
    int trust = -1;
    for (int j = 0; j < samples; ++j) {
        if (!ha[j] || !hb[j]) break;
        if (std::abs(a[j][0] - b[j][0]) > 1e-6 * std::abs(a[j][0])) break;
        trust = j;
    }
    if (trust < 10) throw std::runtime_error("shoot: separatrix not resolved");
    const double s_c = s[trust];
    const State& yc = a[trust];

    // eigen-parameter -W(inf) from the far-field form of W, refined with the
    // tail's own mass
    double moment_n = 0, moment_1 = 0, lambda = 0, scale = 1;
    double mass = yc[4];
    std::vector<double> none;
    for (int pass = 0; pass < 4; ++pass) {
        lambda = -yc[2] + (yc[4] / std::pow(s_c, n - 2) + moment_1) / (n - 2);
        mass = yc[4] + moment_n;
        double b_scale = std::sqrt((1 + mass_shift) / lambda);
        double s_far = std::max(b_scale * grid.r_max, s_c) + 12 / std::sqrt(lambda);
        Tail t = inward_tail(n, lambda, mass, s_c, s_far, none);
        scale = yc[0] / t.at_match;
        moment_n = scale * scale * t.moment_n;
        moment_1 = scale * scale * t.moment_1;
    }

    const double bs = std::sqrt((1 + mass_shift) / lambda);
    std::vector<double> inner, outer;
    for (int i = 0; i < grid.size(); ++i) {
        double si = bs * grid.nodes(i);
        (si <= s_c ? inner : outer).push_back(si);
    }
    Eigen::VectorXd U(grid.size());
    int filled = 0;
    integrate(n, lo, inner, [&](size_t k, const State& y) {
        U(k) = bs * bs * y[0];
        ++filled;
    });
    if (filled != static_cast<int>(inner.size())) throw std::runtime_error("shoot: trajectory ended before the trusted radius");
    if (!outer.empty()) {
        double s_far = outer.back() + 12 / std::sqrt(lambda);
        Tail t = inward_tail(n, lambda, mass, s_c, s_far, outer);
        double sc = yc[0] / t.at_match;
        for (size_t k = 0; k < outer.size(); ++k) U(inner.size() + k) = bs * bs * sc * t.values[k];
    }
    return {U, lambda, s_c / bs, bisections};
}

} // namespace hartree::detail
