#include "hartree/runner.hpp"

#include "hartree/linearized_spectrum.hpp"
#include "hartree/newton_potential.hpp"
#include "hartree/semiclassical.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace hartree {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Command c)
{
    switch (c) {
    case Command::ground_state: return "ground_state";
    case Command::spectrum: return "spectrum";
    case Command::multipole_verify: return "multipole_verify";
    case Command::identities: return "identities";
    case Command::semiclassical: return "semiclassical";
    }
    return "unknown";
}

Command parse_command(const std::string& name)
{
    for (Command c : {Command::ground_state, Command::spectrum, Command::multipole_verify, Command::identities,
                      Command::semiclassical})
        if (to_string(c) == name) return c;
    throw ConfigError("unknown command '" + name +
                      "' (ground_state, spectrum, multipole_verify, identities, semiclassical)");
}

std::string to_string(CachePolicy c)
{
    switch (c) {
    case CachePolicy::use: return "use";
    case CachePolicy::refresh: return "refresh";
    case CachePolicy::ignore: return "ignore";
    }
    return "unknown";
}

CachePolicy parse_cache_policy(const std::string& name)
{
    if (name == "use") return CachePolicy::use;
    if (name == "refresh") return CachePolicy::refresh;
    if (name == "ignore") return CachePolicy::ignore;
    throw ConfigError("unknown cache policy '" + name + "' (use, refresh, ignore)");
}

std::string usage()
{
    return "usage: hartree-lab <command> [--config path] [--n {3|4|5}] [--r-max R] [--grid-n N] [--tol T]\n"
           "                   [--k-max K] [--eps list] [--potential spec] [--out dir]\n"
           "                   [--cache {use|refresh|ignore}]\n"
           "commands: ground_state spectrum identities multipole_verify semiclassical\n";
}

// --- configuration ---------------------------------------------------------

namespace {

// values given explicitly, from the file or the flags
struct Given {
    std::optional<std::string> command;
    std::optional<int> n, grid_n, k_max;
    std::optional<double> r_max, tol, box;
    std::optional<std::vector<double>> eps;
    std::optional<std::string> potential, out, cache;
    std::optional<std::vector<std::vector<double>>> points;
};

struct Flags {
    Given given;
    std::optional<std::string> config;
};

Flags parse_flags(const std::vector<std::string>& args)
{
    CLI::App app{"hartree-lab"};
    app.set_help_flag();
    std::string command, cmd, config, potential, out;
    std::vector<std::string> cache;
    int n = 0, grid_n = 0, k_max = 0;
    double r_max = 0, tol = 0;
    std::vector<double> eps;
    auto* o_command = app.add_option("command", command);
    auto* o_cmd = app.add_option("--cmd", cmd);
    auto* o_config = app.add_option("--config", config);
    auto* o_n = app.add_option("--n", n);
    auto* o_r = app.add_option("--r-max", r_max);
    auto* o_N = app.add_option("--grid-n", grid_n);
    auto* o_tol = app.add_option("--tol", tol);
    auto* o_k = app.add_option("--k-max", k_max);
    auto* o_eps = app.add_option("--eps", eps)->delimiter(',');
    auto* o_pot = app.add_option("--potential", potential);
    auto* o_out = app.add_option("--out", out);
    auto* o_cache = app.add_option("--cache", cache)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(std::string(e.what()));
    }
    Flags f;
    Given& g = f.given;
    if (o_command->count() && o_cmd->count() && command != cmd)
        throw ConfigError("contradictory commands '" + command + "' and '" + cmd + "'");
    if (o_command->count()) g.command = command;
    if (o_cmd->count()) g.command = cmd;
    if (o_config->count()) f.config = config;
    if (o_n->count()) g.n = n;
    if (o_r->count()) g.r_max = r_max;
    if (o_N->count()) g.grid_n = grid_n;
    if (o_tol->count()) g.tol = tol;
    if (o_k->count()) g.k_max = k_max;
    if (o_eps->count()) g.eps = eps;
    if (o_pot->count()) g.potential = potential;
    if (o_out->count()) g.out = out;
    if (o_cache->count()) {
        for (const auto& c : cache)
            if (c != cache.front())
                throw ConfigError("contradictory cache policy: '" + cache.front() + "' and '" + c + "'");
        g.cache = cache.front();
    }
    return f;
}

int json_int(const json& j, const std::string& key)
{
    if (!j.is_number_integer()) throw ConfigError("type mismatch for key '" + key + "': expected an integer");
    return j.get<int>();
}

double json_real(const json& j, const std::string& key)
{
    if (!j.is_number()) throw ConfigError("type mismatch for key '" + key + "': expected a number");
    return j.get<double>();
}

std::string json_string(const json& j, const std::string& key)
{
    if (!j.is_string()) throw ConfigError("type mismatch for key '" + key + "': expected a string");
    return j.get<std::string>();
}

std::vector<double> json_reals(const json& j, const std::string& key)
{
    if (!j.is_array()) throw ConfigError("type mismatch for key '" + key + "': expected an array of numbers");
    std::vector<double> v;
    for (const auto& e : j) v.push_back(json_real(e, key));
    return v;
}

Given from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    Given g;
    for (const auto& [key, v] : j.items()) {
        if (key == "command") g.command = json_string(v, key);
        else if (key == "n") g.n = json_int(v, key);
        else if (key == "r_max") g.r_max = json_real(v, key);
        else if (key == "grid_n") g.grid_n = json_int(v, key);
        else if (key == "tol") g.tol = json_real(v, key);
        else if (key == "k_max") g.k_max = json_int(v, key);
        else if (key == "eps") g.eps = json_reals(v, key);
        else if (key == "potential") g.potential = json_string(v, key);
        else if (key == "box") g.box = json_real(v, key);
        else if (key == "out") g.out = json_string(v, key);
        else if (key == "cache") g.cache = json_string(v, key);
        else if (key == "points") {
            if (!v.is_array()) throw ConfigError("type mismatch for key 'points': expected an array of points");
            std::vector<std::vector<double>> pts;
            for (const auto& p : v) pts.push_back(json_reals(p, key));
            g.points = pts;
        } else
            throw ConfigError("unknown key '" + key + "'");
    }
    return g;
}

template <typename T>
void overlay(std::optional<T>& base, const std::optional<T>& top)
{
    if (top) base = top;
}

void check_writable(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory '" + dir + "' cannot be created");
    fs::path probe = fs::path(dir) / ".hartree-lab-probe";
    {
        std::ofstream f(probe);
        if (!f) throw ConfigError("output directory '" + dir + "' is not writable");
    }
    fs::remove(probe, ec);
}

RunConfig resolve(Given g, const Given& flags)
{
    overlay(g.command, flags.command);
    overlay(g.n, flags.n);
    overlay(g.r_max, flags.r_max);
    overlay(g.grid_n, flags.grid_n);
    overlay(g.tol, flags.tol);
    overlay(g.k_max, flags.k_max);
    overlay(g.eps, flags.eps);
    overlay(g.potential, flags.potential);
    overlay(g.box, flags.box);
    overlay(g.out, flags.out);
    overlay(g.cache, flags.cache);
    overlay(g.points, flags.points);

    RunConfig c;
    if (!g.command) throw ConfigError("missing required key: command");
    c.command = parse_command(*g.command);
    if (g.n) c.n = *g.n;
    if (c.n < 3 || c.n > 5)
        throw ConfigError("unsupported dimension " + std::to_string(c.n) + ": supported dimensions are 3, 4, 5");
    c.r_max = g.r_max ? *g.r_max : default_r_max(c.n);
    if (!(c.r_max > 0)) throw ConfigError("r_max must be positive");
    if (g.grid_n) c.grid_n = *g.grid_n;
    if (c.grid_n < 16) throw ConfigError("grid_n must be >= 16");
    if (g.tol) c.tol = *g.tol;
    if (!(c.tol > 0)) throw ConfigError("tol must be positive");
    if (g.k_max) c.k_max = *g.k_max;
    if (c.k_max < 2) throw ConfigError("k_max must be >= 2");
    c.eps = g.eps ? *g.eps : default_eps();
    if (c.eps.size() < 2) throw ConfigError("eps needs at least two values");
    for (size_t i = 0; i < c.eps.size(); ++i) {
        if (!(c.eps[i] > 0)) throw ConfigError("eps values must be positive");
        if (i > 0 && !(c.eps[i] < c.eps[i - 1])) throw ConfigError("eps values must be strictly decreasing");
    }
    if (g.potential) c.potential = *g.potential;
    try {
        make_potential(c.potential, c.n);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("bad potential: ") + e.what());
    }
    if (g.box) c.box = *g.box;
    if (!(c.box > 0)) throw ConfigError("box must be positive");
    if (g.points)
        for (const auto& p : *g.points) {
            if (int(p.size()) != c.n) throw ConfigError("points must have n coordinates");
            c.points.push_back(Eigen::Map<const Eigen::VectorXd>(p.data(), c.n));
        }
    if (g.out) c.out = *g.out;
    if (g.cache) c.cache = parse_cache_policy(*g.cache);
    if (c.command == Command::multipole_verify && c.n != 3)
        throw ConfigError("multipole_verify supports n = 3 only (the oracle is three-dimensional)");
    check_writable(c.out);
    return c;
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("config file '" + path + "' not found");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

RunConfig parse_config(const std::vector<std::string>& args)
{
    Flags f = parse_flags(args);
    Given base;
    if (f.config) base = from_json(read_file(*f.config));
    return resolve(base, f.given);
}

RunConfig parse_config_json(const std::string& json_text, const std::vector<std::string>& flags)
{
    Flags f = parse_flags(flags);
    if (f.config) throw ConfigError("--config cannot be combined with inline JSON");
    return resolve(from_json(json_text), f.given);
}

// --- pipeline --------------------------------------------------------------

namespace {

struct Check {
    std::string name;
    bool ok;
    std::string detail;
};

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

std::string sci(double x)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

std::string fixed(double x, int digits = 3)
{
    std::ostringstream os;
    os.precision(digits);
    os << std::fixed << x;
    return os.str();
}

std::string suffix(const RunConfig& cfg)
{
    return "_n" + std::to_string(cfg.n);
}

std::vector<Check> run_ground_state(const RunConfig& cfg, std::ostream& log)
{
    GroundState gs = obtain_ground_state(cfg, log);
    SolverConfig sc;
    sc.method = SolverMethod::shooting;
    sc.tol = cfg.tol;
    auto t0 = std::chrono::steady_clock::now();
    GroundState sh = solve_ground_state(gs.disc, sc);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& d = *gs.disc;
    double diff = d.weighted_norm(sh.profile.values - gs.profile.values) / d.weighted_norm(gs.profile.values);

    std::string csv = "r,U_fixed_point,U_shooting,I2_U2\n";
    for (int i = 0; i < d.size(); ++i)
        csv += format_real(d.grid->nodes(i)) + "," + format_real(gs.profile.values(i)) + "," +
               format_real(sh.profile.values(i)) + "," + format_real(gs.potential.values(i)) + "\n";
    write_file(fs::path(cfg.out) / ("ground_state" + suffix(cfg) + ".csv"), csv);

    log << "grid " << d.grid->descriptor() << "\n"
        << "U(0) ~ " << format_real(gs.profile(0.0)) << "  mass " << format_real(gs.l2_mass) << "  energy "
        << format_real(gs.energy) << "  nu " << format_real(gs.nu) << "\n"
        << "residual " << sci(gs.residual) << "  shooting vs fixed point " << sci(diff) << " (shooting "
        << fixed(secs, 1) << " s)\n";
    return {{"equation_residual", gs.residual < 1e-8, sci(gs.residual) + " < 1e-8"},
            {"cross_method_agreement", diff < 1e-6, sci(diff) + " < 1e-6"}};
}

std::vector<Check> run_spectrum(const RunConfig& cfg, std::ostream& log)
{
    GroundState gs = obtain_ground_state(cfg, log);
    auto rep = nondegeneracy_report(gs, cfg.k_max);
    write_file(fs::path(cfg.out) / ("spectrum" + suffix(cfg) + ".csv"), format_spectrum_csv(rep));
    std::string text = format_report(rep);
    write_file(fs::path(cfg.out) / ("nondegeneracy" + suffix(cfg) + ".txt"), text);
    log << text;
    std::vector<Check> checks;
    checks.push_back({"nondegenerate", rep.nondegenerate, rep.nondegenerate ? "verdict nondegenerate" : "see report"});
    for (const auto& f : rep.failures) checks.push_back({"nondegeneracy: " + f, false, ""});
    return checks;
}

std::vector<Check> run_identities(const RunConfig& cfg, std::ostream& log)
{
    GroundState gs = obtain_ground_state(cfg, log);
    auto id = check_identities(gs);
    std::string csv = "identity,relative_defect\n";
    csv += "LU+2(I2*U^2)U," + format_real(id.lu) + "\n";
    csv += "L(rU')+2U-4(I2*U^2)U," + format_real(id.l_ru) + "\n";
    csv += "L(2U+rU')+2U," + format_real(id.l_2u_ru) + "\n";
    write_file(fs::path(cfg.out) / ("identities" + suffix(cfg) + ".csv"), csv);

    auto pts = refinement_study(cfg.n, cfg.r_max, {48, 56, 64, 72}, 1e-9);
    std::string ref = "N,converged,lu,lu_transferred,l_ru,l_2u_ru,zero_mode_residual\n";
    for (const auto& p : pts)
        ref += std::to_string(p.N) + "," + (p.converged ? "1" : "0") + "," + format_real(p.defects.lu) + "," +
               format_real(p.lu_transferred) + "," + format_real(p.defects.l_ru) + "," + format_real(p.defects.l_2u_ru) + "," +
               format_real(p.zero_mode_residual) + "\n";
    write_file(fs::path(cfg.out) / ("identities_refinement" + suffix(cfg) + ".csv"), ref);

    log << "N=" << gs.disc->size() << "  LU " << sci(id.lu) << "  L(rU') " << sci(id.l_ru) << "  L(2U+rU') "
        << sci(id.l_2u_ru) << "  wrong-sign residual " << sci(id.wrong_sign) << "\n";
    std::vector<Check> checks = {{"defect_LU", id.lu < 1e-4, sci(id.lu) + " < 1e-4"},
                                 {"defect_L_rU", id.l_ru < 1e-4, sci(id.l_ru) + " < 1e-4"},
                                 {"defect_L_2U_rU", id.l_2u_ru < 1e-4, sci(id.l_2u_ru) + " < 1e-4"}};
    auto pair = first_converged_pair(pts);
    if (!pair) {
        checks.push_back({"refinement_order", false, "no two consecutive grids converged"});
        return checks;
    }
    const auto& a = pts[pair->first];
    const auto& b = pts[pair->second];
    auto order = [&](const char* name, double ea, double eb) {
        double p = observed_order(ea, a.N, eb, b.N);
        log << "order " << name << " N=" << a.N << "->" << b.N << ": " << fixed(p, 2) << "\n";
        checks.push_back({std::string("order_") + name, p >= 1.8, fixed(p, 2) + " >= 1.8"});
    };
    order("LU", a.lu_transferred, b.lu_transferred);
    order("L_rU", a.defects.l_ru, b.defects.l_ru);
    order("L_2U_rU", a.defects.l_2u_ru, b.defects.l_2u_ru);
    order("zero_mode", a.zero_mode_residual, b.zero_mode_residual);
    return checks;
}

std::vector<Check> run_multipole(const RunConfig& cfg, std::ostream& log)
{
    auto st = multipole_study(cfg.k_max);
    std::string csv = "point,x1,x2,x3,ratio,K,value,oracle,rel_error\n";
    for (const auto& r : st.rows)
        csv += std::to_string(r.point) + "," + format_real(r.x(0)) + "," + format_real(r.x(1)) + "," +
               format_real(r.x(2)) + "," + format_real(r.ratio) + "," + std::to_string(r.K) + "," +
               format_real(r.value) + "," + format_real(r.oracle) + "," + format_real(r.rel_error) + "\n";
    write_file(fs::path(cfg.out) / ("multipole" + suffix(cfg) + ".csv"), csv);
    bool monotone = true;
    for (size_t K = 0; K < st.max_error.size(); ++K) {
        log << "K=" << K << "  max relative error " << sci(st.max_error[K]) << "\n";
        if (K > 0 && st.max_error[K] > st.max_error[K - 1]) monotone = false;
    }
    double last = st.max_error.back();
    return {{"multipole_error", last < 1e-4, sci(last) + " < 1e-4 at K_max " + std::to_string(cfg.k_max)},
            {"multipole_monotone", monotone, "max error non-increasing in K"}};
}

std::vector<Check> run_semiclassical(const RunConfig& cfg, std::ostream& log)
{
    GroundState gs = obtain_ground_state(cfg, log);
    const int n = cfg.n;
    Potential V = make_potential(cfg.potential, n);
    Box box = Box::cube(n, cfg.box);
    std::vector<Check> checks;
    auto pc = check_potential(V, box);
    checks.push_back({"potential_condition", pc.ok, "min 1+V " + sci(pc.min_one_plus_v)});
    if (!pc.ok) return checks;

    auto conc = predict_concentration(gs, V, box, cfg.eps.back());
    std::string ccsv = "index,";
    for (int i = 1; i <= n; ++i) ccsv += "x" + std::to_string(i) + ",";
    ccsv += "V,h,gradient_norm,kind,gradient_proxy\n";
    for (size_t i = 0; i < conc.points.size(); ++i) {
        const auto& c = conc.points[i];
        ccsv += std::to_string(i) + ",";
        for (int j = 0; j < n; ++j) ccsv += format_real(c.x(j)) + ",";
        ccsv += format_real(c.value) + "," + format_real(c.h) + "," + format_real(c.gradient_norm) + "," +
                to_string(c.kind) + "," + format_real(c.gradient_proxy) + "\n";
    }
    write_file(fs::path(cfg.out) / ("concentration" + suffix(cfg) + ".csv"), ccsv);

    // sweep points: nondegenerate critical points, then the configured ones
    struct Target {
        Eigen::VectorXd x;
        bool critical;
        bool minimum;
    };
    std::vector<Target> targets;
    for (const auto& c : conc.points)
        if (c.kind != CriticalKind::degenerate) targets.push_back({c.x, true, c.kind == CriticalKind::minimum});
    for (const auto& p : cfg.points) targets.push_back({p, V.gradient(p).norm() < 1e-6, false});
    std::vector<Eigen::VectorXd> xs;
    for (const auto& t : targets) xs.push_back(t.x);

    std::ostringstream rep;
    rep << "potential " << cfg.potential << "  n=" << n << "  box half width " << format_real(cfg.box) << "\n";
    for (const auto& note : conc.notes) rep << "note: " << note << "\n";
    SemiclassicalReport sw;
    if (!xs.empty()) {
        sw = semiclassical_sweep(gs, V, xs, cfg.eps);
    } else {
        sw.C0 = constant_C0(gs);
        sw.C1 = constant_C1(gs);
    }
    rep << "C0 " << format_real(sw.C0) << "  C1 " << format_real(sw.C1) << "\n";
    for (size_t i = 0; i < conc.points.size(); ++i) {
        const auto& c = conc.points[i];
        rep << "critical point " << i << " [" << c.x.transpose().format(Eigen::IOFormat(8, Eigen::DontAlignCols, ", ")) << "] "
            << to_string(c.kind) << "  V " << format_real(c.value) << "  h " << format_real(c.h) << "\n";
    }

    std::string csv = "point,eps";
    for (int i = 1; i <= n; ++i) csv += ",x" + std::to_string(i);
    csv += ",energy,leading,gradient_proxy,gamma,energy_error\n";
    const size_t m = cfg.eps.size();
    for (size_t r = 0; r < sw.rows.size(); ++r) {
        const auto& row = sw.rows[r];
        csv += std::to_string(r / m) + "," + format_real(row.eps);
        for (int j = 0; j < n; ++j) csv += "," + format_real(row.point(j));
        csv += "," + format_real(row.energy) + "," + format_real(row.leading) + "," + format_real(row.gradient_proxy) +
               "," + format_real(row.gamma) + "," + format_real(row.energy_error) + "\n";
    }
    write_file(fs::path(cfg.out) / ("semiclassical" + suffix(cfg) + ".csv"), csv);

    const bool constant = cfg.potential.rfind("constant", 0) == 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        const auto& f = sw.fits[i];
        std::string tag = "point " + std::to_string(i);
        rep << tag << (t.critical ? " critical" : " regular") << "  proxy slope " << fixed(f.gradient_proxy.slope)
            << " (resid " << sci(f.gradient_proxy.residual) << ")  gamma slope " << fixed(f.gamma.slope)
            << "  energy-error slope " << fixed(f.energy_error.slope) << "\n";
        if (constant) continue;
        double p = f.gradient_proxy.slope;
        if (t.critical)
            checks.push_back({"proxy_slope " + tag, p >= 1.9 && p <= 2.1, fixed(p) + " in [1.9, 2.1]"});
        else
            checks.push_back({"proxy_slope " + tag, p >= 0.9 && p <= 1.1, fixed(p) + " in [0.9, 1.1]"});
        if (t.minimum) {
            double g = f.gamma.slope;
            checks.push_back({"gamma_slope " + tag, g >= 1.9 && g <= 2.1, fixed(g) + " in [1.9, 2.1]"});
        }
    }
    if (constant) {
        double mu = V(Eigen::VectorXd::Zero(n)), worst = 0;
        for (double e : cfg.eps) {
            Eigen::VectorXd xi = Eigen::VectorXd::Constant(n, 0.5) / e;
            worst = std::max(worst, std::abs(soliton_energy(gs, V, e, xi) / leading_term(gs, mu) - 1));
        }
        rep << "constant potential: max relative deviation from C1 (1+mu)^(3-n/2) " << sci(worst) << "\n";
        checks.push_back({"constant_exactness", worst < 1e-6, sci(worst) + " < 1e-6"});
    }
    write_file(fs::path(cfg.out) / ("semiclassical" + suffix(cfg) + ".txt"), rep.str());
    log << rep.str();
    return checks;
}

} // namespace

std::string cache_path(const RunConfig& cfg)
{
    return (fs::path(cfg.out) / ("ground_state" + suffix(cfg) + ".txt")).string();
}

GroundState obtain_ground_state(const RunConfig& cfg, std::ostream& log)
{
    auto disc = Discretization::make(build_operator_grid(cfg.n, cfg.r_max, cfg.grid_n));
    const std::string path = cache_path(cfg);
    if (cfg.cache == CachePolicy::use && fs::exists(path)) {
        std::ifstream f(path);
        std::ostringstream ss;
        ss << f.rdbuf();
        try {
            auto c = parse_cache(ss.str());
            if (c.grid == disc->grid->descriptor() && c.method == SolverMethod::fixed_point && c.tol == cfg.tol) {
                log << "reusing cached ground state " << path << "\n";
                return restore_ground_state(c, disc);
            }
            log << "notice: cache header (" << c.grid << ", " << to_string(c.method) << ", tol " << c.tol
                << ") does not match the configuration; refreshing\n";
        } catch (const std::invalid_argument& e) {
            log << "notice: unreadable cache (" << e.what() << "); refreshing\n";
        }
    }
    SolverConfig sc;
    sc.tol = cfg.tol;
    GroundState gs = solve_ground_state(disc, sc);
    log << "solved ground state in " << gs.iterations << " iterations, residual " << sci(gs.residual) << "\n";
    if (cfg.cache != CachePolicy::ignore) write_file(path, format_cache(gs));
    return gs;
}

MultipoleStudy multipole_study(int K_max)
{
    if (K_max < 0) throw std::invalid_argument("multipole_study: K_max must be >= 0");
    const Eigen::Vector3d c(0.3, 0.15, 0.2);
    const double sigma = 0.3;
    MultipoleStudy st;
    st.support_radius = c.norm() + 4 * sigma;
    const double R = st.support_radius;
    auto density = [c, sigma, R](const Eigen::Vector3d& y) {
        if (y.norm() > R) return 0.0;
        return (1 + 0.5 * y.x() * y.y() + 0.4 * y.z()) * std::exp(-(y - c).squaredNorm() / (sigma * sigma));
    };
    auto grid = build_grid(3, R, 96);
    auto coeffs = project_sectors_3d(grid, density, K_max, 48);
    auto samples = BoxSamples::sample(density, Eigen::Vector3d::Zero(), 3.6, 63);
    const std::vector<Eigen::Vector3d> points = {{3.2, 0, 0},     {0, 3.3, 0.3},   {-2.0, 2.0, 1.8},
                                                 {1.5, -1.5, -2.5}, {0.5, 0.5, -3.4}, {-3.5, 0, 0}};
    st.max_error.assign(K_max + 1, 0.0);
    for (size_t p = 0; p < points.size(); ++p) {
        const auto& x = points[p];
        double oracle = direct_newton_potential_nd(3, samples, x);
        for (int K = 0; K <= K_max; ++K) {
            std::vector<SectorCoefficient> part;
            for (const auto& q : coeffs)
                if (q.k <= K) part.push_back(q);
            MultipoleRow row;
            row.point = int(p);
            row.x = x;
            row.ratio = R / x.norm();
            row.K = K;
            row.value = evaluate_multipole_3d(part, x);
            row.oracle = oracle;
            row.rel_error = std::abs(row.value - oracle) / std::abs(oracle);
            st.max_error[K] = std::max(st.max_error[K], row.rel_error);
            st.rows.push_back(row);
        }
    }
    return st;
}

int run(const RunConfig& cfg, std::ostream& log)
{
    std::vector<Check> checks;
    try {
        log << "hartree-lab " << to_string(cfg.command) << "  n=" << cfg.n << "  r_max=" << cfg.r_max << "  N=" << cfg.grid_n
            << "  tol=" << cfg.tol << "\n";
        switch (cfg.command) {
        case Command::ground_state: checks = run_ground_state(cfg, log); break;
        case Command::spectrum: checks = run_spectrum(cfg, log); break;
        case Command::identities: checks = run_identities(cfg, log); break;
        case Command::multipole_verify: checks = run_multipole(cfg, log); break;
        case Command::semiclassical: checks = run_semiclassical(cfg, log); break;
        }
    } catch (const SolverError& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
    bool ok = true;
    for (const auto& c : checks) {
        log << "check " << c.name << ": " << (c.ok ? "pass" : "FAIL") << (c.detail.empty() ? "" : "  (" + c.detail + ")")
            << "\n";
        ok = ok && c.ok;
    }
    if (!ok) {
        for (const auto& c : checks)
            if (!c.ok) log << "failed check: " << c.name << "\n";
        return 2;
    }
    return 0;
}

} // namespace hartree
