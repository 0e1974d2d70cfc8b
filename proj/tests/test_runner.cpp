#include "doctest.h"

#include "hartree/runner.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hartree;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("hartree_lab_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string message_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("parse_config fills defaults")
{
    TempDir tmp;
    auto c = parse_config({"--cmd", "ground_state", "--n", "3", "--out", tmp.str()});
    CHECK(c.command == Command::ground_state);
    CHECK(c.r_max == 30.0);
    CHECK(c.grid_n == 400);
    CHECK(c.tol == 1e-10);
    CHECK(c.k_max == 8);
    CHECK(c.cache == CachePolicy::use);
    CHECK(c.eps == std::vector<double>{0.2, 0.1, 0.05, 0.025});
    CHECK(parse_config({"spectrum", "--n", "5", "--out", tmp.str()}).r_max == 20.0);
    auto e = parse_config({"semiclassical", "--eps", "0.4,0.2,0.1", "--potential", "expr:x1^2 + x2^2",
                           "--out", tmp.str()});
    CHECK(e.eps == std::vector<double>{0.4, 0.2, 0.1});
    CHECK(e.potential == "expr:x1^2 + x2^2");
}

TEST_CASE("parse_config rejects bad input")
{
    TempDir tmp;
    const std::string o = tmp.str();
    CHECK(message_of([&] { parse_config({"--cmd", "ground_state", "--n", "6", "--out", o}); }).find("3, 4, 5") !=
          std::string::npos);
    CHECK(message_of([&] { parse_config({"--n", "3", "--out", o}); }).find("command") != std::string::npos);
    CHECK(message_of([&] { parse_config({"spectrum", "--cache", "use", "--cache", "refresh", "--out", o}); })
              .find("contradictory cache policy") != std::string::npos);
    CHECK_THROWS_AS(parse_config({"spectrum", "--cmd", "identities", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"bogus", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"spectrum", "--cache", "sometimes", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"spectrum", "--n", "three", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"spectrum", "--frobnicate", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"semiclassical", "--eps", "0.1,0.2", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"semiclassical", "--potential", "expr:x1 +", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"multipole_verify", "--n", "4", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"spectrum", "--grid-n", "8", "--out", o}), ConfigError);
    CHECK_THROWS_AS(parse_config({"spectrum", "--config", o + "/missing.json"}), ConfigError);
}

TEST_CASE("config file values are overridden by flags")
{
    TempDir tmp;
    const std::string o = tmp.str();
    std::string text = R"({"command": "spectrum", "n": 4, "k_max": 5, "tol": 1e-9, "out": ")" + o + R"("})";
    auto c = parse_config_json(text, {"--n", "3"});
    CHECK(c.command == Command::spectrum);
    CHECK(c.n == 3);
    CHECK(c.r_max == 30.0);
    CHECK(c.k_max == 5);
    CHECK(c.tol == 1e-9);

    std::ofstream(tmp.path / "cfg.json") << text;
    auto d = parse_config({"--config", (tmp.path / "cfg.json").string(), "--k-max", "6"});
    CHECK(d.n == 4);
    CHECK(d.k_max == 6);

    CHECK(message_of([&] { parse_config_json(R"({"command": "spectrum", "colour": 1})"); }).find("unknown key") !=
          std::string::npos);
    CHECK(message_of([&] { parse_config_json(R"({"command": "spectrum", "n": 3.5})"); }).find("type mismatch") !=
          std::string::npos);
    CHECK_THROWS_AS(parse_config_json(R"({"command": "spectrum", "eps": "0.1"})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"command": "semiclassical", "points": [[1, 2]]})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_config_json("{"), ConfigError);
    auto p = parse_config_json(R"({"command": "semiclassical", "points": [[1, 2, 3]], "box": 1.5, "out": ")" + o +
                               R"("})");
    REQUIRE(p.points.size() == 1);
    CHECK(p.points[0](2) == 3);
    CHECK(p.box == 1.5);
}

TEST_CASE("run: cache reuse, refresh and deterministic outputs")
{
    TempDir tmp;
    const std::string o = tmp.str();
    std::ostringstream log1;
    CHECK(run(parse_config({"ground_state", "--n", "3", "--out", o}), log1) == 0);
    CHECK(log1.str().find("check cross_method_agreement: pass") != std::string::npos);
    std::string cache = slurp(tmp.path / "ground_state_n3.txt");
    CHECK(cache.rfind("n=3 r_max=30 N=400 scheme=gauss_radial\nmethod=fixed_point tol=1e-10 residual=", 0) == 0);

    std::ostringstream log2;
    CHECK(run(parse_config({"spectrum", "--n", "3", "--k-max", "4", "--out", o}), log2) == 0);
    CHECK(log2.str().find("reusing cached ground state") != std::string::npos);
    std::string csv = slurp(tmp.path / "spectrum_n3.csv");
    CHECK(csv.rfind("k,lambda0,lambda1,zero_mode_residual,W_k\n", 0) == 0);
    CHECK(fs::exists(tmp.path / "nondegeneracy_n3.txt"));

    std::ostringstream log3;
    CHECK(run(parse_config({"spectrum", "--n", "3", "--k-max", "4", "--out", o}), log3) == 0);
    CHECK(slurp(tmp.path / "spectrum_n3.csv") == csv);
    CHECK(slurp(tmp.path / "ground_state_n3.txt") == cache);

    // a mismatching header is never reused
    std::ostringstream log4;
    CHECK(run(parse_config({"identities", "--n", "3", "--tol", "1e-9", "--out", o}), log4) == 0);
    CHECK(log4.str().find("notice: cache header") != std::string::npos);
    CHECK(log4.str().find("reusing") == std::string::npos);
    CHECK(slurp(tmp.path / "identities_n3.csv").rfind("identity,relative_defect\n", 0) == 0);

    std::ofstream(tmp.path / "ground_state_n3.txt") << "garbage\n";
    std::ostringstream log5;
    CHECK(run(parse_config({"ground_state", "--n", "3", "--out", o}), log5) == 0);
    CHECK(log5.str().find("notice: unreadable cache") != std::string::npos);
    CHECK(slurp(tmp.path / "ground_state_n3.txt") == cache);

    // ignore neither reads nor writes
    fs::remove(tmp.path / "ground_state_n3.txt");
    std::ostringstream log6;
    CHECK(run(parse_config({"ground_state", "--n", "3", "--cache", "ignore", "--out", o}), log6) == 0);
    CHECK(!fs::exists(tmp.path / "ground_state_n3.txt"));
}

TEST_CASE("run: exit codes")
{
    TempDir tmp;
    const std::string o = tmp.str();
    std::ostringstream log;
    CHECK(run(parse_config({"ground_state", "--n", "3", "--grid-n", "20", "--out", o}), log) == 1);
    CHECK(log.str().find("error:") != std::string::npos);

    // a regular point too close to the critical set for the eps range: the check fails and is named
    std::string text = R"({"command": "semiclassical", "points": [[0.5, 0.3, 0]], "out": ")" + o + R"("})";
    std::ostringstream log2;
    CHECK(run(parse_config_json(text), log2) == 2);
    CHECK(log2.str().find("failed check: proxy_slope point 3") != std::string::npos);
    CHECK(fs::exists(tmp.path / "semiclassical_n3.csv"));
    CHECK(fs::exists(tmp.path / "concentration_n3.csv"));

    std::ostringstream log3;
    CHECK(run(parse_config({"semiclassical", "--potential", "constant:0.3", "--out", o}), log3) == 0);
    CHECK(log3.str().find("check constant_exactness: pass") != std::string::npos);
}

TEST_CASE("multipole study")
{
    auto st = multipole_study(8);
    REQUIRE(st.max_error.size() == 9);
    for (const auto& r : st.rows) CHECK(r.ratio <= 0.5);
    CHECK(st.max_error[8] < 1e-4);
    for (int K = 1; K <= 8; ++K) CHECK(st.max_error[K] <= st.max_error[K - 1]);
}
