#pragma once

#include "hartree/ground_state.hpp"

#include <Eigen/Dense>

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hartree {

enum class Command { ground_state, spectrum, multipole_verify, identities, semiclassical };
enum class CachePolicy { use, refresh, ignore };

std::string to_string(Command c);
Command parse_command(const std::string& name);
std::string to_string(CachePolicy c);
CachePolicy parse_cache_policy(const std::string& name);

struct RunConfig {
    Command command = Command::ground_state;
    int n = 3;
    double r_max = 30.0;
    int grid_n = 400;
    double tol = 1e-10;
    int k_max = 8;
    std::vector<double> eps;
    std::string potential = "double_well";
    // half width of the search box for concentration points
    double box = 2.0;
    // extra physical points for the eps sweep
    std::vector<Eigen::VectorXd> points;
    std::string out = ".";
    CachePolicy cache = CachePolicy::use;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Command-line arguments without the program name. A JSON file given by
// --config supplies values that flags then override.
RunConfig parse_config(const std::vector<std::string>& args);
// the same from a JSON object text plus flags
RunConfig parse_config_json(const std::string& json_text, const std::vector<std::string>& flags = {});

std::string usage();

// 0 when every declared check passes, 2 when one fails (named in the log),
// 1 on operational errors.
int run(const RunConfig& cfg, std::ostream& log);

// --- pieces shared with the acceptance driver --------------------------------

std::string cache_path(const RunConfig& cfg);
// Loads or solves according to the cache policy; logs reuse and refresh notices.
GroundState obtain_ground_state(const RunConfig& cfg, std::ostream& log);

struct MultipoleRow {
    int point = 0;
    Eigen::Vector3d x;
    double ratio = 0; // r_< / r_> with r_< the support radius
    int K = 0;
    double value = 0;
    double oracle = 0;
    double rel_error = 0;
};

struct MultipoleStudy {
    double support_radius = 0;
    std::vector<MultipoleRow> rows;
    std::vector<double> max_error; // over points, per K = 0..K_max
};

// Off-centre Gaussian density with a non-radial polynomial factor, cut at
// its support radius, against the brute-force oracle at points with
// r_< / r_> <= 0.5.
MultipoleStudy multipole_study(int K_max);

} // namespace hartree
