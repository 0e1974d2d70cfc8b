#include "fixtures.hpp"

#include <map>
#include <mutex>
#include <tuple>

namespace testing {

const hartree::GroundState& solved(int n, hartree::SolverMethod method, int N)
{
    using namespace hartree;
    static std::map<std::tuple<int, int, int>, GroundState> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto key = std::make_tuple(n, int(method), N);
    auto it = cache.find(key);
    if (it == cache.end()) {
        SolverConfig cfg;
        cfg.method = method;
        if (N > 400) cfg.tol = 1e-8;
        it = cache.emplace(key, solve_ground_state(build_operator_grid(n, default_r_max(n), N), cfg)).first;
    }
    return it->second;
}

} // namespace testing
