#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rml {

struct PropertyResult {
    std::string name;
    std::size_t instances = 0;
    // Largest violation seen, floored at 0.
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool passed() const { return max_violation <= tolerance; }
};

// Random instances at 2 <= n <= n_max: block singular values, eigenvector
// minor bound, block component norms, Cauchy interlacing, and the lattice
// distance identities.
std::vector<PropertyResult> linear_algebra_suite(std::size_t instances, int n_max, std::uint64_t seed,
                                                 double tolerance = 1e-9);

// Characteristic-function sandwich and dominance for rademacher, gaussian
// and uniform_pm_k bases (nu = 1/4) on a grid of `points` values of t.
std::vector<PropertyResult> char_fn_suite(std::size_t points, double slack = 1e-9);

nlohmann::json to_json(const PropertyResult& r);

}  // namespace rml
