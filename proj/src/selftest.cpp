#include "rml/selftest.hpp"

#include <algorithm>
#include <cmath>

#include "rml/arithmetic.hpp"
#include "rml/spectral.hpp"

namespace rml {

namespace {

RMat gaussian_matrix(int r, int c, Stream& s)
{
    RMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = s.normal();
    return m;
}

}  // namespace

std::vector<PropertyResult> linear_algebra_suite(std::size_t instances, int n_max, std::uint64_t seed,
                                                 double tolerance)
{
    PropertyResult blocks{"block_singular_values", 0, 0.0, tolerance};
    PropertyResult minor{"eigenvector_minor_bound", 0, 0.0, tolerance};
    PropertyResult comps{"block_component_norms", 0, 0.0, tolerance};
    PropertyResult inter{"cauchy_interlacing", 0, 0.0, tolerance};
    PropertyResult lattice{"lattice_identities", 0, 0.0, tolerance};
    const Stream base(seed, tag_of("selftest/linear_algebra"), 0);
    for (std::size_t i = 0; i < instances; ++i) {
        Stream s = base.split(i);
        const int n = 2 + int(s.below(std::uint64_t(n_max - 1)));
        const RMat A = gaussian_matrix(n, n, s);
        blocks.max_violation = std::max(blocks.max_violation, block_singular_value_check(A));

        const RMat G = gaussian_matrix(n, n, s);
        const RMat M = (G + G.transpose()) / std::sqrt(2.0);
        const int j = int(s.below(std::uint64_t(n)));
        minor.max_violation = std::max(minor.max_violation, eigvec_minor_bound_check(M, j));
        inter.max_violation = std::max(inter.max_violation, interlacing_check(M, j));

        const int p = 1 + int(s.below(std::uint64_t(n_max)));
        const int q = 1 + int(s.below(std::uint64_t(n_max)));
        comps.max_violation = std::max(comps.max_violation, block_component_norm_check(gaussian_matrix(p, q, s)));

        // dist(w + z) = dist(w) for integer z, dist(-w) = dist(w), and each
        // coordinate contributes at most 1/2.
        RVec w(n), z(n);
        for (int k = 0; k < n; ++k) {
            w(k) = 8.0 * s.normal();
            z(k) = double(std::int64_t(s.below(41)) - 20);
        }
        const double d = dist_to_int_lattice(w);
        double v = std::abs(dist_to_int_lattice(w + z) - d);
        v = std::max(v, std::abs(dist_to_int_lattice(-w) - d));
        v = std::max(v, d - 0.5 * std::sqrt(double(n)));
        lattice.max_violation = std::max(lattice.max_violation, v);
        blocks.instances = minor.instances = comps.instances = inter.instances = lattice.instances = i + 1;
    }
    return {blocks, minor, comps, inter, lattice};
}

std::vector<PropertyResult> char_fn_suite(std::size_t points, double slack)
{
    std::vector<double> grid(points);
    // t in [-8, 8]; the sandwich is symmetric in t but both signs are checked.
    for (std::size_t i = 0; i < points; ++i) grid[i] = -8.0 + 16.0 * double(i) / double(points - 1);
    std::vector<PropertyResult> out;
    for (const auto& base : {EntryLaw::rademacher(), EntryLaw::gaussian(), EntryLaw::uniform_pm_k(3)}) {
        const LazyLaw law(base, 1.0, 0.25);
        const auto r = char_fn_sandwich_check(law, grid, slack);
        out.push_back({"char_fn_sandwich/" + base.name(), r.points, r.max_violation, slack});
    }
    return out;
}

nlohmann::json to_json(const PropertyResult& r)
{
    return {{"name", r.name},
            {"instances", r.instances},
            {"max_violation", r.max_violation},
            {"tolerance", r.tolerance},
            {"passed", r.passed()}};
}

}  // namespace rml
