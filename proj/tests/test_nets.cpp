#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "rml/nets.hpp"

using namespace rml;
using doctest::Approx;

namespace {

bool member(const IntSet& s, std::int64_t x)
{
    return std::any_of(s.begin(), s.end(), [&](const IntRange& r) { return r.lo <= x && x <= r.hi; });
}

// Points of the product box by odometer over a bounding window.
std::uint64_t enumerate_box(const BoxSpec& b, std::int64_t window)
{
    const auto ss = b.sets();
    std::uint64_t count = 0;
    std::vector<std::int64_t> x(ss.size(), -window);
    while (true) {
        bool in = true;
        for (std::size_t i = 0; i < ss.size() && in; ++i) in = member(ss[i], x[i]);
        count += in;
        std::size_t k = 0;
        while (k < x.size() && ++x[k] > window) x[k++] = -window;
        if (k == x.size()) break;
    }
    return count;
}

// Sequences over `free` coordinates with levels in [0, 8] and sum of 4^l over l > 0 within budget.
std::uint64_t covering_oracle(int free, double budget)
{
    std::function<std::uint64_t(int, double)> go = [&](int left, double room) -> std::uint64_t {
        if (left == 0) return 1;
        std::uint64_t s = go(left - 1, room);
        for (int l = 1; l <= 8; ++l) {
            const double c = std::pow(4.0, l);
            if (c <= room) s += go(left - 1, room - c);
        }
        return s;
    };
    return go(free, budget);
}

}  // namespace

TEST_CASE("anchored sets and cardinality")
{
    const auto J = anchored_set(2, 2.0);
    CHECK(set_size(J) == 6);
    for (std::int64_t x = -6; x <= 6; ++x) CHECK(member(J, x) == (std::abs(x) >= 2 && std::abs(x) <= 4));
    const auto b = BoxSpec::anchored_box(3, 2, 2.0);
    CHECK(b.cardinality() == 216);
    CHECK(b.log_cardinality() == Approx(std::log(216.0)));
    // 6^3 is larger than (kappa boxN)^3 = 64, so the cardinality cap is not met.
    const auto gaps = b.definition_gaps();
    CHECK(std::find(gaps.begin(), gaps.end(), "|B| exceeds (kappa boxN)^dim") != gaps.end());
}

TEST_CASE("shell sets")
{
    CHECK(set_size(shell_set(3, 0)) == 7);
    const auto s2 = shell_set(3, 2);
    for (std::int64_t x = -15; x <= 15; ++x) CHECK(member(s2, x) == (std::abs(x) > 6 && std::abs(x) <= 12));
    CHECK_THROWS(shell_set(3, -1));
}

TEST_CASE("cardinality matches direct enumeration")
{
    BoxSpec b;
    b.dim = 4;
    b.boxN = 2;
    b.kappa = 3.0;
    b.anchored = {0, 2};
    b.levels = {0, 1, 0, 2};
    b.validate();
    CHECK(b.cardinality() == enumerate_box(b, 10));
    BoxSpec c = BoxSpec::anchored_box(5, 2, 2.0);
    CHECK(c.cardinality() == enumerate_box(c, 5));
    BoxSpec bad = b;
    bad.custom = {{{1, 0}}, {{0, 0}}, {{0, 0}}, {{0, 0}}};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("box samples are uniform on their coordinate sets")
{
    BoxSpec b;
    b.dim = 2;
    b.boxN = 2;
    b.kappa = 2.0;
    b.anchored = {0};
    b.validate();
    Stream s(11, tag_of("box"), 0);
    std::map<std::int64_t, std::size_t> anch, sym;
    const std::size_t T = 100000;
    for (std::size_t t = 0; t < T; ++t) {
        const auto x = sample_box(b, s).x;
        ++anch[x[0]];
        ++sym[x[1]];
    }
    CHECK(anch.size() == 6);
    CHECK(sym.size() == 5);
    auto chi2 = [&](const std::map<std::int64_t, std::size_t>& m) {
        const double e = double(T) / double(m.size());
        double c = 0;
        for (auto [k, v] : m) c += (double(v) - e) * (double(v) - e) / e;
        return c;
    };
    // 99% quantiles of chi-square with 5 and 4 degrees of freedom.
    CHECK(chi2(anch) < 15.086);
    CHECK(chi2(sym) < 13.277);
    for (auto [k, v] : anch) {
        const auto ci = clopper_pearson(v, T, 0.999);
        CHECK(ci.lo <= 1.0 / 6.0);
        CHECK(ci.hi >= 1.0 / 6.0);
    }
}

TEST_CASE("box json round trip")
{
    BoxSpec b;
    b.dim = 3;
    b.boxN = 4;
    b.kappa = 2.5;
    b.anchored = {1};
    b.levels = {0, 0, 3};
    const auto r = box_spec_from_json(to_json(b));
    CHECK(r.dim == 3);
    CHECK(r.boxN == 4);
    CHECK(r.kappa == 2.5);
    CHECK(r.anchored == b.anchored);
    CHECK(r.levels == b.levels);
    CHECK(r.cardinality() == b.cardinality());
}

TEST_CASE("box lcd preconditions and vacuous bound")
{
    CHECK_THROWS_AS(box_lcd_experiment(4, 1024, 2.0, std::ldexp(1.0, -24), 1024.0, 10, Stream()), PreconditionError);
    CHECK_THROWS_AS(box_lcd_experiment(4, 2, 2.0, 0.5, 4.0, 10, Stream()), PreconditionError);
    const auto r = box_lcd_experiment(8, 2, 2.0, 0.999, 2.0, 20, Stream(1, 2, 3));
    CHECK(r.bound >= 1.0);
    CHECK(r.bound_vacuous);
    CHECK(r.within_bound);
}

TEST_CASE("box lcd at small scale")
{
    const auto r = box_lcd_experiment(16, 64, 2.0, std::ldexp(1.0, -20), 64.0, 50, Stream(9, 9, 9));
    CHECK(r.bound == Approx(1.0).epsilon(1e-12));  // (2^20 alpha)^(d/4) = 1
    CHECK(r.trials == 50);
    CHECK(r.r == Approx(1.0 / (4.0 * 64.0)));
    const auto row = box_lcd_csv_row(r), head = box_lcd_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(head.begin(), head.end(), ','));
}

TEST_CASE("overlap of identical singleton boxes")
{
    BoxSpec b;
    b.dim = 4;
    b.boxN = 2;
    b.kappa = 2.0;
    b.custom = {{{1, 1}}, {{2, 2}}, {{3, 3}}, {{4, 4}}};
    const auto o = overlap_of_box_pair({b, b}, 100, Stream(1, 1, 1));
    CHECK(o.mean_abs_cos == Approx(1.0).epsilon(1e-12));
    CHECK(o.q50 == Approx(1.0).epsilon(1e-12));
    // The threshold 32 kappa^2 T^2 / D exceeds 1 here, so even cos = 1 falls below it.
    CHECK(o.threshold > 1.0);
    CHECK(o.fraction_below == 1.0);
}

TEST_CASE("overlap of symmetric boxes in dimension 64")
{
    BoxSpec b;
    b.dim = 64;
    b.boxN = 16;
    b.kappa = 2.0;
    const auto o = overlap_of_box_pair({b, b}, 20000, Stream(3, 3, 3));
    // E|cos| of two independent isotropic-ish vectors in dimension 63 is about sqrt(2 / (pi 63)).
    const double scale = std::sqrt(63.0) * o.mean_abs_cos;
    CHECK(scale > 0.6);
    CHECK(scale < 1.0);
    CHECK(o.fraction_below >= 0.70);
    CHECK(std::abs(o.mean_cos) <= 4.0 * o.mean_cos_stderr);
    CHECK(o.q50 <= o.q90);
    CHECK(o.q90 <= o.q99);
}

TEST_CASE("covering family")
{
    // Budget 16 n / kappa0^2 below 4: every level is forced to 0.
    const auto tight = enumerate_covering_family(2, 0.01, 4.0, 2.0, {1}, {});
    CHECK(tight.size == 1);
    CHECK(tight.free_coordinates == 2);
    // kappa0 = 2 at n = 2 gives budget 8: at most two coordinates at level 1.
    const auto two = enumerate_covering_family(2, 0.01, 2.0, 2.0, {}, {});
    CHECK(two.free_coordinates == 3);
    CHECK(two.size == covering_oracle(3, 8.0));
    CHECK(two.size == 7);
    for (double k0 : {0.5, 0.8, 1.0, 1.5}) {
        const auto f = enumerate_covering_family(3, 0.01, k0, 4.0, {1}, {3});
        CHECK(f.size == covering_oracle(f.free_coordinates, f.budget));
    }
    const auto b = enumerate_covering_family(3, 0.01, 1.0, 4.0, {}, {});
    CHECK(b.bound == Approx(4096.0));
    CHECK(b.size == covering_oracle(5, 48.0));
    CHECK(b.within_bound);
    CHECK_THROWS(enumerate_covering_family(7, 0.01, 1.0, 4.0, {}, {}));
    CHECK_THROWS(enumerate_covering_family(3, 0.01, 1.0, 4.0, {3}, {}));
}
