#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "rml/anticoncentration.hpp"
#include "rml/distributions.hpp"

using namespace rml;
using doctest::Approx;

namespace {

void check_moments(const EntryLaw& law, int N, std::uint64_t seed)
{
    Stream s(seed, tag_of(law.name()), 0);
    double m = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < N; ++i) {
        const double x = law.sample_real(s);
        m += x;
        m2 += x * x;
        m4 += x * x * x * x;
    }
    m /= N;
    m2 /= N;
    m4 /= N;
    // 5 sigma on the mean (variance 1) and on the second moment (variance m4 - 1).
    CHECK(std::abs(m) < 5.0 / std::sqrt(double(N)));
    CHECK(std::abs(m2 - 1.0) < 5.0 * std::sqrt((m4 - 1.0) / N) + 1e-12);
}

}  // namespace

TEST_CASE("entry laws have mean 0 and variance 1")
{
    for (const auto& law : {EntryLaw::rademacher(), EntryLaw::gaussian(), EntryLaw::uniform_pm_k(1),
                            EntryLaw::uniform_pm_k(4), EntryLaw::custom({{-2.0, 0.2}, {0.5, 0.8}})})
        check_moments(law, 1000000, 5);
}

TEST_CASE("exact atom moments")
{
    for (int k : {1, 2, 5}) {
        double m = 0, v = 0, p = 0;
        const auto law = EntryLaw::uniform_pm_k(k);
        for (const auto& a : law.atoms()) {
            m += a.value * a.prob;
            v += a.value * a.value * a.prob;
            p += a.prob;
        }
        CHECK(m == Approx(0.0).epsilon(1e-14));
        CHECK(v == Approx(1.0).epsilon(1e-14));
        CHECK(p == Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("custom laws are validated")
{
    CHECK_THROWS_AS(EntryLaw::custom({{-1.0, 0.5}, {2.0, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(EntryLaw::custom({{-1.0, 0.5}, {1.0, 0.4}}), std::invalid_argument);
    CHECK_THROWS_AS(EntryLaw::custom({{-2.0, 0.5}, {2.0, 0.5}}), std::invalid_argument);
    CHECK_NOTHROW(EntryLaw::custom({{-1.0, 0.5}, {1.0, 0.5 + 5e-13}}));
}

TEST_CASE("rademacher chi-square")
{
    Stream s(1, tag_of("chi"), 0);
    int plus = 0, minus = 0;
    const int N = 100000;
    for (int i = 0; i < N; ++i) {
        const double x = EntryLaw::rademacher().sample_real(s);
        REQUIRE((x == 1.0 || x == -1.0));
        (x > 0 ? plus : minus)++;
    }
    const double chi2 = std::pow(plus - N / 2.0, 2) / (N / 2.0) + std::pow(minus - N / 2.0, 2) / (N / 2.0);
    CHECK(chi2 < boost::math::quantile(boost::math::chi_squared(1), 0.999));
}

TEST_CASE("lazy rademacher atoms")
{
    const LazyLaw half(EntryLaw::rademacher(), 1.0, 0.5);
    CHECK(half.p() == Approx(0.5));
    CHECK(half.interval_low() == 1.0);
    CHECK(half.interval_high() == 16.0);
    std::map<double, double> atoms;
    for (const auto& a : half.atoms()) atoms[a.value] += a.prob;
    REQUIRE(atoms.size() == 3);
    CHECK(atoms[-2.0] == Approx(0.125));
    CHECK(atoms[0.0] == Approx(0.75));
    CHECK(atoms[2.0] == Approx(0.125));

    const LazyLaw tiny(EntryLaw::rademacher(), 1.0, std::ldexp(1.0, -15));
    double nonzero = 0;
    for (const auto& a : tiny.atoms())
        if (a.value != 0.0) nonzero += a.prob;
    CHECK(nonzero == Approx(std::ldexp(1.0, -16)).epsilon(1e-14));
}

TEST_CASE("lazy atom frequencies match enumeration")
{
    const LazyLaw law(EntryLaw::uniform_pm_k(2), 1.0, 0.3);
    const auto atoms = law.atoms();
    Stream s(9, tag_of("lazy"), 0);
    const std::size_t N = 200000;
    std::map<double, std::size_t> hits;
    for (std::size_t i = 0; i < N; ++i) ++hits[law.sample_real(s)];
    for (const auto& a : atoms) {
        const auto e = monte_carlo_estimate(hits[a.value], N, 0.0, 0.99);
        CHECK(a.prob >= e.ci_low);
        CHECK(a.prob <= e.ci_high);
    }
    std::size_t total = 0;
    for (const auto& a : atoms) total += hits[a.value];
    CHECK(total == N);
}

TEST_CASE("retention floor")
{
    // p >= 2^-7 B^-4 for every discrete base at B = 1.
    for (const auto& b : {EntryLaw::rademacher(), EntryLaw::uniform_pm_k(3), EntryLaw::custom({{-2.0, 0.2}, {0.5, 0.8}})})
        CHECK(LazyLaw(b, 1.0, 0.25).p() >= 1.0 / 128.0);
}

TEST_CASE("characteristic function examples")
{
    const LazyLaw law(EntryLaw::rademacher(), 1.0, 0.5);
    CHECK(char_fn_exact(law, 0.0) == Approx(1.0).epsilon(1e-15));
    CHECK(char_fn_exact(law, 0.25) == Approx(0.5).epsilon(1e-15));
    CHECK(char_fn_exact(law, 0.5) == Approx(1.0).epsilon(1e-15));
    CHECK(torus_moment(law, 0.5) == Approx(0.0));
}

TEST_CASE("gaussian quadrature matches the closed form")
{
    // xi~ = N(0, 2) conditioned on 1 < |x| < 16; E cos(2 pi t x) against a
    // fine composite Simpson rule.
    const LazyLaw law(EntryLaw::gaussian(), 1.0, 0.25);
    for (double t : {0.0, 0.3, 1.7, 5.0}) {
        const int M = 400000;
        const double a = 1.0, b = 16.0, h = (b - a) / M;
        auto f = [&](double x) { return std::exp(-x * x / 4.0) * std::cos(2 * std::numbers::pi * t * x); };
        auto g = [&](double x) { return std::exp(-x * x / 4.0); };
        double num = f(a) + f(b), den = g(a) + g(b);
        for (int i = 1; i < M; ++i) {
            const double x = a + i * h;
            num += (i % 2 ? 4 : 2) * f(x);
            den += (i % 2 ? 4 : 2) * g(x);
        }
        const double oracle = num / den;
        const double got = law.cond_expect([t](double x) { return std::cos(2 * std::numbers::pi * t * x); }, t);
        CHECK(got == Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("sandwich holds on a dense grid")
{
    std::vector<double> grid(10000);
    for (int i = 0; i < 10000; ++i) grid[i] = 4.0 * i / 9999.0;
    const auto r = char_fn_sandwich_check(LazyLaw(EntryLaw::rademacher(), 1.0, 1.0 / 16), grid);
    CHECK(r.points == 10000);
    CHECK(r.violations == 0);
    CHECK(r.dominance_checked);
    const auto t0 = char_fn_sandwich_check(LazyLaw(EntryLaw::rademacher(), 1.0, 0.25), {0.0, 0.5});
    CHECK(t0.max_violation == 0.0);
}

TEST_CASE("law json round trip")
{
    for (const auto& law : {EntryLaw::rademacher(true), EntryLaw::gaussian(), EntryLaw::uniform_pm_k(3)}) {
        const auto back = entry_law_from_json(to_json(law));
        CHECK(back.name() == law.name());
        CHECK(back.complexified() == law.complexified());
    }
    const auto lazy = law_from_json(to_json(LazyLaw(EntryLaw::rademacher(), 2.0, 0.125)));
    REQUIRE(std::holds_alternative<LazyLaw>(lazy));
    CHECK(std::get<LazyLaw>(lazy).nu() == 0.125);
    CHECK(std::get<LazyLaw>(lazy).B() == 2.0);
    CHECK_THROWS(entry_law_from_name("cauchy"));
}
