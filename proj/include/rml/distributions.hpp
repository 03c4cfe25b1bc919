#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rml/rng.hpp"

namespace rml {

enum class LawKind { rademacher, gaussian, uniform_pm_k, custom_discrete };

struct Atom {
    double value;
    double prob;
};

// Mean-zero, unit-variance scalar law.  Built-in kinds default to the
// subgaussian constant B = 1.
class EntryLaw {
public:
    static EntryLaw rademacher(bool complexified = false);
    static EntryLaw gaussian(bool complexified = false);
    // Uniform on {-k..-1, 1..k} rescaled to unit variance.
    static EntryLaw uniform_pm_k(int k, bool complexified = false);
    static EntryLaw custom(std::vector<Atom> atoms, bool complexified = false);
    // Test hook: skips the mean/variance validation so that a matrix can be
    // forced to a fixed pattern (for example every entry equal to 1).
    static EntryLaw unchecked(std::vector<Atom> atoms, bool complexified = false);

    LawKind kind() const { return kind_; }
    bool complexified() const { return complexified_; }
    int k() const { return k_; }
    bool discrete() const { return kind_ != LawKind::gaussian; }
    // Atoms of the real part; empty for gaussian.
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::string name() const;

    double sample_real(Stream& s) const;
    std::complex<double> sample_complex(Stream& s) const;

    // E exp(2 pi i t xi) for the real law.
    std::complex<double> char_fn(double t) const;

private:
    LawKind kind_ = LawKind::rademacher;
    bool complexified_ = false;
    int k_ = 1;
    std::vector<Atom> atoms_;
    std::vector<double> cdf_;
};

// xi_nu = 1{|xi - xi'| in I_B} (xi - xi') Z_nu with Z_nu ~ Bernoulli(nu).
// With truncated = false the indicator is dropped (the law of xi~ Z_nu).
class LazyLaw {
public:
    LazyLaw(EntryLaw base, double B, double nu, bool truncated = true);

    const EntryLaw& base() const { return base_; }
    double B() const { return B_; }
    double nu() const { return nu_; }
    bool truncated() const { return truncated_; }
    double interval_low() const { return 1.0; }
    double interval_high() const { return 16.0 * B_ * B_; }
    // P(|xi~| in I_B); exact for discrete bases.
    double p() const { return p_; }
    // Atoms of xi~ conditioned on |xi~| in I_B (discrete bases only).
    const std::vector<Atom>& retained_atoms() const { return retained_; }
    // Full atom list of xi_nu (discrete bases only), zero included.
    std::vector<Atom> atoms() const;

    double sample_real(Stream& s) const;
    std::complex<double> sample_complex(Stream& s) const;

    // E[g(|xi~|) | |xi~| in I_B].  Discrete bases are exact.  The gaussian
    // base uses 64-point Gauss-Legendre on panels of width <= 1/freq whose
    // ends sit on the points (k + 1/2)/freq, so integrands such as
    // cos(2 pi freq x) and ||freq x||_T^2 are smooth on every panel.  The
    // density is cut at x = 30 (tail mass below 1e-90).  With that layout
    // the quadrature error is below 1e-13 for |freq| <= 64.
    double cond_expect(const std::function<double(double)>& g, double freq = 0.0) const;

private:
    EntryLaw base_;
    double B_;
    double nu_;
    bool truncated_;
    double p_ = 0.0;
    std::vector<Atom> retained_;
};

using AnyLaw = std::variant<EntryLaw, LazyLaw>;

// Distance from x to the nearest integer.
double torus_dist(double x);

// 1 - nu p + nu p E[cos(2 pi t xi-bar)], xi-bar conditioned on I_B.
double char_fn_exact(const LazyLaw& law, double t);
// E[ ||t xi-bar||_T^2 ] with xi-bar conditioned on I_B.
double torus_moment(const LazyLaw& law, double t);
// 1 - nu + nu |phi_xi(t)|^2, the characteristic function of xi~ Z_nu.
double char_fn_untruncated(const LazyLaw& law, double t);

struct SandwichReport {
    std::size_t points = 0;
    std::size_t violations = 0;
    double max_violation = 0.0;   // largest signed excess over any bound, floored at 0
    double worst_t = 0.0;
    bool dominance_checked = false;
    std::vector<double> offending_t;
};

// Checks exp(-32 nu p E) <= phi <= exp(-nu p E), phi_{xi~ Z_nu} <= phi and,
// when nu <= 1/4, |phi_xi| <= |phi_{xi~ Z_nu}| at every grid point.
SandwichReport char_fn_sandwich_check(const LazyLaw& law, const std::vector<double>& t_grid,
                                      double slack = 1e-9);

nlohmann::json to_json(const EntryLaw& law);
nlohmann::json to_json(const LazyLaw& law);
EntryLaw entry_law_from_json(const nlohmann::json& j);
// Returns a LazyLaw when the object carries "nu", otherwise an EntryLaw.
AnyLaw law_from_json(const nlohmann::json& j);
EntryLaw entry_law_from_name(const std::string& name);

namespace quad {
// Nodes and weights of the 64-point Gauss-Legendre rule on [-1, 1].
const std::vector<double>& gl64_nodes();
const std::vector<double>& gl64_weights();
}  // namespace quad

}  // namespace rml
