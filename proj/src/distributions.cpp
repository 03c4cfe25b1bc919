#include "rml/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace rml {

namespace quad {

namespace {
struct Rule {
    std::vector<double> x, w;
    Rule()
    {
        constexpr int n = 64;
        x.resize(n);
        w.resize(n);
        for (int i = 0; i < n; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};
const Rule& rule()
{
    static const Rule r;
    return r;
}
}  // namespace

const std::vector<double>& gl64_nodes() { return rule().x; }
const std::vector<double>& gl64_weights() { return rule().w; }

}  // namespace quad

namespace {

void check_atoms(const std::vector<Atom>& atoms)
{
    if (atoms.empty()) throw std::invalid_argument("custom law: no atoms");
    double total = 0.0, mean = 0.0, second = 0.0;
    for (const auto& a : atoms) {
        if (!(a.prob >= 0.0) || !std::isfinite(a.value))
            throw std::invalid_argument("custom law: bad atom");
        total += a.prob;
        mean += a.prob * a.value;
        second += a.prob * a.value * a.value;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("custom law: probabilities sum to " + std::to_string(total));
    if (std::abs(mean) > 1e-12) throw std::invalid_argument("custom law: mean is not 0");
    if (std::abs(second - 1.0) > 1e-9) throw std::invalid_argument("custom law: variance is not 1");
}

std::vector<double> cumulative(const std::vector<Atom>& atoms)
{
    std::vector<double> c(atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        acc += atoms[i].prob;
        c[i] = acc;
    }
    return c;
}

}  // namespace

EntryLaw EntryLaw::rademacher(bool complexified)
{
    EntryLaw l;
    l.kind_ = LawKind::rademacher;
    l.complexified_ = complexified;
    l.atoms_ = {{-1.0, 0.5}, {1.0, 0.5}};
    l.cdf_ = cumulative(l.atoms_);
    return l;
}

EntryLaw EntryLaw::gaussian(bool complexified)
{
    EntryLaw l;
    l.kind_ = LawKind::gaussian;
    l.complexified_ = complexified;
    return l;
}

EntryLaw EntryLaw::uniform_pm_k(int k, bool complexified)
{
    if (k < 1) throw std::invalid_argument("uniform_pm_k: k must be >= 1");
    EntryLaw l;
    l.kind_ = LawKind::uniform_pm_k;
    l.complexified_ = complexified;
    l.k_ = k;
    const double scale = 1.0 / std::sqrt((k + 1.0) * (2.0 * k + 1.0) / 6.0);
    const double prob = 1.0 / (2.0 * k);
    for (int v = -k; v <= k; ++v)
        if (v != 0) l.atoms_.push_back({v * scale, prob});
    l.cdf_ = cumulative(l.atoms_);
    return l;
}

EntryLaw EntryLaw::custom(std::vector<Atom> atoms, bool complexified)
{
    check_atoms(atoms);
    return unchecked(std::move(atoms), complexified);
}

EntryLaw EntryLaw::unchecked(std::vector<Atom> atoms, bool complexified)
{
    if (atoms.empty()) throw std::invalid_argument("custom law: no atoms");
    EntryLaw l;
    l.kind_ = LawKind::custom_discrete;
    l.complexified_ = complexified;
    l.atoms_ = std::move(atoms);
    l.cdf_ = cumulative(l.atoms_);
    return l;
}

std::string EntryLaw::name() const
{
    std::string s;
    switch (kind_) {
    case LawKind::rademacher: s = "rademacher"; break;
    case LawKind::gaussian: s = "gaussian"; break;
    case LawKind::uniform_pm_k: s = "uniform_pm_" + std::to_string(k_); break;
    case LawKind::custom_discrete: s = "custom_discrete"; break;
    }
    return complexified_ ? s + "_complex" : s;
}

double EntryLaw::sample_real(Stream& s) const
{
    switch (kind_) {
    case LawKind::rademacher: return s.coin() ? 1.0 : -1.0;
    case LawKind::gaussian: return s.normal();
    case LawKind::uniform_pm_k: return atoms_[s.below(atoms_.size())].value;
    case LawKind::custom_discrete: {
        const double u = s.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        std::size_t i = std::size_t(it - cdf_.begin());
        return atoms_[std::min(i, atoms_.size() - 1)].value;
    }
    }
    return 0.0;
}

std::complex<double> EntryLaw::sample_complex(Stream& s) const
{
    const double re = sample_real(s);
    if (!complexified_) return {re, 0.0};
    return {re, sample_real(s)};
}

std::complex<double> EntryLaw::char_fn(double t) const
{
    if (kind_ == LawKind::gaussian) {
        const double a = std::numbers::pi * t;
        return {std::exp(-2.0 * a * a), 0.0};
    }
    std::complex<double> acc{0.0, 0.0};
    for (const auto& a : atoms_) {
        const double ang = 2.0 * std::numbers::pi * t * a.value;
        acc += a.prob * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    return acc;
}

LazyLaw::LazyLaw(EntryLaw base, double B, double nu, bool truncated)
    : base_(std::move(base)), B_(B), nu_(nu), truncated_(truncated)
{
    if (!(B > 0.0)) throw std::invalid_argument("lazy law: B must be positive");
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("lazy law: nu must lie in [0,1]");
    const double lo = 1.0, hi = interval_high();
    if (base_.discrete()) {
        std::vector<Atom> diff;
        for (const auto& a : base_.atoms())
            for (const auto& b : base_.atoms()) diff.push_back({a.value - b.value, a.prob * b.prob});
        std::sort(diff.begin(), diff.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
        double p = 0.0;
        for (const auto& d : diff) {
            const double a = std::abs(d.value);
            if (!(a > lo && a < hi)) continue;
            p += d.prob;
            if (!retained_.empty() && std::abs(retained_.back().value - d.value) < 1e-12)
                retained_.back().prob += d.prob;
            else
                retained_.push_back(d);
        }
        if (p > 0.0)
            for (auto& r : retained_) r.prob /= p;
        p_ = p;
        if (p_ < 1.0 / (128.0 * B * B * B * B))
            throw std::invalid_argument("lazy law: retention probability " + std::to_string(p_) +
                                        " below 2^-7 B^-4; B is too small for this base law");
    } else {
        // |xi~| for the gaussian base is |N(0, 2)|.
        p_ = std::erfc(lo / 2.0) - std::erfc(hi / 2.0);
    }
}

std::vector<Atom> LazyLaw::atoms() const
{
    if (!base_.discrete()) throw std::logic_error("lazy law: continuous base has no atoms");
    std::vector<Atom> out;
    if (truncated_) {
        out.push_back({0.0, 1.0 - nu_ * p_});
        for (const auto& r : retained_) out.push_back({r.value, nu_ * p_ * r.prob});
    } else {
        double zero = 1.0 - nu_;
        for (const auto& a : base_.atoms())
            for (const auto& b : base_.atoms()) {
                const double v = a.value - b.value;
                if (std::abs(v) < 1e-12) {
                    zero += nu_ * a.prob * b.prob;
                    continue;
                }
                auto it = std::find_if(out.begin(), out.end(),
                                       [&](const Atom& x) { return std::abs(x.value - v) < 1e-12; });
                if (it == out.end())
                    out.push_back({v, nu_ * a.prob * b.prob});
                else
                    it->prob += nu_ * a.prob * b.prob;
            }
        std::sort(out.begin(), out.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
        out.insert(out.begin(), Atom{0.0, zero});
    }
    return out;
}

double LazyLaw::sample_real(Stream& s) const
{
    // Fixed draw order (selector, xi, xi') keeps streams aligned whatever the outcome.
    const double u = s.uniform();
    const double x = base_.sample_real(s);
    const double y = base_.sample_real(s);
    if (!(u < nu_)) return 0.0;
    const double d = x - y;
    if (truncated_) {
        const double a = std::abs(d);
        if (!(a > 1.0 && a < interval_high())) return 0.0;
    }
    return d;
}

std::complex<double> LazyLaw::sample_complex(Stream& s) const
{
    const double re = sample_real(s);
    if (!base_.complexified()) return {re, 0.0};
    return {re, sample_real(s)};
}

double LazyLaw::cond_expect(const std::function<double(double)>& g, double freq) const
{
    if (base_.discrete()) {
        double acc = 0.0;
        for (const auto& r : retained_) acc += r.prob * g(std::abs(r.value));
        return acc;
    }
    const double lo = 1.0, hi = std::min(interval_high(), 30.0);
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts{lo};
    const double f = std::abs(freq);
    if (f > 0.0) {
        const double first = std::ceil(lo * f - 0.5) + 0.5;
        for (double k = first; k / f < hi; k += 1.0)
            if (k / f > lo) cuts.push_back(k / f);
    }
    cuts.push_back(hi);
    const auto& xs = quad::gl64_nodes();
    const auto& ws = quad::gl64_weights();
    const double norm = 1.0 / std::sqrt(std::numbers::pi);
    double acc = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double panel = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double x = mid + half * xs[i];
            panel += ws[i] * g(x) * norm * std::exp(-0.25 * x * x);
        }
        acc += half * panel;
    }
    return acc / p_;
}

double torus_dist(double x) { return std::abs(x - std::nearbyint(x)); }

double char_fn_exact(const LazyLaw& law, double t)
{
    const double np = law.nu() * law.p();
    const double ec =
        law.cond_expect([t](double x) { return std::cos(2.0 * std::numbers::pi * t * x); }, t);
    return 1.0 - np + np * ec;
}

double torus_moment(const LazyLaw& law, double t)
{
    return law.cond_expect(
        [t](double x) {
            const double d = torus_dist(t * x);
            return d * d;
        },
        t);
}

double char_fn_untruncated(const LazyLaw& law, double t)
{
    const double m = std::abs(law.base().char_fn(t));
    return 1.0 - law.nu() + law.nu() * m * m;
}

SandwichReport char_fn_sandwich_check(const LazyLaw& law, const std::vector<double>& t_grid,
                                      double slack)
{
    SandwichReport rep;
    rep.dominance_checked = law.nu() <= 0.25;
    const double np = law.nu() * law.p();
    for (double t : t_grid) {
        const double phi = char_fn_exact(law, t);
        const double e = torus_moment(law, t);
        const double lower = std::exp(-32.0 * np * e);
        const double upper = std::exp(-np * e);
        const double untr = char_fn_untruncated(law, t);
        double worst = std::max(lower - phi, phi - upper);
        worst = std::max(worst, untr - phi);
        if (rep.dominance_checked) worst = std::max(worst, std::abs(law.base().char_fn(t)) - std::abs(untr));
        ++rep.points;
        if (worst > rep.max_violation) {
            rep.max_violation = worst;
            rep.worst_t = t;
        }
        if (worst > slack) {
            ++rep.violations;
            if (rep.offending_t.size() < 16) rep.offending_t.push_back(t);
        }
    }
    return rep;
}

nlohmann::json to_json(const EntryLaw& law)
{
    nlohmann::json j;
    switch (law.kind()) {
    case LawKind::rademacher: j["kind"] = "rademacher"; break;
    case LawKind::gaussian: j["kind"] = "gaussian"; break;
    case LawKind::uniform_pm_k:
        j["kind"] = "uniform_pm_k";
        j["k"] = law.k();
        break;
    case LawKind::custom_discrete: {
        j["kind"] = "custom_discrete";
        nlohmann::json atoms = nlohmann::json::array();
        for (const auto& a : law.atoms()) atoms.push_back({a.value, a.prob});
        j["atoms"] = atoms;
        break;
    }
    }
    j["complex"] = law.complexified();
    return j;
}

nlohmann::json to_json(const LazyLaw& law)
{
    nlohmann::json j = to_json(law.base());
    j["nu"] = law.nu();
    j["B"] = law.B();
    j["truncated"] = law.truncated();
    return j;
}

EntryLaw entry_law_from_json(const nlohmann::json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    const bool cx = j.value("complex", false);
    if (kind == "rademacher") return EntryLaw::rademacher(cx);
    if (kind == "gaussian") return EntryLaw::gaussian(cx);
    if (kind == "uniform_pm_k") return EntryLaw::uniform_pm_k(j.at("k").get<int>(), cx);
    if (kind == "custom_discrete") {
        std::vector<Atom> atoms;
        for (const auto& a : j.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        return EntryLaw::custom(std::move(atoms), cx);
    }
    throw std::invalid_argument("unknown law kind '" + kind + "'");
}

AnyLaw law_from_json(const nlohmann::json& j)
{
    if (j.is_string()) return entry_law_from_name(j.get<std::string>());
    EntryLaw base = entry_law_from_json(j);
    if (!j.contains("nu")) return base;
    return LazyLaw(std::move(base), j.value("B", 1.0), j.at("nu").get<double>(),
                   j.value("truncated", true));
}

EntryLaw entry_law_from_name(const std::string& name)
{
    if (name == "rademacher") return EntryLaw::rademacher();
    if (name == "gaussian") return EntryLaw::gaussian();
    if (name.rfind("uniform_pm_", 0) == 0) return EntryLaw::uniform_pm_k(std::stoi(name.substr(11)));
    throw std::invalid_argument("unknown law name '" + name + "'");
}

}  // namespace rml
