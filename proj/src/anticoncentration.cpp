#include "rml/anticoncentration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

#include "rml/parallel.hpp"

namespace rml {

Interval clopper_pearson(std::size_t k, std::size_t n, double confidence)
{
    if (n == 0) throw std::invalid_argument("clopper_pearson: no trials");
    if (k > n) throw std::invalid_argument("clopper_pearson: k > n");
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("clopper_pearson: bad confidence");
    const double a = 1.0 - confidence;
    Interval r;
    r.lo = k == 0 ? 0.0 : boost::math::ibeta_inv(double(k), double(n - k + 1), a / 2);
    r.hi = k == n ? 1.0 : boost::math::ibeta_inv(double(k + 1), double(n - k), 1.0 - a / 2);
    return r;
}

std::string method_name(Method m)
{
    return m == Method::monte_carlo ? "monte_carlo" : "exact_enumeration";
}

std::string center_policy_name(CenterPolicy c)
{
    return c == CenterPolicy::fixed_zero ? "fixed_zero" : "empirical_mode_search";
}

ConcentrationEstimate monte_carlo_estimate(std::size_t k, std::size_t trials, double epsilon, double confidence,
                                           CenterPolicy policy)
{
    const Interval ci = clopper_pearson(k, trials, confidence);
    ConcentrationEstimate e;
    e.epsilon = epsilon;
    e.p_hat = double(k) / double(trials);
    e.ci_low = std::min(ci.lo, e.p_hat);
    e.ci_high = std::max(ci.hi, e.p_hat);
    e.k_hits = k;
    e.trials = trials;
    e.method = Method::monte_carlo;
    e.center_policy = policy;
    return e;
}

ConcentrationEstimate exact_estimate(double p, double epsilon, CenterPolicy policy)
{
    ConcentrationEstimate e;
    e.epsilon = epsilon;
    e.p_hat = e.ci_low = e.ci_high = std::clamp(p, 0.0, 1.0);
    e.method = Method::exact_enumeration;
    e.center_policy = policy;
    return e;
}

bool ci_qualified(const ConcentrationEstimate& e, double width_ratio)
{
    return e.p_hat > 0.0 && (e.ci_high - e.ci_low) < width_ratio * e.p_hat;
}

FitResult fit_loglog(const std::vector<ConcentrationEstimate>& rows, double width_ratio)
{
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.epsilon > 0.0 && ci_qualified(r, width_ratio)) {
            x.push_back(std::log(r.epsilon));
            y.push_back(std::log(r.p_hat));
        }
    FitResult f;
    f.qualified = x.size();
    if (x.size() < 3) return f;
    const double m = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    const double icpt = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - icpt - f.slope * x[i];
        ssr += r * r;
    }
    f.stderr_ = std::sqrt(ssr / (m - 2.0) / sxx);
    f.constant = std::exp(icpt);
    f.inconclusive = false;
    return f;
}

namespace {

void check_grid(const std::vector<double>& g)
{
    if (g.empty()) throw std::invalid_argument("epsilon grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) throw std::invalid_argument("epsilon grid needs positive radii");
        if (i > 0 && g[i] < g[i - 1]) throw std::invalid_argument("epsilon grid must be nondecreasing");
    }
}

// Counts, for each radius, how many of the sorted squared distances are <= r^2.
void accumulate_counts(std::vector<double>& d2, const std::vector<double>& eps, std::vector<std::size_t>& out)
{
    std::sort(d2.begin(), d2.end());
    for (std::size_t e = 0; e < eps.size(); ++e) {
        const double r2 = eps[e] * eps[e];
        out[e] = std::size_t(std::upper_bound(d2.begin(), d2.end(), r2) - d2.begin());
    }
}

}  // namespace

std::vector<ConcentrationEstimate> levy_from_samples(const RMat& samples, const std::vector<double>& eps_grid,
                                                     CenterPolicy policy, double confidence,
                                                     std::size_t max_centers)
{
    check_grid(eps_grid);
    const std::size_t T = std::size_t(samples.cols());
    if (T == 0) throw std::invalid_argument("levy estimate: trial budget is 0");
    const Eigen::Index d = samples.rows();
    std::vector<std::size_t> best(eps_grid.size(), 0), cur(eps_grid.size());
    std::vector<double> d2(T);

    for (std::size_t t = 0; t < T; ++t) d2[t] = samples.col(Eigen::Index(t)).squaredNorm();
    accumulate_counts(d2, eps_grid, best);

    if (policy == CenterPolicy::empirical_mode_search) {
        if (d == 1) {
            std::vector<double> x(T);
            for (std::size_t t = 0; t < T; ++t) x[t] = samples(0, Eigen::Index(t));
            std::sort(x.begin(), x.end());
            for (std::size_t e = 0; e < eps_grid.size(); ++e) {
                const double w = 2.0 * eps_grid[e];
                std::size_t j = 0;
                for (std::size_t i = 0; i < T; ++i) {
                    if (j < i) j = i;
                    while (j < T && x[j] - x[i] <= w) ++j;
                    best[e] = std::max(best[e], j - i);
                }
            }
        } else {
            const std::size_t nc = std::min(max_centers, T);
            for (std::size_t c = 0; c < nc; ++c) {
                const RVec w = samples.col(Eigen::Index(c));
                for (std::size_t t = 0; t < T; ++t) d2[t] = (samples.col(Eigen::Index(t)) - w).squaredNorm();
                accumulate_counts(d2, eps_grid, cur);
                for (std::size_t e = 0; e < eps_grid.size(); ++e) best[e] = std::max(best[e], cur[e]);
            }
        }
    }
    std::vector<ConcentrationEstimate> out;
    out.reserve(eps_grid.size());
    for (std::size_t e = 0; e < eps_grid.size(); ++e)
        out.push_back(monte_carlo_estimate(best[e], T, eps_grid[e], confidence, policy));
    return out;
}

namespace {

RMat draw_pool(const VectorSampler& sampler, std::size_t trials, const Stream& stream, int workers)
{
    if (trials == 0) throw std::invalid_argument("levy estimate: trial budget is 0");
    auto cols = run_trials<RVec>(trials, workers, [&](std::size_t i) {
        Stream s = stream.split(i);
        return sampler(s);
    });
    const Eigen::Index d = cols.front().size();
    RMat pool(d, Eigen::Index(trials));
    for (std::size_t i = 0; i < trials; ++i) {
        if (cols[i].size() != d) throw std::invalid_argument("levy estimate: sampler changed dimension");
        pool.col(Eigen::Index(i)) = cols[i];
    }
    return pool;
}

}  // namespace

std::vector<ConcentrationEstimate> levy_estimate_grid(const VectorSampler& sampler,
                                                      const std::vector<double>& eps_grid, std::size_t trials,
                                                      CenterPolicy policy, const Stream& stream, int workers)
{
    check_grid(eps_grid);
    return levy_from_samples(draw_pool(sampler, trials, stream, workers), eps_grid, policy);
}

ConcentrationEstimate levy_estimate(const VectorSampler& sampler, double epsilon, std::size_t trials,
                                    CenterPolicy policy, const Stream& stream, int workers)
{
    return levy_estimate_grid(sampler, {epsilon}, trials, policy, stream, workers).front();
}

namespace {

std::vector<WeightedPoint> merge_points(std::vector<WeightedPoint> pts)
{
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    std::vector<WeightedPoint> out;
    for (const auto& p : pts) {
        if (!out.empty() && std::abs(p.value - out.back().value) <= 1e-12 * (1.0 + std::abs(p.value)))
            out.back().prob += p.prob;
        else
            out.push_back(p);
    }
    return out;
}

}  // namespace

double levy_exact_1d(std::vector<WeightedPoint> atoms, double epsilon)
{
    if (!(epsilon >= 0.0)) throw std::invalid_argument("levy_exact_1d: epsilon must be nonnegative");
    atoms = merge_points(std::move(atoms));
    const double w = 2.0 * epsilon;
    double best = 0.0, run = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (j < i) {
            j = i;
            run = 0.0;
        }
        while (j < atoms.size() && atoms[j].value - atoms[i].value <= w * (1.0 + 1e-12) + 1e-15) run += atoms[j++].prob;
        best = std::max(best, run);
        run -= atoms[i].prob;
    }
    return std::min(best, 1.0);
}

std::vector<WeightedPoint> exact_linear_form(const EntryLaw& law, const RVec& a)
{
    if (!law.discrete()) throw std::invalid_argument("exact_linear_form: law is not discrete");
    std::vector<WeightedPoint> cur{{0.0, 1.0}};
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        std::vector<WeightedPoint> next;
        next.reserve(cur.size() * law.atoms().size());
        for (const auto& p : cur)
            for (const auto& at : law.atoms()) next.push_back({p.value + a(k) * at.value, p.prob * at.prob});
        cur = merge_points(std::move(next));
        if (cur.size() > (std::size_t(1) << 24)) throw std::length_error("exact_linear_form: support too large");
    }
    return cur;
}

std::size_t free_entry_count(const EnsembleSpec& spec)
{
    const std::size_t n = std::size_t(spec.n);
    switch (spec.family) {
    case Family::iid_square:
    case Family::block_LA: return n * n;
    case Family::iid_rect: return std::size_t(spec.n_rows) * n;
    case Family::block_curlyLA:
    case Family::linearized_P:
    case Family::truncated_M_underline: return (n - 1) * n;
    case Family::zeroed_M: return zeroed_free_positions(spec.n, spec.anchor_size).size();
    case Family::iid_complex: return 2 * n * n;
    case Family::complex_P_G:
    case Family::complex_M_G: return 2 * (n - 1) * n;
    }
    return 0;
}

RMat build_from_entries(const EnsembleSpec& spec, const std::vector<double>& x)
{
    if (spec.is_complex()) throw std::invalid_argument("build_from_entries: complex families are not supported");
    if (x.size() != free_entry_count(spec)) throw std::invalid_argument("build_from_entries: wrong entry count");
    const int n = spec.n;
    auto fill = [&](int rows, int first_row) {
        RMat A = RMat::Zero(rows, n);
        std::size_t k = 0;
        for (int i = first_row; i < rows; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = x[k++];
        return A;
    };
    switch (spec.family) {
    case Family::iid_square: return fill(n, 0);
    case Family::iid_rect: return fill(spec.n_rows, 0);
    case Family::block_LA: return build_LA(fill(n, 0));
    case Family::block_curlyLA: return build_curlyLA(fill(n, 1));
    case Family::zeroed_M: return build_zeroed_M(n, spec.anchor_size, x);
    case Family::linearized_P: return build_P(fill(n, 1), spec.lambda1, spec.lambda2, spec.lambda_hat);
    case Family::truncated_M_underline: return build_M_underline(fill(n, 1));
    default: break;
    }
    throw std::invalid_argument("build_from_entries: unsupported family");
}

namespace {

std::vector<Atom> discrete_atoms(const AnyLaw& law)
{
    if (const auto* e = std::get_if<EntryLaw>(&law)) {
        if (!e->discrete()) throw std::invalid_argument("exact enumeration needs a discrete law");
        return e->atoms();
    }
    const auto& l = std::get<LazyLaw>(law);
    if (!l.base().discrete()) throw std::invalid_argument("exact enumeration needs a discrete law");
    return l.atoms();
}

double radius_of(const MatrixSample& m, const RVec& v, int n)
{
    const double sq = m.is_complex() ? (m.cplx() * v.cast<std::complex<double>>()).squaredNorm()
                                     : (m.real() * v).squaredNorm();
    return std::sqrt(sq / double(n));
}

}  // namespace

std::vector<WeightedPoint> small_ball_radii(const EnsembleSpec& spec, const RVec& v, const SmallBallOptions& opt,
                                            const Stream& stream, Method& method)
{
    spec.validate();
    if (v.size() != spec.cols()) throw std::invalid_argument("small ball: vector dimension does not match the ensemble");
    if (opt.exact) {
        const std::size_t count = free_entry_count(spec);
        if (spec.is_complex() || count > opt.max_exact_entries)
            throw std::length_error("small ball: exact enumeration budget exceeded (" + std::to_string(count) +
                                    " free entries)");
        std::vector<Atom> atoms = discrete_atoms(spec.law);
        const double combos = std::pow(double(atoms.size()), double(count));
        if (combos > double(std::size_t(1) << 26))
            throw std::length_error("small ball: exact enumeration budget exceeded (" + std::to_string(combos) +
                                    " patterns)");
        std::vector<std::size_t> idx(count, 0);
        std::vector<double> x(count);
        std::vector<WeightedPoint> pts;
        pts.reserve(std::size_t(combos));
        for (;;) {
            double p = 1.0;
            for (std::size_t k = 0; k < count; ++k) {
                x[k] = atoms[idx[k]].value;
                p *= atoms[idx[k]].prob;
            }
            const RMat M = build_from_entries(spec, x);
            pts.push_back({std::sqrt((M * v).squaredNorm() / double(spec.n)), p});
            std::size_t k = 0;
            while (k < count && ++idx[k] == atoms.size()) idx[k++] = 0;
            if (k == count) break;
        }
        method = Method::exact_enumeration;
        return merge_points(std::move(pts));
    }
    if (opt.trials == 0) throw std::invalid_argument("small ball: trial budget is 0");
    auto r = run_trials<double>(opt.trials, opt.workers, [&](std::size_t i) {
        Stream s = stream.split(i);
        return radius_of(sample(spec, s), v, spec.n);
    });
    std::vector<WeightedPoint> pts;
    pts.reserve(r.size());
    const double w = 1.0 / double(r.size());
    for (double x : r) pts.push_back({x, w});
    method = Method::monte_carlo;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    return pts;
}

ConcentrationEstimate small_ball_matrix(const EnsembleSpec& spec, const RVec& v, double t,
                                        const SmallBallOptions& opt, const Stream& stream)
{
    if (!(t >= 0.0)) throw std::invalid_argument("small ball: t must be nonnegative");
    Method method;
    const auto pts = small_ball_radii(spec, v, opt, stream, method);
    const double cut = t * (1.0 + 1e-12);
    if (method == Method::exact_enumeration) {
        double p = 0.0;
        for (const auto& q : pts)
            if (q.value <= cut) p += q.prob;
        return exact_estimate(p, t);
    }
    std::size_t k = 0;
    for (const auto& q : pts)
        if (q.value <= cut) ++k;
    return monte_carlo_estimate(k, pts.size(), t, opt.confidence);
}

namespace {

// sup{t in [0,1] : P(t) >= (4 L t)^e} for a right-continuous step function P
// with jumps at radii[k] to level cum[k].  Returns the sup and a feasible
// point of the last feasible piece.
std::pair<double, double> step_sup(const std::vector<double>& radii, const std::vector<double>& cum, double L,
                                   int e)
{
    double sup = 0.0, piece_start = 0.0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double start = radii[k];
        if (start > 1.0) break;
        const double end = k + 1 < radii.size() ? radii[k + 1] : 1.0;
        const double reach = std::pow(std::clamp(cum[k], 0.0, 1.0), 1.0 / double(e)) / (4.0 * L);
        if (reach >= start) {
            const double s = std::min({reach, end, 1.0});
            if (s >= sup) {
                sup = s;
                piece_start = start;
            }
        }
    }
    return {sup, piece_start};
}

}  // namespace

ThresholdEstimate threshold_from_radii(std::vector<WeightedPoint> radii, double L, int exponent, Method method,
                                       std::size_t trials, double confidence)
{
    if (!(L >= 2.0)) throw std::invalid_argument("threshold_tau: L must be at least 2");
    if (exponent < 1) throw std::invalid_argument("threshold_tau: exponent must be positive");
    radii = merge_points(std::move(radii));
    std::vector<double> r, cum, lo, hi;
    double acc = 0.0;
    for (const auto& p : radii) {
        acc += p.prob;
        r.push_back(p.value);
        cum.push_back(acc);
    }
    // t below the smallest radius has P = 0; only t = 0 is feasible there.
    ThresholdEstimate out;
    out.L = L;
    out.exponent = exponent;
    out.method = method;
    out.trials = trials;
    const auto [sup, start] = step_sup(r, cum, L, exponent);
    out.t_hat = sup;
    out.bracket_low = std::max(start, sup - 5e-4);
    out.bracket_high = std::min(1.0, sup + 5e-4);
    if (method == Method::exact_enumeration || trials == 0) {
        out.t_pessimistic = out.t_optimistic = sup;
        return out;
    }
    for (double c : cum) {
        const auto k = std::size_t(std::llround(c * double(trials)));
        const Interval ci = clopper_pearson(std::min(k, trials), trials, confidence);
        lo.push_back(ci.lo);
        hi.push_back(ci.hi);
    }
    out.t_pessimistic = step_sup(r, lo, L, exponent).first;
    out.t_optimistic = step_sup(r, hi, L, exponent).first;
    // The optimistic curve may also be feasible below the first radius.
    const double pre = std::pow(clopper_pearson(0, trials, confidence).hi, 1.0 / exponent) / (4.0 * L);
    if (!r.empty()) out.t_optimistic = std::max(out.t_optimistic, std::min(pre, r.front()));
    out.inconclusive = out.t_optimistic - out.t_pessimistic > 1e-3;
    return out;
}

ThresholdEstimate threshold_tau(const EnsembleSpec& spec, const RVec& v, double L, int exponent,
                                const SmallBallOptions& opt, const Stream& stream)
{
    if (!(L >= 2.0)) throw std::invalid_argument("threshold_tau: L must be at least 2");
    Method method;
    auto pts = small_ball_radii(spec, v, opt, stream, method);
    return threshold_from_radii(std::move(pts), L, exponent, method,
                                method == Method::monte_carlo ? opt.trials : 0, opt.confidence);
}

namespace {

bool lcd_reaches(const LcdResult& lcd, double need)
{
    return !lcd.heuristic && lcd.theta_lo >= need && (lcd.certified || lcd.found);
}

LoTable lo_table(const RMat& a, const EntryLaw& law, const std::vector<double>& eps_grid, double radius_scale,
                 double power, double weight, const LoOptions& opt, const Stream& stream)
{
    const Eigen::Index n = a.cols();
    RMat pool = draw_pool(
        [&](Stream& s) {
            RVec x(n);
            for (Eigen::Index k = 0; k < n; ++k) x(k) = law.sample_real(s);
            return RVec(a * x);
        },
        opt.trials, stream, opt.workers);
    std::vector<double> radii;
    for (double e : eps_grid) radii.push_back(radius_scale * e);
    LoTable t;
    t.rows = levy_from_samples(pool, radii, opt.policy, opt.confidence, opt.max_centers);
    t.zero_center = levy_from_samples(pool, radii, CenterPolicy::fixed_zero, opt.confidence);
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        t.rows[i].epsilon = eps_grid[i];
        t.zero_center[i].epsilon = eps_grid[i];
        t.max_ratio = std::max(t.max_ratio, t.rows[i].p_hat * weight / std::pow(eps_grid[i], power));
    }
    t.fit = fit_loglog(t.rows);
    return t;
}

}  // namespace

LoTable lo_bound_check_1d(const RVec& v, const LcdResult& lcd, const EntryLaw& law, const std::vector<double>& eps_grid,
                          const LoOptions& opt, const Stream& stream)
{
    check_grid(eps_grid);
    if (std::abs(v.norm() - 1.0) > 1e-9) throw PreconditionError("lo 1-D: v must be a unit vector");
    const double need = opt.c_margin / eps_grid.front();
    if (!lcd_reaches(lcd, need))
        throw PreconditionError("lo 1-D: certified LCD " + std::to_string(lcd.theta_lo) + " is below " +
                                std::to_string(need));
    RMat a = v.transpose();
    return lo_table(a, law, eps_grid, 1.0, 1.0, 1.0, opt, stream);
}

LoTable lo_bound_check_2d(const RVec& c, const RVec& d, const LcdResult& lcd, const EntryLaw& law,
                          const std::vector<double>& eps_grid, const LoOptions& opt, const Stream& stream)
{
    check_grid(eps_grid);
    if (c.size() != d.size()) throw PreconditionError("lo 2-D: c and d differ in length");
    if (std::abs(c.norm() - 1.0) > 1e-9) throw PreconditionError("lo 2-D: c must be a unit vector");
    const double omega = d.norm();
    if (!(omega > 0.0) || omega > 1.0 + 1e-12) throw PreconditionError("lo 2-D: need 0 < ||d|| <= 1");
    const double cs = std::abs(cosine(c, d));
    if (cs > 0.01) throw PreconditionError("lo 2-D: |cos(c, d)| = " + std::to_string(cs) + " exceeds 0.01");
    const double need = std::sqrt(2.0) / eps_grid.front();
    if (!lcd_reaches(lcd, need))
        throw PreconditionError("lo 2-D: certified LCD " + std::to_string(lcd.theta_lo) + " is below " +
                                std::to_string(need));
    RMat a(2, c.size());
    a.row(0) = c.transpose();
    a.row(1) = d.transpose();
    return lo_table(a, law, eps_grid, std::sqrt(2.0), 2.0, omega, opt, stream);
}

LoTable lo_bound_check_4d(const RVec& c, const RVec& cp, const RVec& d, const RVec& dp, const LcdResult& lcd,
                          const EntryLaw& law, const std::vector<double>& eps_grid, const LoOptions& opt,
                          const Stream& stream)
{
    check_grid(eps_grid);
    const Eigen::Index n = c.size();
    if (cp.size() != n || d.size() != n || dp.size() != n) throw PreconditionError("lo 4-D: lengths differ");
    if (!(c.norm() > 0.0) || !(cp.norm() > 0.0)) throw PreconditionError("lo 4-D: c and c' must be nonzero");
    if (!(d.norm() > 0.0) || !(dp.norm() > 0.0)) throw PreconditionError("lo 4-D: d and d' must be nonzero");
    if (std::abs(c.dot(cp)) > 1e-9 * c.norm() * cp.norm()) throw PreconditionError("lo 4-D: <c, c'> != 0");
    if (std::abs(d.dot(dp)) > 1e-9 * d.norm() * dp.norm()) throw PreconditionError("lo 4-D: <d, d'> != 0");
    for (const RVec* x : {&c, &cp})
        for (const RVec* y : {&d, &dp})
            if (std::abs(cosine(*x, *y)) > 0.01) throw PreconditionError("lo 4-D: a cosine exceeds 0.01");
    const double need = 2.0 / eps_grid.front();
    if (!lcd_reaches(lcd, need))
        throw PreconditionError("lo 4-D: certified LCD " + std::to_string(lcd.theta_lo) + " is below " +
                                std::to_string(need));
    RMat a(4, n);
    a.row(0) = c.transpose();
    a.row(1) = cp.transpose();
    a.row(2) = d.transpose();
    a.row(3) = dp.transpose();
    return lo_table(a, law, eps_grid, 2.0, 4.0, d.norm() * dp.norm(), opt, stream);
}

double marginal_constant(NonnegLaw law)
{
    return law == NonnegLaw::uniform01 ? 1.0 : std::sqrt(2.0 / M_PI);
}

TensorizationReport tensorization_check(NonnegLaw law, const std::vector<double>& eps_grid, int n,
                                        std::size_t trials, const Stream& stream, int workers)
{
    check_grid(eps_grid);
    if (n < 1) throw std::invalid_argument("tensorization: n must be positive");
    if (trials == 0) throw std::invalid_argument("tensorization: trial budget is 0");
    auto mean_sq = run_trials<double>(trials, workers, [&](std::size_t i) {
        Stream s = stream.split(i);
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x = law == NonnegLaw::uniform01 ? s.uniform() : std::abs(s.normal());
            acc += x * x;
        }
        return acc / double(n);
    });
    std::sort(mean_sq.begin(), mean_sq.end());
    TensorizationReport rep;
    rep.K = marginal_constant(law);
    for (double e : eps_grid) {
        const auto k = std::size_t(std::upper_bound(mean_sq.begin(), mean_sq.end(), e * e) - mean_sq.begin());
        TensorizationRow row;
        row.estimate = monte_carlo_estimate(k, trials, e);
        row.bound_unit_c = std::pow(rep.K * e, double(n));
        row.c_needed = std::pow(row.estimate.p_hat, 1.0 / double(n)) / (rep.K * e);
        rep.c_calibrated = std::max(rep.c_calibrated, row.c_needed);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace rml
