#include "rml/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace rml {

double dist_to_int_lattice(const RVec& w)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i])) throw std::invalid_argument("dist_to_int_lattice: non-finite entry");
        const double d = w[i] - std::nearbyint(w[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

// Objective along the ray t -> t w, minus an optional linear slack.
struct Ray {
    const double* w;
    Eigen::Index n;
    double wnorm;
    double winf;
    double cap;      // sqrt(alpha N)
    double gamma;
    double slack;    // per unit t
    double lip;      // Lipschitz constant of the slackened objective in t

    double operator()(double t) const
    {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = t * w[i];
            const double d = x - std::nearbyint(x);
            s += d * d;
        }
        // Rounding allowance: each t w_i carries relative error ~eps.
        const double err = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + t * winf) * std::sqrt(double(n));
        return std::sqrt(s) - std::min(cap, gamma * t * wnorm) - slack * t - err;
    }
};

struct ScanOutcome {
    bool crossed = false;
    double certified_to = 0.0;  // objective > 0 on [t0, certified_to)
    double cross_at = 0.0;
    std::size_t dips = 0;
    bool dip_seen = false;
    double first_dip = 0.0;
};

class Scanner {
public:
    Scanner(const Ray& g, double h, std::size_t& evals, std::size_t budget)
        : g_(g), h_(h), floor_(h * 1e-3), evals_(evals), budget_(budget)
    {
    }

    // Scans [t0, t1]; stops at the first point with objective <= 0.
    ScanOutcome run(double t0, double t1, bool stop_on_dip)
    {
        ScanOutcome out;
        double t = t0;
        double gt = eval(t);
        out.certified_to = t0;
        if (gt <= 0.0) {
            out.crossed = true;
            out.cross_at = t0;
            return out;
        }
        while (t < t1) {
            const double step = gt / g_.lip;
            double tn;
            double gn;
            if (step >= h_) {
                tn = std::min(t + step, t1);
                gn = eval(tn);
                if (gn <= 0.0) {
                    out.crossed = true;
                    out.cross_at = tn;
                    out.certified_to = tn;
                    return out;
                }
            } else {
                tn = std::min(t + h_, t1);
                gn = eval(tn);
                if (gn <= 0.0) {
                    out.crossed = true;
                    out.cross_at = tn;
                    if (!out.dip_seen) out.certified_to = t;
                    return out;
                }
                double cross = 0.0;
                const int r = cover(t, tn, gt, gn, cross, out);
                if (r == 1) {
                    out.crossed = true;
                    out.cross_at = cross;
                    return out;
                }
                if (r == 2 && stop_on_dip) return out;
            }
            t = tn;
            gt = gn;
            if (!out.dip_seen) out.certified_to = t;
        }
        return out;
    }

    // Shrinks a bracket [lo, hi] (objective certified positive below lo,
    // objective(hi) <= 0) by bisection until it is narrower than `width`.
    void refine(double& lo, double& hi, double width)
    {
        double glo = eval(lo);
        while (hi - lo > width) {
            const double mid = 0.5 * (lo + hi);
            const double gm = eval(mid);
            if (gm <= 0.0) {
                hi = mid;
                continue;
            }
            ScanOutcome tmp;
            double cross = 0.0;
            const int r = cover(lo, mid, glo, gm, cross, tmp);
            if (r == 0) {
                lo = mid;
                glo = gm;
            } else if (r == 1) {
                hi = cross;
                lo = tmp.dip_seen ? lo : tmp.certified_to;
                glo = eval(lo);
            } else {
                break;
            }
        }
    }

private:
    double eval(double t)
    {
        if (++evals_ > budget_)
            throw LcdBudgetError(fmt::format("essential LCD: evaluation budget of {} exceeded", budget_));
        return g_(t);
    }

    // 0: (a, b) certified; 1: crossing found at `cross`; 2: uncertified dip.
    int cover(double a, double b, double ga, double gb, double& cross, ScanOutcome& out)
    {
        if (ga + gb > g_.lip * (b - a)) return 0;
        if (b - a < floor_) {
            ++out.dips;
            if (!out.dip_seen) {
                out.dip_seen = true;
                out.first_dip = a;
                out.certified_to = a;
            }
            return 2;
        }
        const double m = 0.5 * (a + b);
        const double gm = eval(m);
        if (gm <= 0.0) {
            if (!out.dip_seen) out.certified_to = a;
            cross = m;
            return 1;
        }
        const int left = cover(a, m, ga, gm, cross, out);
        if (left == 1) return 1;
        const int right = cover(m, b, gm, gb, cross, out);
        if (right == 1) return 1;
        return std::max(left, right);
    }

    const Ray& g_;
    double h_, floor_;
    std::size_t& evals_;
    std::size_t budget_;
};

std::vector<RVec> direction_net(int m, int resolution, double& chord)
{
    std::vector<RVec> dirs;
    if (m == 1) {
        dirs.push_back(RVec::Ones(1));
        chord = 0.0;
        return dirs;
    }
    if (m == 2) {
        const int M = resolution > 0 ? resolution : 2048;
        for (int k = 0; k < M; ++k) {
            const double ang = (k + 0.5) * std::numbers::pi / M;
            RVec u(2);
            u << std::cos(ang), std::sin(ang);
            dirs.push_back(u);
        }
        // Antipodes are covered by symmetry of ||.||_Z; worst angle is pi/(2M).
        chord = 2.0 * std::sin(std::numbers::pi / (4.0 * M));
        return dirs;
    }
    // Cube faces x_k = +1 (the faces x_k = -1 are antipodes).  A point of a
    // face lies within (s/2) sqrt(m-1) of a grid centre, and the radial
    // projection of points outside the unit ball is 1-Lipschitz.
    const int g = resolution > 0 ? resolution : 16;
    const double s = 2.0 / g;
    chord = 0.5 * s * std::sqrt(double(m - 1));
    std::vector<int> idx(m - 1, 0);
    for (int face = 0; face < m; ++face) {
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            RVec x(m);
            for (int k = 0, c = 0; k < m; ++k) x[k] = (k == face) ? 1.0 : -1.0 + s * (idx[c++] + 0.5);
            dirs.push_back(x.normalized());
            int c = 0;
            while (c < m - 1 && ++idx[c] == g) idx[c++] = 0;
            if (c == m - 1) break;
        }
    }
    return dirs;
}

}  // namespace

double lcd_objective(const RMat& a, const RVec& theta, double alpha, double gamma, int ambient_count)
{
    const RVec x = a.transpose() * theta;
    const int N = ambient_count > 0 ? ambient_count : int(a.cols());
    return dist_to_int_lattice(x) - std::min(std::sqrt(alpha * N), gamma * x.norm());
}

LcdResult essential_lcd(const LcdQuery& q)
{
    const Eigen::Index m = q.a.rows(), n = q.a.cols();
    if (m < 1 || n < 1) throw std::invalid_argument("essential_lcd: empty input");
    if (!q.a.allFinite()) throw std::invalid_argument("essential_lcd: non-finite input");
    if (!(q.alpha > 0.0)) throw std::invalid_argument("essential_lcd: alpha must be positive");
    if (!(q.gamma > 0.0 && q.gamma < 1.0)) throw std::invalid_argument("essential_lcd: gamma must lie in (0,1)");
    if (!(q.K > 0.0) || !std::isfinite(q.K)) throw std::invalid_argument("essential_lcd: K must be finite and positive");
    if (q.K > 1e6) throw LcdBudgetError("essential_lcd: search bound K exceeds the 1e6 cap");
    const double anorm = q.a.norm();
    if (anorm < 1e-12) throw std::invalid_argument("essential_lcd: vector norm below 1e-12");

    const int N = q.ambient_count > 0 ? q.ambient_count : int(n);
    const double cap = std::sqrt(q.alpha * N);
    const Eigen::JacobiSVD<RMat> svd(q.a);
    const double op = svd.singularValues()[0];
    const double smin = svd.singularValues()[svd.singularValues().size() - 1];
    const double lip = (1.0 + q.gamma) * op;
    const double hmax = std::min(0.5, cap / (4.0 * lip));
    double h = q.h > 0.0 ? q.h : hmax;
    if (h > hmax * (1.0 + 1e-12))
        throw std::invalid_argument(fmt::format("essential_lcd: step h = {} exceeds min(0.5, sqrt(alpha N)/(4 Lip)) = {}", h, hmax));

    LcdResult res;
    res.mode = q.mode;
    res.lipschitz_bound = lip;

    if (smin <= 1e-12 * op) {
        // A nonzero theta with theta . a = 0 satisfies the inequality trivially.
        res.found = true;
        res.theta_lo = res.theta_hi = 0.0;
        res.lower_bound = 0.0;
        res.witness = svd.matrixU().col(m - 1);
        return res;
    }

    // Inside this ball every |<theta, a_i>| <= 1/2, so ||theta . a||_Z equals
    // ||theta . a||_2 and the inequality fails.
    double colmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) colmax = std::max(colmax, q.a.col(i).norm());
    const double t0 = std::min(0.5 / colmax, q.K);

    double chord = 0.0;
    const auto dirs = direction_net(int(m), q.net_resolution, chord);
    res.net_angle = chord;
    res.directions = dirs.size();
    const double slack = lip * chord;  // |f(t u) - f(t u')| <= Lip_op t |u - u'|

    // cert: objective certified positive on the open ball of this radius.
    double cert = q.K;
    double best_cross = std::numeric_limits<double>::infinity();
    RVec w(n);
    for (const auto& u : dirs) {
        w = q.a.transpose() * u;
        const Ray ray{w.data(), n, w.norm(), w.cwiseAbs().maxCoeff(), cap, q.gamma, 0.0, (1.0 + q.gamma) * w.norm()};
        const double stop = std::min(q.K, best_cross);
        if (m > 1 && cert > t0) {
            // The slackened objective covers the whole cone of directions around u.
            Ray infl = ray;
            infl.slack = slack;
            infl.lip = ray.lip + slack;
            Scanner sc(infl, h, res.evaluations, q.max_evaluations);
            const auto o = sc.run(t0, cert, true);
            if (o.crossed || o.dip_seen) cert = std::min(cert, o.certified_to);
        }
        if (stop <= t0) continue;
        // The bare objective along u looks for an actual witness.
        Scanner sc(ray, h, res.evaluations, q.max_evaluations);
        const auto o = sc.run(t0, stop, false);
        res.dips += o.dips;
        if (m == 1 && (o.crossed || o.dip_seen)) cert = std::min(cert, o.certified_to);
        if (o.crossed && o.cross_at < best_cross) {
            best_cross = o.cross_at;
            if (q.mode == LcdMode::find_infimum && !o.dip_seen) {
                double lo = o.certified_to, hi = o.cross_at;
                sc.refine(lo, hi, h * 1e-6);
                // Single direction: the refined lo supersedes the scan value.
                // Multi-D: only the witness moves; cert still comes from the
                // slackened cone scans.
                if (m == 1) cert = lo;
                best_cross = hi;
            }
            res.witness = best_cross * u;
        }
    }

    res.found = std::isfinite(best_cross);
    res.theta_lo = std::min(cert, best_cross);
    res.theta_hi = res.found ? best_cross : q.K;
    res.lower_bound = res.theta_lo;
    res.certified = !res.found && cert >= q.K;
    res.heuristic = m > 1 && !res.found && cert < q.K;
    return res;
}

nlohmann::json to_json(const LcdResult& r)
{
    nlohmann::json j;
    j["mode"] = r.mode == LcdMode::find_infimum ? "find_infimum" : "certify_lower_bound";
    j["found"] = r.found;
    j["theta_lo"] = r.theta_lo;
    j["theta_hi"] = r.theta_hi;
    j["certified"] = r.certified;
    j["heuristic"] = r.heuristic;
    j["lower_bound"] = r.lower_bound;
    j["lipschitz_bound"] = r.lipschitz_bound;
    j["net_angle"] = r.net_angle;
    j["directions"] = r.directions;
    j["evaluations"] = r.evaluations;
    if (r.witness.size()) j["witness"] = std::vector<double>(r.witness.data(), r.witness.data() + r.witness.size());
    return j;
}

double gamma_threshold(double kappa0, int d_size, int n)
{
    return kappa0 * std::sqrt(double(d_size) / (2.0 * n));
}

CompressibilityVerdict classify_compressibility(const RVec& v0, double delta, double rho)
{
    const double nv = v0.norm();
    if (!(nv > 0.0)) throw std::invalid_argument("classify_compressibility: zero vector");
    const RVec v = v0 / nv;
    const int n = int(v.size());
    std::vector<double> sq(n);
    for (int i = 0; i < n; ++i) sq[i] = v[i] * v[i];
    std::sort(sq.begin(), sq.end(), std::greater<double>());
    const int keep = int(std::floor(delta * n));
    double tail = 0.0;
    for (int i = n - 1; i >= keep; --i) tail += sq[i];  // smallest first
    CompressibilityVerdict c;
    c.delta = delta;
    c.rho = rho;
    c.tail_norm = std::sqrt(tail);
    c.verdict = c.tail_norm <= rho ? Compressibility::compressible : Compressibility::incompressible;
    c.band_low = 0.5 * rho / std::sqrt(double(n));
    c.band_high = 1.0 / std::sqrt(delta * n);
    for (int i = 0; i < n; ++i) {
        const double a = std::abs(v[i]);
        if (a >= c.band_low && a <= c.band_high) ++c.spread_count;
    }
    if (c.verdict == Compressibility::incompressible)
        c.spread_guarantee_holds = c.spread_count >= 0.5 * rho * rho * delta * n;
    return c;
}

double cosine(const RVec& x, const RVec& y)
{
    const double nx = x.norm(), ny = y.norm();
    if (!(nx > 0.0) || !(ny > 0.0)) throw std::invalid_argument("cosine: zero vector");
    return std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
}

RVec real_embedding(const CVec& v)
{
    const Eigen::Index n = v.size();
    RVec X(2 * n);
    X.head(n) = v.real();
    X.tail(n) = v.imag();
    return X;
}

RVec quarter_turn(const RVec& X)
{
    const Eigen::Index n = X.size() / 2;
    RVec Y(2 * n);
    Y.head(n) = -X.tail(n);
    Y.tail(n) = X.head(n);
    return Y;
}

double ang_overlap(const RVec& X, const RVec& Y, const std::vector<int>& D)
{
    if (X.size() != Y.size() || X.size() % 2) throw std::invalid_argument("ang_overlap: size mismatch");
    auto restrict = [&](const RVec& Z) {
        RVec r(D.size());
        for (std::size_t k = 0; k < D.size(); ++k) {
            if (D[k] < 0 || D[k] >= Z.size()) throw std::invalid_argument("ang_overlap: index out of range");
            r[k] = Z[D[k]];
        }
        return r;
    };
    const RVec x = restrict(X), xp = restrict(quarter_turn(X));
    const RVec y = restrict(Y), yp = restrict(quarter_turn(Y));
    if (x.norm() == 0.0 || y.norm() == 0.0) throw std::invalid_argument("ang_overlap: zero restriction");
    return std::max({std::abs(cosine(x, y)), std::abs(cosine(xp, y)), std::abs(cosine(x, yp)),
                     std::abs(cosine(xp, yp))});
}

double ang_overlap(const CVec& v, const CVec& w, const std::vector<int>& D)
{
    return ang_overlap(real_embedding(v), real_embedding(w), D);
}

}  // namespace rml
