#include "rml/nets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "rml/arithmetic.hpp"
#include "rml/parallel.hpp"

namespace rml {

IntSet anchored_set(std::int64_t boxN, double kappa)
{
    const auto top = std::int64_t(std::floor(kappa * double(boxN)));
    return {{-top, -boxN}, {boxN, top}};
}

IntSet shell_set(std::int64_t boxN, int level)
{
    if (level < 0) throw std::invalid_argument("shell level must be nonnegative");
    if (level == 0) return {{-boxN, boxN}};
    const std::int64_t outer = boxN << level, inner = boxN << (level - 1);
    return {{-outer, -inner - 1}, {inner + 1, outer}};
}

std::uint64_t set_size(const IntSet& s)
{
    std::uint64_t n = 0;
    for (const auto& r : s)
        if (r.hi >= r.lo) n += std::uint64_t(r.hi - r.lo) + 1;
    return n;
}

std::vector<IntSet> BoxSpec::sets() const
{
    if (!custom.empty()) return custom;
    std::vector<IntSet> out(static_cast<std::size_t>(dim));
    std::vector<char> anch(static_cast<std::size_t>(dim), 0);
    for (int i : anchored) anch.at(std::size_t(i)) = 1;
    for (int i = 0; i < dim; ++i)
        out[std::size_t(i)] = anch[std::size_t(i)] ? anchored_set(boxN, kappa)
                                                   : shell_set(boxN, levels.empty() ? 0 : levels[std::size_t(i)]);
    return out;
}

void BoxSpec::validate() const
{
    if (dim < 1) throw std::invalid_argument("box: dim must be positive");
    if (boxN < 2) throw std::invalid_argument("box: boxN must be at least 2");
    if (kappa < 2.0) throw std::invalid_argument("box: kappa must be at least 2");
    if (!levels.empty() && int(levels.size()) != dim) throw std::invalid_argument("box: levels size != dim");
    for (int i : anchored)
        if (i < 0 || i >= dim) throw std::invalid_argument("box: anchored index out of range");
    if (!custom.empty() && int(custom.size()) != dim) throw std::invalid_argument("box: custom size != dim");
    for (const auto& s : sets())
        if (set_size(s) == 0) throw std::invalid_argument("box: empty coordinate set");
}

std::vector<std::string> BoxSpec::definition_gaps() const
{
    std::vector<std::string> gaps;
    const auto ss = sets();
    for (std::size_t i = 0; i < ss.size(); ++i)
        if (set_size(ss[i]) < std::uint64_t(boxN)) gaps.push_back(fmt::format("|B_{}| < boxN", i + 1));
    if (log_cardinality() > double(dim) * std::log(kappa * double(boxN)) + 1e-12)
        gaps.push_back("|B| exceeds (kappa boxN)^dim");
    return gaps;
}

double BoxSpec::log_cardinality() const
{
    double l = 0.0;
    for (const auto& s : sets()) l += std::log(double(set_size(s)));
    return l;
}

std::uint64_t BoxSpec::cardinality() const
{
    std::uint64_t c = 1;
    for (const auto& s : sets()) {
        const std::uint64_t k = set_size(s);
        if (k != 0 && c > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
        c *= k;
    }
    return c;
}

BoxSpec BoxSpec::anchored_box(int dim, std::int64_t boxN, double kappa)
{
    BoxSpec b;
    b.dim = dim;
    b.boxN = boxN;
    b.kappa = kappa;
    for (int i = 0; i < dim; ++i) b.anchored.push_back(i);
    b.validate();
    return b;
}

nlohmann::json to_json(const BoxSpec& b)
{
    nlohmann::json j;
    j["dim"] = b.dim;
    j["boxN"] = b.boxN;
    j["kappa"] = b.kappa;
    j["anchored"] = b.anchored;
    if (!b.levels.empty()) j["levels"] = b.levels;
    if (!b.custom.empty()) {
        auto& c = j["custom"] = nlohmann::json::array();
        for (const auto& s : b.custom) {
            auto row = nlohmann::json::array();
            for (const auto& r : s) row.push_back({r.lo, r.hi});
            c.push_back(row);
        }
    }
    return j;
}

BoxSpec box_spec_from_json(const nlohmann::json& j)
{
    BoxSpec b;
    b.dim = j.at("dim").get<int>();
    b.boxN = j.at("boxN").get<std::int64_t>();
    b.kappa = j.value("kappa", 2.0);
    b.anchored = j.value("anchored", std::vector<int>{});
    b.levels = j.value("levels", std::vector<int>{});
    if (j.contains("custom"))
        for (const auto& row : j.at("custom")) {
            IntSet s;
            for (const auto& r : row) s.push_back({r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>()});
            b.custom.push_back(s);
        }
    b.validate();
    return b;
}

RVec BoxSample::as_vector() const
{
    RVec v(Eigen::Index(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v(Eigen::Index(i)) = double(x[i]);
    return v;
}

namespace {

std::int64_t pick(const IntSet& s, std::uint64_t k)
{
    for (const auto& r : s) {
        const std::uint64_t len = r.hi >= r.lo ? std::uint64_t(r.hi - r.lo) + 1 : 0;
        if (k < len) return r.lo + std::int64_t(k);
        k -= len;
    }
    throw std::logic_error("box: index past the end of a coordinate set");
}

std::vector<std::int64_t> draw(const std::vector<IntSet>& sets, Stream& s)
{
    std::vector<std::int64_t> x(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) x[i] = pick(sets[i], s.below(set_size(sets[i])));
    return x;
}

}  // namespace

BoxSample sample_box(const BoxSpec& spec, Stream& stream, SeedPath path)
{
    spec.validate();
    return {draw(spec.sets(), stream), path};
}

BoxLcdResult box_lcd_experiment(int d, std::int64_t boxN, double kappa, double alpha, double K, std::size_t trials,
                                const Stream& stream, const BoxLcdOptions& opt)
{
    if (d < 1 || d > 62) throw PreconditionError("box lcd: d must lie in [1, 62]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("box lcd: alpha must lie in (0, 1)");
    if (!(K >= 1.0)) throw PreconditionError("box lcd: K must be at least 1");
    if (!(K * double(boxN) < std::ldexp(1.0, d)))
        throw PreconditionError("box lcd: hypothesis K boxN < 2^d fails");
    if (!(double(d) >= K * K * alpha)) throw PreconditionError("box lcd: hypothesis d >= K^2 alpha fails");
    if (trials == 0) throw std::invalid_argument("box lcd: trial budget is 0");
    const BoxSpec box = BoxSpec::anchored_box(d, boxN, kappa);
    const auto sets = box.sets();
    const double r = opt.r > 0.0 ? opt.r : 1.0 / (std::sqrt(double(d)) * double(boxN));

    auto fail = run_trials<char>(trials, opt.workers, [&](std::size_t i) -> char {
        Stream s = stream.split(i);
        const auto x = draw(sets, s);
        LcdQuery q;
        q.a.resize(1, d);
        for (int k = 0; k < d; ++k) q.a(0, k) = r * double(x[std::size_t(k)]);
        q.alpha = alpha;
        q.gamma = opt.gamma;
        q.K = K;
        q.mode = LcdMode::certify_lower_bound;
        q.max_evaluations = opt.max_evaluations;
        return essential_lcd(q).certified ? 0 : 1;
    });

    BoxLcdResult out;
    out.d = d;
    out.boxN = boxN;
    out.kappa = kappa;
    out.alpha = alpha;
    out.K = K;
    out.r = r;
    out.trials = trials;
    for (char f : fail) out.failures += std::size_t(f);
    out.ci = clopper_pearson(out.failures, trials, opt.confidence);
    out.bound = std::pow(std::ldexp(alpha, 20), double(d) / 4.0);
    out.bound_vacuous = out.bound >= 1.0;
    const double zero_hit_upper = clopper_pearson(0, trials, opt.confidence).hi;
    out.within_bound = double(out.failures) / double(trials) <= std::max(out.bound, zero_hit_upper);
    return out;
}

std::string box_lcd_csv_header()
{
    return "d,boxN,kappa,alpha,K,trials,failures,bound";
}

std::string box_lcd_csv_row(const BoxLcdResult& r)
{
    return fmt::format("{},{},{:.17g},{:.17g},{:.17g},{},{},{:.17g}", r.d, r.boxN, r.kappa, r.alpha, r.K, r.trials,
                       r.failures, r.bound);
}

namespace {

double max_norm(const std::vector<IntSet>& sets)
{
    double s = 0.0;
    for (const auto& set : sets) {
        double m = 0.0;
        for (const auto& r : set) m = std::max({m, std::abs(double(r.lo)), std::abs(double(r.hi))});
        s += m * m;
    }
    return std::sqrt(s);
}

}  // namespace

OverlapSummary overlap_of_box_pair(const BoxPair& pair, std::size_t trials, const Stream& stream, int workers)
{
    pair.first.validate();
    pair.second.validate();
    const int D = pair.first.dim;
    if (pair.second.dim != D) throw std::invalid_argument("box pair: dimensions differ");
    if (D < 2) throw std::invalid_argument("box pair: need D >= 2");
    if (trials == 0) throw std::invalid_argument("box pair: trial budget is 0");
    const auto s1 = pair.first.sets(), s2 = pair.second.sets();
    const double rootD = std::sqrt(double(D));

    OverlapSummary out;
    out.trials = trials;
    out.T = std::max(max_norm(s1) / (rootD * double(pair.first.boxN)),
                     max_norm(s2) / (rootD * double(pair.second.boxN)));
    const double kappa = std::max(pair.first.kappa, pair.second.kappa);
    out.threshold = 32.0 * kappa * kappa * out.T * out.T / double(D);

    auto cs = run_trials<double>(trials, workers, [&](std::size_t i) {
        Stream s = stream.split(i);
        const auto x = draw(s1, s);
        const auto y = draw(s2, s);
        double xy = 0.0, xx = 0.0, yy = 0.0;
        for (int k = 1; k < D; ++k) {
            const double a = double(x[std::size_t(k)]), b = double(y[std::size_t(k)]);
            xy += a * b;
            xx += a * a;
            yy += b * b;
        }
        return (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
    });
    std::size_t below = 0;
    double sum = 0.0, sum2 = 0.0, sabs = 0.0;
    std::vector<double> a(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        a[i] = std::abs(cs[i]);
        below += a[i] < out.threshold;
        sum += cs[i];
        sum2 += cs[i] * cs[i];
        sabs += a[i];
    }
    const double m = double(trials);
    out.fraction_below = double(below) / m;
    out.mean_abs_cos = sabs / m;
    out.mean_cos = sum / m;
    out.mean_cos_stderr = trials > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0)) / m) : 0.0;
    std::sort(a.begin(), a.end());
    auto q = [&](double p) { return a[std::min(a.size() - 1, std::size_t(p * double(a.size())))]; };
    out.q50 = q(0.5);
    out.q90 = q(0.9);
    out.q99 = q(0.99);
    return out;
}

CoveringFamily enumerate_covering_family(int n, double epsilon, double kappa0, double kappa,
                                         const std::vector<int>& D1, const std::vector<int>& D2)
{
    if (n < 1 || n > 6) throw std::invalid_argument("covering family: n must lie in [1, 6]");
    if (!(epsilon > 0.0) || !(kappa0 > 0.0) || !(kappa >= 2.0))
        throw std::invalid_argument("covering family: need eps > 0, kappa0 > 0, kappa >= 2");
    std::set<int> anchored;
    for (int i : D1) {
        if (i < 1 || i > n - 1) throw std::invalid_argument("covering family: D1 must lie in [1, n-1]");
        anchored.insert(i);
    }
    for (int i : D2) {
        if (i < n || i > 2 * n - 1) throw std::invalid_argument("covering family: D2 must lie in [n, 2n-1]");
        anchored.insert(i);
    }
    CoveringFamily out;
    out.n = n;
    out.free_coordinates = 2 * n - 1 - int(anchored.size());
    out.budget = 16.0 * double(n) / (kappa0 * kappa0);
    out.boxN = kappa0 / (4.0 * epsilon);
    out.bound = std::pow(kappa, 2.0 * n);
    if (out.budget > 1e7) throw std::length_error("covering family: budget too large to enumerate");
    // ways[r] = number of sequences over the coordinates seen so far with total cost exactly r.
    const auto cap = std::size_t(std::floor(out.budget));
    std::vector<std::uint64_t> ways(cap + 1, 0), next(cap + 1);
    ways[0] = 1;
    for (int k = 0; k < out.free_coordinates; ++k) {
        next = ways;
        for (std::size_t cost = 4; cost <= cap; cost *= 4)
            for (std::size_t r = cost; r <= cap; ++r) next[r] += ways[r - cost];
        ways.swap(next);
    }
    for (auto w : ways) out.size += w;
    out.within_bound = double(out.size) <= out.bound;
    return out;
}

}  // namespace rml
