#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rml/arithmetic.hpp"
#include "rml/ensembles.hpp"

namespace rml {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Exact binomial (Clopper-Pearson) interval for k successes in n trials.
Interval clopper_pearson(std::size_t k, std::size_t n, double confidence = 0.99);

enum class Method { monte_carlo, exact_enumeration };
enum class CenterPolicy { fixed_zero, empirical_mode_search };

std::string method_name(Method m);
std::string center_policy_name(CenterPolicy c);

struct ConcentrationEstimate {
    double epsilon = 0.0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    std::size_t k_hits = 0;
    std::size_t trials = 0;
    Method method = Method::monte_carlo;
    CenterPolicy center_policy = CenterPolicy::fixed_zero;
};

ConcentrationEstimate monte_carlo_estimate(std::size_t k, std::size_t trials, double epsilon,
                                           double confidence = 0.99,
                                           CenterPolicy policy = CenterPolicy::fixed_zero);
ConcentrationEstimate exact_estimate(double p, double epsilon, CenterPolicy policy = CenterPolicy::fixed_zero);

// Loglog OLS over rows whose CI width is below `width_ratio` * p_hat.
struct FitResult {
    double slope = 0.0;
    double stderr_ = 0.0;
    double constant = 0.0;
    std::size_t qualified = 0;
    bool inconclusive = true;
};
bool ci_qualified(const ConcentrationEstimate& e, double width_ratio = 0.3);
FitResult fit_loglog(const std::vector<ConcentrationEstimate>& rows, double width_ratio = 0.3);

// Levy concentration on a pool of samples (columns of `samples`, d x T),
// evaluated at every radius of an increasing grid from one pool.
// fixed_zero counts ||S|| <= eps.  empirical_mode_search takes the best of the
// candidate centres: in 1-D every sample point (sliding window, the exact
// mode of the empirical measure); in d-D the origin and the first
// `max_centers` samples.  The maximum over centres is biased upward.
std::vector<ConcentrationEstimate> levy_from_samples(const RMat& samples, const std::vector<double>& eps_grid,
                                                     CenterPolicy policy, double confidence = 0.99,
                                                     std::size_t max_centers = 512);

using VectorSampler = std::function<RVec(Stream&)>;

// Draws `trials` vectors (trial i uses stream.split(i)) and estimates
// sup_w P(||S - w|| <= eps).
ConcentrationEstimate levy_estimate(const VectorSampler& sampler, double epsilon, std::size_t trials,
                                    CenterPolicy policy, const Stream& stream, int workers = 1);
std::vector<ConcentrationEstimate> levy_estimate_grid(const VectorSampler& sampler,
                                                      const std::vector<double>& eps_grid, std::size_t trials,
                                                      CenterPolicy policy, const Stream& stream, int workers = 1);

struct WeightedPoint {
    double value;
    double prob;
};
// Exact 1-D Levy function of a finitely supported law: the heaviest closed
// window of length 2 eps.
double levy_exact_1d(std::vector<WeightedPoint> atoms, double epsilon);
// Exact law of <X, a> for X with i.i.d. entries from a discrete law
// (2^n-style enumeration; n <= 24 support points per coordinate product).
std::vector<WeightedPoint> exact_linear_form(const EntryLaw& law, const RVec& a);

// Entries actually read by the family (the exact-enumeration budget counts these).
std::size_t free_entry_count(const EnsembleSpec& spec);
// Builds a real family's matrix from its free entries in draw order.
RMat build_from_entries(const EnsembleSpec& spec, const std::vector<double>& entries);

struct SmallBallOptions {
    std::size_t trials = 10000;
    bool exact = false;
    std::size_t max_exact_entries = 24;
    int workers = 1;
    double confidence = 0.99;
};

// P(||M v|| <= t sqrt(n)), n = spec.n.
ConcentrationEstimate small_ball_matrix(const EnsembleSpec& spec, const RVec& v, double t,
                                        const SmallBallOptions& opt, const Stream& stream);

// Law of ||M v|| / sqrt(n) as weighted points (exact) or equal-weight samples.
std::vector<WeightedPoint> small_ball_radii(const EnsembleSpec& spec, const RVec& v, const SmallBallOptions& opt,
                                            const Stream& stream, Method& method);

struct ThresholdEstimate {
    double L = 0.0;
    int exponent = 0;
    double t_hat = 0.0;
    double bracket_low = 0.0;
    double bracket_high = 0.0;
    // From the CI ends of the probability curve (monte carlo only).
    double t_pessimistic = 0.0;
    double t_optimistic = 0.0;
    bool inconclusive = false;
    Method method = Method::monte_carlo;
    std::size_t trials = 0;
};

// sup{t in [0,1] : P(||M v|| <= t sqrt(n)) >= (4 L t)^exponent}.
ThresholdEstimate threshold_tau(const EnsembleSpec& spec, const RVec& v, double L, int exponent,
                                const SmallBallOptions& opt, const Stream& stream);
// Same, from a given law of the radius.
ThresholdEstimate threshold_from_radii(std::vector<WeightedPoint> radii, double L, int exponent, Method method,
                                       std::size_t trials, double confidence = 0.99);

struct LoTable {
    std::vector<ConcentrationEstimate> rows;        // the Levy estimates used for the fit
    std::vector<ConcentrationEstimate> zero_center; // P(||S|| <= radius) on the same pool
    FitResult fit;
    double max_ratio = 0.0;  // max over rows of p_hat / eps^power (times omega^k when relevant)
    std::string note;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LoOptions {
    std::size_t trials = 100000;
    int workers = 1;
    double confidence = 0.99;
    std::size_t max_centers = 512;
    double c_margin = 10.0;
    CenterPolicy policy = CenterPolicy::empirical_mode_search;
};

// P(|<X, v>| <= eps) over the grid.  `lcd` must certify D(v) >= c_margin / min(eps).
LoTable lo_bound_check_1d(const RVec& v, const LcdResult& lcd, const EntryLaw& law, const std::vector<double>& eps_grid,
                          const LoOptions& opt, const Stream& stream);
// L(S, eps sqrt 2) for S = sum X_k (c_k, d_k).  `lcd` is the certificate for the
// 2 x n pair and must reach sqrt(2) / min(eps).
LoTable lo_bound_check_2d(const RVec& c, const RVec& d, const LcdResult& lcd, const EntryLaw& law,
                          const std::vector<double>& eps_grid, const LoOptions& opt, const Stream& stream);
// L(S, 2 eps) for S = sum X_k (c_k, c'_k, d_k, d'_k); certificate must reach 2 / min(eps).
LoTable lo_bound_check_4d(const RVec& c, const RVec& cp, const RVec& d, const RVec& dp, const LcdResult& lcd,
                          const EntryLaw& law, const std::vector<double>& eps_grid, const LoOptions& opt,
                          const Stream& stream);

enum class NonnegLaw { uniform01, abs_gaussian };

struct TensorizationRow {
    ConcentrationEstimate estimate;
    double bound_unit_c = 0.0;  // (K eps)^n
    double c_needed = 0.0;      // smallest C with p_hat <= (C K eps)^n
};

struct TensorizationReport {
    double K = 0.0;
    std::vector<TensorizationRow> rows;
    double c_calibrated = 0.0;  // max over rows of c_needed
};

// Marginal constant K with P(xi <= eps) <= K eps.
double marginal_constant(NonnegLaw law);
TensorizationReport tensorization_check(NonnegLaw law, const std::vector<double>& eps_grid, int n,
                                        std::size_t trials, const Stream& stream, int workers = 1);

}  // namespace rml
