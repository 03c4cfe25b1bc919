#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rml/ensembles.hpp"

namespace rml {

// l2 distance from w to the integer lattice.
double dist_to_int_lattice(const RVec& w);

enum class LcdMode { find_infimum, certify_lower_bound };

struct LcdQuery {
    RMat a;                 // m x n, m in {1, 2, 4} (any m >= 1 is accepted)
    double alpha = 0.01;
    double gamma = 0.5;
    double K = 100.0;       // search bound on theta (1-D) or ||theta|| (multi-D)
    double h = 0.0;         // minimum scan step; 0 picks min(0.5, sqrt(alpha N) / (4 Lip))
    LcdMode mode = LcdMode::certify_lower_bound;
    int ambient_count = -1; // N in sqrt(alpha N); -1 means the vector length n
    int net_resolution = 0; // m = 2: number of angles; m >= 3: grid points per cube-face edge
    std::size_t max_evaluations = 200'000'000;
};

struct LcdResult {
    LcdMode mode = LcdMode::certify_lower_bound;
    // A point with f(theta) <= 0 was found at norm theta_hi.
    bool found = false;
    // f > 0 is certified on the open ball of radius theta_lo (theta_lo = K and
    // certified = true when the whole range was covered).
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    bool certified = false;
    // Multi-D only: the direction-net slack was not covered somewhere, so the
    // claim for the scanned range rests on the net directions alone.
    bool heuristic = false;
    double lower_bound = 0.0;
    double lipschitz_bound = 0.0;
    double net_angle = 0.0;  // chord covering radius of the direction net
    std::size_t directions = 0;
    std::size_t evaluations = 0;
    std::size_t dips = 0;    // sub-intervals left uncertified at the bisection floor
    RVec witness;            // theta with f(theta) <= 0 when found
};

class LcdBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// f(theta) = ||theta . a||_Z - min(sqrt(alpha N), gamma ||theta . a||_2).
double lcd_objective(const RMat& a, const RVec& theta, double alpha, double gamma, int ambient_count = -1);

LcdResult essential_lcd(const LcdQuery& q);

nlohmann::json to_json(const LcdResult& r);

// kappa0 sqrt(|D| / (2n)), the threshold that gamma must stay below.
double gamma_threshold(double kappa0, int d_size, int n);

enum class Compressibility { compressible, incompressible };

struct CompressibilityVerdict {
    double delta = 0.0;
    double rho = 0.0;
    double tail_norm = 0.0;
    Compressibility verdict = Compressibility::compressible;
    int spread_count = 0;
    double band_low = 0.0;
    double band_high = 0.0;
    // For incompressible verdicts: spread_count >= rho^2 delta n / 2.
    bool spread_guarantee_holds = true;
};

CompressibilityVerdict classify_compressibility(const RVec& v, double delta, double rho);

double cosine(const RVec& x, const RVec& y);

// (Re v, Im v).
RVec real_embedding(const CVec& v);
// X' = (-X[n..2n), X[0..n)), the embedding of i v when X is the embedding of v.
RVec quarter_turn(const RVec& X);
// Max of the four |cos| between the D-restrictions (0-based indices into [0, 2n)).
double ang_overlap(const CVec& v, const CVec& w, const std::vector<int>& D);
double ang_overlap(const RVec& X, const RVec& Y, const std::vector<int>& D);

}  // namespace rml
