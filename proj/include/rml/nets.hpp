#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rml/anticoncentration.hpp"
#include "rml/ensembles.hpp"

namespace rml {

struct IntRange {
    std::int64_t lo;
    std::int64_t hi;  // inclusive
};

using IntSet = std::vector<IntRange>;

// J = [-kappa N, -N] u [N, kappa N].
IntSet anchored_set(std::int64_t boxN, double kappa);
// I_0 = [-N, N]; I_l = [-2^l N, 2^l N] minus [-2^(l-1) N, 2^(l-1) N].
IntSet shell_set(std::int64_t boxN, int level);
std::uint64_t set_size(const IntSet& s);

// Integer product box.  Anchored coordinates use J; the others use the shell
// given in `levels` (level 0, the symmetric interval [-N, N], by default).
struct BoxSpec {
    int dim = 0;
    std::int64_t boxN = 2;
    double kappa = 2.0;
    std::vector<int> anchored;  // 0-based, D1 u D2
    std::vector<int> levels;    // empty or dim entries; ignored on anchored coordinates
    std::vector<IntSet> custom; // when non-empty, overrides the construction

    std::vector<IntSet> sets() const;
    void validate() const;
    // Conditions of the box definition that this instance does not meet.
    std::vector<std::string> definition_gaps() const;
    double log_cardinality() const;
    // Exact product, saturating at UINT64_MAX.
    std::uint64_t cardinality() const;

    static BoxSpec anchored_box(int dim, std::int64_t boxN, double kappa);
};

nlohmann::json to_json(const BoxSpec& b);
BoxSpec box_spec_from_json(const nlohmann::json& j);

struct BoxSample {
    std::vector<std::int64_t> x;
    SeedPath seed_path;
    RVec as_vector() const;
};

BoxSample sample_box(const BoxSpec& spec, Stream& stream, SeedPath path = {});

struct BoxLcdOptions {
    double r = 0.0;  // scale applied to X; 0 means 1 / (sqrt(d) boxN)
    double gamma = 0.5;
    int workers = 1;
    double confidence = 0.99;
    std::size_t max_evaluations = 200'000'000;
};

struct BoxLcdResult {
    int d = 0;
    std::int64_t boxN = 0;
    double kappa = 0.0;
    double alpha = 0.0;
    double K = 0.0;
    double r = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;
    Interval ci;
    double bound = 0.0;  // (2^20 alpha)^(d/4)
    bool bound_vacuous = false;
    bool within_bound = false;  // failure rate <= max(bound, CI upper at 0 hits)
};

// Fraction of X uniform on J^d for which D_{alpha,1/2}(r X) >= K is not certified.
BoxLcdResult box_lcd_experiment(int d, std::int64_t boxN, double kappa, double alpha, double K, std::size_t trials,
                                const Stream& stream, const BoxLcdOptions& opt = {});
std::string box_lcd_csv_header();
std::string box_lcd_csv_row(const BoxLcdResult& r);

// A pair of boxes over the same index range: X from `first` (scale boxN),
// Y from `second` (scale boxN1 = second.boxN).
struct BoxPair {
    BoxSpec first;
    BoxSpec second;
};

struct OverlapSummary {
    std::size_t trials = 0;
    double T = 0.0;          // max ||X|| / (sqrt(D) N) and ||Y|| / (sqrt(D) N1) over the boxes
    double threshold = 0.0;  // 32 kappa^2 T^2 / D
    double fraction_below = 0.0;
    double mean_abs_cos = 0.0;
    double q50 = 0.0, q90 = 0.0, q99 = 0.0;
    double mean_cos = 0.0;  // signed, for the independence check
    double mean_cos_stderr = 0.0;
};

// |cos(X, Y)| on coordinates 2..D (1-based).
OverlapSummary overlap_of_box_pair(const BoxPair& pair, std::size_t trials, const Stream& stream, int workers = 1);

struct CoveringFamily {
    int n = 0;
    int free_coordinates = 0;
    double budget = 0.0;  // 16 n / kappa0^2
    double boxN = 0.0;    // kappa0 / (4 eps)
    std::uint64_t size = 0;
    double bound = 0.0;   // kappa^(2n)
    bool within_bound = false;
};

// Counts the shell-level sequences (l_j) over the coordinates of [2n-1]
// outside D1 u D2 with sum over l_j > 0 of 4^l_j <= 16 n / kappa0^2.
// D1, D2 are 1-based as in the box definition.
CoveringFamily enumerate_covering_family(int n, double epsilon, double kappa0, double kappa,
                                         const std::vector<int>& D1, const std::vector<int>& D2);

}  // namespace rml
