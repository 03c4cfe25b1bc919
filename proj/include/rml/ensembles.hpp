#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rml/distributions.hpp"
#include "rml/rng.hpp"

namespace rml {

using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

enum class Family {
    iid_square,
    iid_rect,
    iid_complex,
    block_LA,
    block_curlyLA,
    zeroed_M,
    linearized_P,
    truncated_M_underline,
    complex_P_G,
    complex_M_G,
};

std::string family_name(Family f);
Family family_from_name(const std::string& s);

struct EnsembleSpec {
    Family family = Family::iid_square;
    int n = 1;
    int n_rows = 0;      // iid_rect only
    int anchor_size = 0; // zeroed_M: |D| with D = {1..|D|} already normalized
    double lambda1 = 0.0, lambda2 = 0.0, lambda_hat = 0.0;
    std::complex<double> z1{0.0, 0.0}, z2{0.0, 0.0}, z_hat{0.0, 0.0};
    AnyLaw law = EntryLaw::rademacher();

    int rows() const;
    int cols() const;
    bool is_complex() const;
    bool is_symmetric() const;
    // Throws std::invalid_argument for malformed specs.
    void validate() const;
    // Shifts beyond 4 sqrt(n) (8 sqrt(n) for complex) are allowed but flagged.
    bool shift_warning() const;
};

struct SeedPath {
    std::uint64_t master_seed = 0;
    std::uint64_t trial = 0;
};

struct MatrixSample {
    std::variant<RMat, CMat> data;
    EnsembleSpec spec;
    SeedPath seed_path;

    bool is_complex() const { return std::holds_alternative<CMat>(data); }
    const RMat& real() const { return std::get<RMat>(data); }
    const CMat& cplx() const { return std::get<CMat>(data); }
    int rows() const;
    int cols() const;
};

// Every family draws its underlying n x n matrix A (or G) row by row from the
// stream, so two specs that share (law, n) and a stream see the same A.
// Structural zeros are assigned, never produced by masking arithmetic.
MatrixSample sample(const EnsembleSpec& spec, Stream& stream, SeedPath path = {});

// Draws one n_rows x n_cols real matrix with the given law (row-major order).
RMat draw_real(const AnyLaw& law, int n_rows, int n_cols, Stream& s);
CMat draw_complex(const AnyLaw& law, int n_rows, int n_cols, Stream& s);

// Builders from an explicit A; these are what sample() uses.
RMat build_LA(const RMat& A);
RMat build_curlyLA(const RMat& A);
RMat build_P(const RMat& A, double lambda1, double lambda2, double lambda_hat);
RMat build_M_underline(const RMat& Aunder);
CMat build_P_G(const CMat& G, std::complex<double> z1, std::complex<double> z2,
               std::complex<double> lambda_hat);
CMat build_M_G(const CMat& Gunder);
// Positions (0-based row, col) of the free entries of the upper-right block B
// ((n-1) x n) of the zeroed matrix, in draw order.
std::vector<std::pair<int, int>> zeroed_free_positions(int n, int anchor_size);
// Places the free entries (in draw order) into the (2n-1) x (2n-1) layout.
RMat build_zeroed_M(int n, int anchor_size, const std::vector<double>& free_entries);

RMat shifted(const MatrixSample& s, double lambda);
CMat shifted(const MatrixSample& s, std::complex<double> lambda);
RMat shifted(const RMat& A, double lambda);
CMat shifted(const CMat& A, std::complex<double> lambda);

// Anchor set normalization: D = D1 u (D2 - n + 1) with 2n-1 removed from D2
// (1-based indices as in the definitions).  Returns D sorted together with a
// permutation perm of 1..n-1 such that perm[k] (1-based) is the original index
// placed at position k+1, so D is carried onto the initial segment {1..|D|}.
struct AnchorSet {
    std::vector<int> D;
    std::vector<int> perm;
};
AnchorSet normalize_anchor_set(int n, const std::vector<int>& D1, const std::vector<int>& D2);

nlohmann::json to_json(const EnsembleSpec& spec);
EnsembleSpec ensemble_spec_from_json(const nlohmann::json& j);

}  // namespace rml
