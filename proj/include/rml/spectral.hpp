#pragma once

#include <string>
#include <vector>

#include "rml/ensembles.hpp"
#include "rml/jacobi_svd.hpp"

namespace rml {

// Descending singular values by one-sided Jacobi.  Tiny sigma_min values are
// the accuracy-critical quantity for every experiment that calls this.
RVec svd_values(const RMat& M);
RVec svd_values(const CMat& M);

struct GapInfo {
    int k_star = 0;  // 1-based: the gap is sigma_k* - sigma_{k*+1}
    double gap = 0.0;
    double scaled_gap = 0.0;  // sqrt(n) * gap
};

// Smallest consecutive difference of descending values; ties go to the
// smallest index.  scale_n defaults to the number of values.
GapInfo min_gap(const RVec& values, int scale_n = -1);

double sigma_min(const RMat& M);
double sigma_min(const CMat& M);
double sigma_min_shifted(const RMat& A, double lambda);
double sigma_min_shifted(const CMat& A, std::complex<double> lambda);

// Number of eigenvalues with |Im| <= rel_tol * sqrt(n), from the real Schur form.
int real_eigen_count(const RMat& A, double rel_tol = 1e-9);
// Same, for several tolerances off one decomposition.
std::vector<int> real_eigen_counts(const RMat& A, const std::vector<double>& rel_tols);
// The real eigenvalues (same tolerance rule), ascending.
std::vector<double> real_eigenvalues(const RMat& A, double rel_tol = 1e-9);

// Unit normal to the span of the columns of A - lambda I other than column j
// (0-based).  Largest-magnitude coordinate made positive.  Throws when the
// remaining n-1 columns are rank deficient.
RVec normal_vector(const RMat& A, double lambda, int j);
double dist_col_to_span(const RMat& A, double lambda, int j);

struct Overlap {
    double alpha = 0.0;
    double beta = 0.0;
};
Overlap overlap_beta(const RMat& A, double lambda1, double lambda2, int j);

// Worst signed violation of lambda_{k+1}(M) <= lambda_k(M^[j]) <= lambda_k(M)
// over k (negative means strict interlacing with that much room).
double interlacing_check(const RMat& Msym, int j);

// Largest value of |<v, X^(j)>| |u_j| - |lambda - lambda'| over all eigenpairs
// (lambda, u) of M and (lambda', v) of M^[j]; nonpositive when the bound holds.
double eigvec_minor_bound_check(const RMat& Msym, int j);

// Largest | ||v1|| - ||v2|| | over unit eigenvectors of the block matrix
// [[0, B], [B^T, 0]] (B is p x q) with |eigenvalue| > eig_floor.
double block_component_norm_check(const RMat& B, double eig_floor = 1e-8);

// Largest relative mismatch between the nonnegative eigenvalues of L_A and
// the singular values of A (A square).
double block_singular_value_check(const RMat& A);

struct DelocalizationProfile {
    RVec w;                     // unit least right singular vector of A - lambda I
    std::vector<double> thetas;
    std::vector<int> counts;    // #{i : |w_i| >= theta n^{-1/2}}
};

DelocalizationProfile delocalization_profile(const RMat& A, double lambda, const std::vector<double>& thetas);
RVec least_singular_vector(const RMat& A, double lambda);
int count_above(const RVec& w, double theta);
// #{i : theta n^{-1/2} <= |w1_i|, |w2_i| <= Theta n^{-1/2}}
int joint_band_count(const RVec& w1, const RVec& w2, double theta, double Theta);

struct SpectralSummary {
    int n_rows = 0, n_cols = 0;
    RVec singular_values;
    double min_gap_scaled = 0.0;
    double sigma_min = 0.0;
    int real_eig_count = -1;  // -1 when not applicable
    double op_norm = 0.0;
};

SpectralSummary summarize(const RMat& A, bool with_eigen_count = true);
std::string spectral_csv_header();
std::string spectral_csv_row(const SpectralSummary& s);

// Index of the first of the ascending thresholds that sigma_min(M) does not
// exceed (thresholds.size() when sigma_min is above all of them).  Decided by
// whether the Cholesky factorization of M*M - tau^2 I exists, with bisection
// over the thresholds.  Cheaper than an SVD when only the bin is needed; the
// decision is exact up to the O(eps ||M||^2) rounding of the Gram matrix.
std::size_t sigma_min_bin(const RMat& M, const std::vector<double>& thresholds);
std::size_t sigma_min_bin(const CMat& M, const std::vector<double>& thresholds);

}  // namespace rml
