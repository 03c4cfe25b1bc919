#include "rml/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace rml {

RVec svd_values(const RMat& M) { return jacobi_svd<double>(M).sigma; }
RVec svd_values(const CMat& M) { return jacobi_svd<std::complex<double>>(M).sigma; }

GapInfo min_gap(const RVec& values, int scale_n)
{
    if (values.size() < 2) throw std::invalid_argument("min_gap: need at least two values");
    GapInfo g;
    g.gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k + 1 < values.size(); ++k) {
        const double d = values[k] - values[k + 1];
        if (d < g.gap) {
            g.gap = d;
            g.k_star = int(k) + 1;
        }
    }
    const int n = scale_n > 0 ? scale_n : int(values.size());
    g.scaled_gap = std::sqrt(double(n)) * g.gap;
    return g;
}

double sigma_min(const RMat& M)
{
    const RVec s = svd_values(M);
    return s.size() ? s[s.size() - 1] : 0.0;
}

double sigma_min(const CMat& M)
{
    const RVec s = svd_values(M);
    return s.size() ? s[s.size() - 1] : 0.0;
}

double sigma_min_shifted(const RMat& A, double lambda) { return sigma_min(shifted(A, lambda)); }
double sigma_min_shifted(const CMat& A, std::complex<double> lambda) { return sigma_min(shifted(A, lambda)); }

std::vector<int> real_eigen_counts(const RMat& A, const std::vector<double>& rel_tols)
{
    if (A.rows() != A.cols()) throw std::invalid_argument("real_eigen_count: matrix is not square");
    Eigen::EigenSolver<RMat> es(A, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("real_eigen_count: Schur iteration failed");
    const auto& ev = es.eigenvalues();
    const double scale = std::sqrt(double(A.rows()));
    std::vector<int> out;
    for (double tol : rel_tols) {
        int c = 0;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (std::abs(ev[i].imag()) <= tol * scale) ++c;
        out.push_back(c);
    }
    return out;
}

int real_eigen_count(const RMat& A, double rel_tol) { return real_eigen_counts(A, {rel_tol})[0]; }

std::vector<double> real_eigenvalues(const RMat& A, double rel_tol)
{
    if (A.rows() != A.cols()) throw std::invalid_argument("real_eigenvalues: matrix is not square");
    Eigen::EigenSolver<RMat> es(A, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("real_eigenvalues: Schur iteration failed");
    const auto& ev = es.eigenvalues();
    const double cut = rel_tol * std::sqrt(double(A.rows()));
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i].imag()) <= cut) out.push_back(ev[i].real());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

RMat columns_except(const RMat& X, int j)
{
    const int n = int(X.cols());
    RMat H(X.rows(), n - 1);
    for (int k = 0, c = 0; k < n; ++k)
        if (k != j) H.col(c++) = X.col(k);
    return H;
}

void fix_sign(RVec& v)
{
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
}

}  // namespace

RVec normal_vector(const RMat& A, double lambda, int j)
{
    const RMat X = shifted(A, lambda);
    const int n = int(X.rows());
    if (j < 0 || j >= n) throw std::invalid_argument("normal_vector: column index out of range");
    if (n == 1) return RVec::Ones(1);
    // Right null vector of the (n-1) x n transposed submatrix.
    const RMat Ht = columns_except(X, j).transpose();
    SvdOptions opt;
    opt.want_v = true;
    const auto r = jacobi_svd<double>(Ht, opt);
    const double s1 = r.sigma[0];
    const double s_last = r.sigma[r.sigma.size() - 1];
    if (!(s_last > 1e-13 * std::max(s1, 1e-300)))
        throw std::runtime_error(fmt::format(
            "normal_vector: the {} columns other than column {} are rank deficient (sigma_min/sigma_max = {:.3g})",
            n - 1, j, s1 > 0 ? s_last / s1 : 0.0));
    RVec v = r.V.col(n - 1);
    v.normalize();
    fix_sign(v);
    return v;
}

double dist_col_to_span(const RMat& A, double lambda, int j)
{
    const RVec v = normal_vector(A, lambda, j);
    RVec col = A.col(j);
    col[j] -= lambda;
    return std::abs(v.dot(col));
}

Overlap overlap_beta(const RMat& A, double lambda1, double lambda2, int j)
{
    const RVec v1 = normal_vector(A, lambda1, j);
    const RVec v2 = normal_vector(A, lambda2, j);
    Overlap o;
    o.alpha = std::clamp(v2.dot(v1), -1.0, 1.0);
    o.beta = std::sqrt(std::max(0.0, 1.0 - o.alpha * o.alpha));
    return o;
}

namespace {

void require_symmetric(const RMat& M)
{
    if (M.rows() != M.cols()) throw std::invalid_argument("expected a square symmetric matrix");
    const double tol = 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("matrix is not symmetric");
}

RMat minor_of(const RMat& M, int j)
{
    const int n = int(M.rows());
    RMat m(n - 1, n - 1);
    for (int r = 0, rr = 0; r < n; ++r) {
        if (r == j) continue;
        for (int c = 0, cc = 0; c < n; ++c) {
            if (c == j) continue;
            m(rr, cc++) = M(r, c);
        }
        ++rr;
    }
    return m;
}

RVec descending(RVec v)
{
    std::sort(v.data(), v.data() + v.size(), std::greater<double>());
    return v;
}

}  // namespace

double interlacing_check(const RMat& Msym, int j)
{
    require_symmetric(Msym);
    const int n = int(Msym.rows());
    if (j < 0 || j >= n || n < 2) throw std::invalid_argument("interlacing_check: bad index");
    Eigen::SelfAdjointEigenSolver<RMat> full(Msym, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<RMat> part(minor_of(Msym, j), Eigen::EigenvaluesOnly);
    const RVec L = descending(full.eigenvalues());
    const RVec mu = descending(part.eigenvalues());
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n - 1; ++k) worst = std::max({worst, L[k + 1] - mu[k], mu[k] - L[k]});
    return worst;
}

double eigvec_minor_bound_check(const RMat& Msym, int j)
{
    require_symmetric(Msym);
    const int n = int(Msym.rows());
    Eigen::SelfAdjointEigenSolver<RMat> full(Msym);
    Eigen::SelfAdjointEigenSolver<RMat> part(minor_of(Msym, j));
    RVec X(n - 1);
    for (int r = 0, rr = 0; r < n; ++r)
        if (r != j) X[rr++] = Msym(r, j);
    double worst = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
        const double lam = full.eigenvalues()[a];
        const double uj = std::abs(full.eigenvectors()(j, a));
        for (int b = 0; b < n - 1; ++b) {
            const double lp = part.eigenvalues()[b];
            const double lhs = std::abs(part.eigenvectors().col(b).dot(X)) * uj;
            worst = std::max(worst, lhs - std::abs(lam - lp));
        }
    }
    return worst;
}

double block_component_norm_check(const RMat& B, double eig_floor)
{
    const int p = int(B.rows()), q = int(B.cols());
    RMat L = RMat::Zero(p + q, p + q);
    L.topRightCorner(p, q) = B;
    L.bottomLeftCorner(q, p) = B.transpose();
    Eigen::SelfAdjointEigenSolver<RMat> es(L);
    double worst = 0.0;
    for (int k = 0; k < p + q; ++k) {
        if (std::abs(es.eigenvalues()[k]) <= eig_floor) continue;
        const RVec v = es.eigenvectors().col(k);
        worst = std::max(worst, std::abs(v.head(p).norm() - v.tail(q).norm()));
    }
    return worst;
}

double block_singular_value_check(const RMat& A)
{
    Eigen::SelfAdjointEigenSolver<RMat> es(build_LA(A), Eigen::EigenvaluesOnly);
    const RVec ev = descending(es.eigenvalues());
    const RVec sv = svd_values(A);
    const double s1 = std::max(sv[0], 1e-300);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) worst = std::max(worst, std::abs(ev[k] - sv[k]) / s1);
    return worst;
}

RVec least_singular_vector(const RMat& A, double lambda)
{
    SvdOptions opt;
    opt.want_v = true;
    const auto r = jacobi_svd<double>(shifted(A, lambda), opt);
    RVec w = r.V.col(r.V.cols() - 1);
    w.normalize();
    fix_sign(w);
    return w;
}

int count_above(const RVec& w, double theta)
{
    const double thr = theta / std::sqrt(double(w.size()));
    int c = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (std::abs(w[i]) >= thr) ++c;
    return c;
}

int joint_band_count(const RVec& w1, const RVec& w2, double theta, double Theta)
{
    const double s = 1.0 / std::sqrt(double(w1.size()));
    const double lo = theta * s, hi = Theta * s;
    int c = 0;
    for (Eigen::Index i = 0; i < w1.size(); ++i) {
        const double a = std::abs(w1[i]), b = std::abs(w2[i]);
        if (a >= lo && a <= hi && b >= lo && b <= hi) ++c;
    }
    return c;
}

DelocalizationProfile delocalization_profile(const RMat& A, double lambda, const std::vector<double>& thetas)
{
    DelocalizationProfile p;
    p.w = least_singular_vector(A, lambda);
    p.thetas = thetas;
    for (double t : thetas) p.counts.push_back(count_above(p.w, t));
    return p;
}

SpectralSummary summarize(const RMat& A, bool with_eigen_count)
{
    SpectralSummary s;
    s.n_rows = int(A.rows());
    s.n_cols = int(A.cols());
    s.singular_values = svd_values(A);
    if (s.singular_values.size() >= 2) s.min_gap_scaled = min_gap(s.singular_values, int(A.cols())).scaled_gap;
    s.sigma_min = s.singular_values[s.singular_values.size() - 1];
    s.op_norm = s.singular_values[0];
    if (with_eigen_count && A.rows() == A.cols()) s.real_eig_count = real_eigen_count(A);
    return s;
}

std::string spectral_csv_header() { return "n_rows,n_cols,op_norm,sigma_min,min_gap_scaled,real_eig_count"; }

std::string spectral_csv_row(const SpectralSummary& s)
{
    return fmt::format("{},{},{:.17g},{:.17g},{:.17g},{}", s.n_rows, s.n_cols, s.op_norm, s.sigma_min,
                       s.min_gap_scaled, s.real_eig_count);
}


namespace {

template <class Mat>
std::size_t gram_bin(const Mat& M, const std::vector<double>& tau)
{
    if (M.rows() < M.cols()) throw std::invalid_argument("sigma_min_bin: needs rows >= cols");
    Mat H = Mat::Zero(M.cols(), M.cols());
    H.template selfadjointView<Eigen::Lower>().rankUpdate(M.adjoint());
    auto at_or_below = [&](double t) {
        Mat S = H;
        S.diagonal().array() -= t * t;
        Eigen::LLT<Mat, Eigen::Lower> llt(S);
        return llt.info() != Eigen::Success;
    };
    std::size_t lo = 0, hi = tau.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (at_or_below(tau[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

}  // namespace

std::size_t sigma_min_bin(const RMat& M, const std::vector<double>& thresholds)
{
    return gram_bin(M, thresholds);
}

std::size_t sigma_min_bin(const CMat& M, const std::vector<double>& thresholds)
{
    return gram_bin(M, thresholds);
}

}  // namespace rml
