#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <type_traits>

#include <Eigen/Dense>

namespace rml {

struct SvdOptions {
    bool want_v = false;       // right singular vectors
    bool precondition = true;  // QR before the sweeps
    int max_sweeps = 80;
};

template <class Scalar>
struct SvdResult {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::VectorXd sigma;  // descending
    Mat V;                  // columns ordered as sigma, when requested
    int sweeps = 0;
    bool converged = false;
};

namespace detail {

inline double conj_if(double x) { return x; }
inline std::complex<double> conj_if(std::complex<double> x) { return std::conj(x); }

// One-sided (Hestenes) Jacobi on the columns of X, cyclic row order.  On
// return the columns of X are mutually orthogonal and, if V is non-empty, the
// same rotations have been applied to V.  Column norms are recomputed from
// scratch at every sweep so small singular values keep their relative
// accuracy.
template <class Scalar>
int hestenes(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
             Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* V, int max_sweeps, bool& converged)
{
    const Eigen::Index m = X.rows(), n = X.cols();
    const double tol = std::numeric_limits<double>::epsilon() * double(std::max<Eigen::Index>(m, 1));
    std::vector<double> norm2(n);
    // A column that has shrunk below 1e-30 ||X||_F holds only rounding noise
    // (the null direction of a rank-deficient input); it is never orthogonal
    // to the others in the relative sense, so it is treated as exactly zero.
    const double floor2 = 1e-60 * X.squaredNorm();
    converged = false;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        for (Eigen::Index k = 0; k < n; ++k) norm2[k] = X.col(k).squaredNorm();
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double a = norm2[p], b = norm2[q];
                if (a <= floor2 || b <= floor2) continue;
                const Scalar c = X.col(p).dot(X.col(q));  // conj(x_p) . x_q
                const double ac = std::abs(c);
                if (!(ac > tol * std::sqrt(a) * std::sqrt(b))) continue;
                rotated = true;
                const double zeta = (b - a) / (2.0 * ac);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                // Phase that makes the pair Gram off-diagonal real.
                const Scalar ph = conj_if(c) * (1.0 / ac);
                auto rot = [&](Scalar* xp, Scalar* xq, Eigen::Index len) {
                    if constexpr (std::is_same_v<Scalar, double>) {
                        const double sg = ph;
                        for (Eigen::Index i = 0; i < len; ++i) {
                            const double u = xp[i];
                            const double w = sg * xq[i];
                            xp[i] = cs * u - sn * w;
                            xq[i] = sn * u + cs * w;
                        }
                    } else {
                        // Written out in reals: std::complex multiplication
                        // carries inf/nan recovery branches that block vectorization.
                        double* up = reinterpret_cast<double*>(xp);
                        double* uq = reinterpret_cast<double*>(xq);
                        const double pr = ph.real(), pi = ph.imag();
                        for (Eigen::Index i = 0; i < len; ++i) {
                            const double ur = up[2 * i], ui = up[2 * i + 1];
                            const double qr = uq[2 * i], qi = uq[2 * i + 1];
                            const double wr = pr * qr - pi * qi, wi = pr * qi + pi * qr;
                            up[2 * i] = cs * ur - sn * wr;
                            up[2 * i + 1] = cs * ui - sn * wi;
                            uq[2 * i] = sn * ur + cs * wr;
                            uq[2 * i + 1] = sn * ui + cs * wi;
                        }
                    }
                };
                rot(X.col(p).data(), X.col(q).data(), m);
                if (V) rot(V->col(p).data(), V->col(q).data(), V->rows());
                const double an = a - t * ac, bn = b + t * ac;
                norm2[p] = an < 0.25 * a ? X.col(p).squaredNorm() : an;
                norm2[q] = bn < 0.25 * b ? X.col(q).squaredNorm() : bn;
            }
        }
        if (!rotated) {
            converged = true;
            ++sweep;
            break;
        }
    }
    return sweep;
}

}  // namespace detail

// Singular value decomposition by one-sided Jacobi.
//
// Values only: A P = Q R (column-pivoted Householder QR), then the sweeps run
// on R^*, which converges in few sweeps.  With vectors: the sweeps run on R
// (or on A when preconditioning is off) with the rotations accumulated, so
// R V = U S gives the right singular vectors of A even for zero singular
// values.  Wide inputs are handled through the adjoint.
template <class Scalar>
SvdResult<Scalar> jacobi_svd(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                             const SvdOptions& opt = {})
{
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (!A.allFinite()) throw std::invalid_argument("svd: non-finite input");
    SvdResult<Scalar> res;
    if (A.rows() == 0 || A.cols() == 0) {
        res.converged = true;
        return res;
    }
    if (A.rows() < A.cols()) {
        if (opt.want_v) {
            // Right singular vectors of a wide A: null directions included,
            // via the square zero-padded matrix.
            Mat Y = Mat::Zero(A.cols(), A.cols());
            Y.topRows(A.rows()) = A;
            auto r = jacobi_svd<Scalar>(Y, opt);
            r.sigma.conservativeResize(A.rows());
            return r;
        }
        return jacobi_svd<Scalar>(Mat(A.adjoint()), opt);
    }
    const Eigen::Index n = A.cols();
    Mat X;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm(n);
    perm.setIdentity();
    if (opt.precondition) {
        Eigen::ColPivHouseholderQR<Mat> qr(A);
        Mat R = qr.matrixR().topRows(n).template triangularView<Eigen::Upper>();
        perm = qr.colsPermutation();
        X = opt.want_v ? R : Mat(R.adjoint());
    } else {
        X = A;
    }
    Mat V;
    if (opt.want_v) V = Mat::Identity(n, n);
    res.sweeps = detail::hestenes<Scalar>(X, opt.want_v ? &V : nullptr, opt.max_sweeps, res.converged);
    if (!res.converged) throw std::runtime_error("svd: Jacobi sweeps did not converge");
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k) s[k] = X.col(k).norm();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return s[i] > s[j]; });
    res.sigma.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) res.sigma[k] = s[order[k]];
    if (opt.want_v) {
        // A P = Q R and R V = U S, so the right vectors of A are P V.
        Mat PV = perm * V;
        res.V.resize(n, n);
        for (Eigen::Index k = 0; k < n; ++k) res.V.col(k) = PV.col(order[k]);
    }
    return res;
}

}  // namespace rml
