#include <doctest.h>

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "rml/ensembles.hpp"
#include "rml/spectral.hpp"

using namespace rml;
using doctest::Approx;

namespace {

RMat draw(int r, int c, std::uint64_t seed, const EntryLaw& law = EntryLaw::gaussian())
{
    Stream s(seed, tag_of("spectral-test"), 0);
    return draw_real(law, r, c, s);
}

// Singular values from the eigenvalues of the Gram matrix.
RVec gram_oracle(const RMat& M)
{
    const RMat G = M.cols() <= M.rows() ? RMat(M.transpose() * M) : RMat(M * M.transpose());
    Eigen::SelfAdjointEigenSolver<RMat> es(G);
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

}  // namespace

TEST_CASE("svd_values small cases")
{
    CHECK(svd_values(RMat(RMat::Identity(3, 3))) == RVec::Ones(3));
    RMat d = RMat::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = -1;
    RVec want(2);
    want << 3, 1;
    CHECK(svd_values(d) == want);
}

TEST_CASE("svd_values match the Gram oracle on a 6x4 rademacher matrix")
{
    const RMat M = draw(6, 4, 1, EntryLaw::rademacher());
    const RVec got = svd_values(M), want = gram_oracle(M);
    REQUIRE(got.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("svd of A and its transpose agree")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RMat A = draw(7 + int(seed % 3), 7, seed);
        const RVec a = svd_values(A), b = svd_values(RMat(A.transpose()));
        for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * a[0]);
    }
}

TEST_CASE("high relative accuracy on a graded matrix")
{
    // D1 B D2 with well-conditioned B: every singular value is known to about
    // cond(B) ulps even though they span 30 orders of magnitude.
    const int n = 6;
    RMat B = RMat::Identity(n, n) + 0.1 * draw(n, n, 3);
    RVec d1(n), d2(n);
    for (int i = 0; i < n; ++i) {
        d1[i] = std::pow(10.0, -3.0 * i);
        d2[i] = std::pow(10.0, -2.0 * i);
    }
    const RMat A = d1.asDiagonal() * B * d2.asDiagonal();
    const RVec s = svd_values(A);
    // Exact diagonal dominance makes sigma_i close to d1_i d2_i B_ii.
    for (int i = 0; i < n; ++i) CHECK(s[i] / (d1[i] * d2[i] * B(i, i)) == Approx(1.0).epsilon(0.05));
    CHECK(s[n - 1] > 0.0);
}

TEST_CASE("complex svd matches the Gram oracle")
{
    Stream st(4, 4, 4);
    const CMat G = draw_complex(EntryLaw::gaussian(true), 5, 5, st);
    const RVec s = svd_values(G);
    Eigen::SelfAdjointEigenSolver<CMat> es(G.adjoint() * G);
    RVec want = es.eigenvalues().cwiseSqrt();
    std::sort(want.data(), want.data() + 5, std::greater<>());
    for (int i = 0; i < 5; ++i) CHECK(s[i] == Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("min_gap examples")
{
    RVec a(4), b(4);
    a << 3, 2, 2, 1;
    b << 5, 3, 2.5, 1;
    const auto ga = min_gap(a), gb = min_gap(b);
    CHECK(ga.k_star == 2);
    CHECK(ga.gap == 0.0);
    CHECK(gb.k_star == 2);
    CHECK(gb.gap == 0.5);
    CHECK(gb.scaled_gap == 1.0);
    RVec ties(3);
    ties << 3, 2, 1;
    CHECK(min_gap(ties).k_star == 1);
}

TEST_CASE("min_gap equals the brute-force scan at n=50")
{
    const RMat A = draw(50, 50, 9, EntryLaw::rademacher());
    const RVec s = svd_values(A);
    double best = 1e300;
    int arg = -1;
    for (int k = 0; k + 1 < 50; ++k)
        if (s[k] - s[k + 1] < best) {
            best = s[k] - s[k + 1];
            arg = k + 1;
        }
    const auto g = min_gap(s, 50);
    CHECK(g.gap == best);
    CHECK(g.k_star == arg);
    CHECK(g.scaled_gap == Approx(std::sqrt(50.0) * best));
    // The index is scale invariant.
    CHECK(min_gap(svd_values(RMat(3.5 * A)), 50).k_star == arg);
}

TEST_CASE("sigma_min examples")
{
    CHECK(sigma_min_shifted(RMat(RMat::Identity(3, 3)), 1.0) == 0.0);
    RMat d = RMat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 5;
    CHECK(sigma_min_shifted(d, 1.0) == Approx(1.0).epsilon(1e-15));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const RMat A = draw(8, 8, 100 + seed);
        const double inv_norm = 1.0 / gram_oracle(RMat(A.inverse()))[0];
        CHECK(sigma_min(A) == Approx(inv_norm).epsilon(1e-9));
    }
}

TEST_CASE("sigma_min_bin agrees with the SVD")
{
    const std::vector<double> tau{0.01, 0.05, 0.1, 0.2, 0.4};
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const RMat A = draw(10, 10, 500 + seed, EntryLaw::rademacher());
        const RMat X = shifted(A, 1.5);
        const double sm = sigma_min(X);
        const auto want = std::size_t(std::lower_bound(tau.begin(), tau.end(), sm) - tau.begin());
        // Skip values within rounding of a threshold.
        bool near = false;
        for (double t : tau) near = near || std::abs(sm - t) < 1e-9;
        if (!near) CHECK(sigma_min_bin(X, tau) == want);
    }
    CHECK(sigma_min_bin(RMat(RMat::Identity(3, 3)), {0.5, 1.0, 2.0}) == 1);
}

TEST_CASE("real eigenvalue counts")
{
    RMat d = RMat::Zero(3, 3);
    d.diagonal() << 1, 2, 3;
    CHECK(real_eigen_count(d) == 3);
    RMat rot(2, 2);
    rot << 0, -1, 1, 0;
    CHECK(real_eigen_count(rot) == 0);
    // (x^2 + 1)(x - 2) = x^3 - 2x^2 + x - 2.
    RMat comp = RMat::Zero(3, 3);
    comp(1, 0) = 1;
    comp(2, 1) = 1;
    comp(0, 2) = 2;
    comp(1, 2) = -1;
    comp(2, 2) = 2;
    CHECK(real_eigen_count(comp) == 1);
    const auto ev = real_eigenvalues(comp);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0] == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("real count plus twice the pairs is n, and parity matches n")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const int n = 5 + int(seed % 7);
        const RMat A = draw(n, n, 900 + seed, EntryLaw::rademacher());
        Eigen::EigenSolver<RMat> es(A, false);
        int pairs = 0;
        for (int i = 0; i < n; ++i) pairs += es.eigenvalues()[i].imag() > 1e-9 * std::sqrt(double(n));
        const int r = real_eigen_count(A);
        CHECK(r + 2 * pairs == n);
        CHECK(r % 2 == n % 2);
        const auto three = real_eigen_counts(A, {1e-11, 1e-9, 1e-7});
        CHECK(three[1] == r);
    }
}

TEST_CASE("normal vectors")
{
    RMat d = RMat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 3;
    const RVec v = normal_vector(d, 0.0, 0);
    CHECK(v[0] == Approx(1.0));
    CHECK(v[1] == Approx(0.0));

    // Orthogonal columns: the normal is the excluded column direction.
    const RMat Q = Eigen::HouseholderQR<RMat>(draw(3, 3, 17)).householderQ();
    const RMat A = Q * RVec(RVec::LinSpaced(3, 1.0, 3.0)).asDiagonal();
    for (int j = 0; j < 3; ++j) {
        const RVec w = normal_vector(A, 0.0, j);
        CHECK(std::abs(w.dot(Q.col(j))) == Approx(1.0).epsilon(1e-12));
        CHECK(dist_col_to_span(A, 0.0, j) == Approx(double(j + 1)).epsilon(1e-12));
    }

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int n = 6;
        const RMat B = draw(n, n, 40 + seed);
        const double lam = 0.7;
        const int j = int(seed % n);
        const RVec w = normal_vector(B, lam, j);
        const RMat X = shifted(B, lam);
        CHECK(w.norm() == Approx(1.0).epsilon(1e-14));
        for (int k = 0; k < n; ++k)
            if (k != j) CHECK(std::abs(w.dot(X.col(k))) <= 1e-10);
        // Least-squares oracle for the distance.
        RMat H(n, n - 1);
        for (int k = 0, c = 0; k < n; ++k)
            if (k != j) H.col(c++) = X.col(k);
        const RVec coef = H.colPivHouseholderQr().solve(RVec(X.col(j)));
        const double dist = (X.col(j) - H * coef).norm();
        CHECK(dist_col_to_span(B, lam, j) == Approx(dist).epsilon(1e-9));
    }

    RMat dep = RMat::Ones(3, 3);
    CHECK_THROWS_AS(normal_vector(dep, 0.0, 0), std::runtime_error);
}

TEST_CASE("overlap beta")
{
    const RMat A = draw(6, 6, 61);
    const auto same = overlap_beta(A, 0.3, 0.3, 2);
    CHECK(std::abs(same.alpha) == Approx(1.0));
    CHECK(same.beta == Approx(0.0).epsilon(1e-6));
    const auto o = overlap_beta(A, 0.0, 1.0, 2);
    CHECK(o.alpha * o.alpha + o.beta * o.beta == Approx(1.0).epsilon(1e-12));
    // Column 0 of B - lambda I is (-lambda, 1): at lambda = 1 and -1 the
    // columns (-1, 1) and (1, 1) are orthogonal, so the normals are too.
    RMat B(2, 2);
    B << 0, 5, 1, 7;
    const auto ortho = overlap_beta(B, 1.0, -1.0, 1);
    CHECK(ortho.beta == Approx(1.0));
}

TEST_CASE("interlacing and eigenvector bounds")
{
    RMat d = RMat::Zero(3, 3);
    d.diagonal() << 1, 2, 3;
    CHECK(interlacing_check(d, 1) <= 0.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RMat L = build_LA(draw(4, 4, 300 + seed));
        for (int j = 0; j < 8; ++j) CHECK(interlacing_check(L, j) <= 1e-10);
        const RMat G = draw(8, 8, 700 + seed);
        const RMat S = G + G.transpose();
        for (int j = 0; j < 8; ++j) CHECK(eigvec_minor_bound_check(S, j) <= 1e-9);
    }
    RMat asym = RMat::Identity(3, 3);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(interlacing_check(asym, 0), std::invalid_argument);
}

TEST_CASE("block identities")
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const int n = 2 + int(seed % 11);
        CHECK(block_singular_value_check(draw(n, n, 1000 + seed)) <= 1e-10);
        CHECK(block_component_norm_check(draw(n, n + 1, 2000 + seed)) <= 1e-8);
    }
}

TEST_CASE("delocalization counts")
{
    const int n = 16;
    const RVec flat = RVec::Constant(n, 1.0 / std::sqrt(double(n)));
    for (double t : {0.1, 0.5, 1.0}) CHECK(count_above(flat, t) == n);
    const RVec e1 = RVec::Unit(n, 0);
    for (double t : {0.5, 2.0, 4.0}) CHECK(count_above(e1, t) == 1);
    CHECK(count_above(e1, 4.01) == 0);
    CHECK(joint_band_count(flat, flat, 0.5, 1.0) == n);
    CHECK(joint_band_count(flat, e1, 0.5, 1.0) == 0);
    const RMat A = draw(20, 20, 4242);
    const auto prof = delocalization_profile(A, 0.0, {0.01, 0.1});
    CHECK(prof.w.norm() == Approx(1.0));
    CHECK((shifted(A, 0.0) * prof.w).norm() == Approx(sigma_min(A)).epsilon(1e-8));
    CHECK(prof.counts[0] >= prof.counts[1]);
}

TEST_CASE("spectral csv schema")
{
    CHECK(spectral_csv_header() == "n_rows,n_cols,op_norm,sigma_min,min_gap_scaled,real_eig_count");
    const auto s = summarize(RMat(RMat::Identity(2, 2)));
    CHECK(spectral_csv_row(s).rfind("2,2,", 0) == 0);
}
