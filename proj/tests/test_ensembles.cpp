#include <doctest.h>

#include <sstream>

#include <Eigen/Eigenvalues>

#include "rml/ensembles.hpp"
#include "rml/matrix_io.hpp"
#include "rml/parallel.hpp"
#include "rml/spectral.hpp"

using namespace rml;

namespace {

EntryLaw forced_one() { return EntryLaw::unchecked({{1.0, 1.0}}); }

EnsembleSpec spec_of(Family f, int n, AnyLaw law = EntryLaw::rademacher())
{
    EnsembleSpec s;
    s.family = f;
    s.n = n;
    s.law = std::move(law);
    return s;
}

}  // namespace

TEST_CASE("block_LA of the 1x1 matrix [1]")
{
    Stream s(1, 2, 3);
    const auto m = sample(spec_of(Family::block_LA, 1, forced_one()), s);
    RMat want(2, 2);
    want << 0, 1, 1, 0;
    CHECK(m.real() == want);
}

TEST_CASE("block_LA structure")
{
    Stream s(4, 5, 6);
    const RMat L = sample(spec_of(Family::block_LA, 5), s).real();
    REQUIRE(L.rows() == 10);
    CHECK(L == L.transpose());
    CHECK(L.topLeftCorner(5, 5).isZero(0.0));
    CHECK(L.bottomRightCorner(5, 5).isZero(0.0));
}

TEST_CASE("block_curlyLA drops the first row of A")
{
    Stream s1(4, 5, 6), s2(4, 5, 6);
    const RMat A = sample(spec_of(Family::iid_square, 4), s1).real();
    const RMat L = sample(spec_of(Family::block_curlyLA, 4), s2).real();
    REQUIRE(L.rows() == 7);
    CHECK(L == L.transpose());
    CHECK(L.topRightCorner(3, 4) == A.bottomRows(3));
    CHECK(L.topLeftCorner(3, 3).isZero(0.0));
    CHECK(L.bottomRightCorner(4, 4).isZero(0.0));
}

TEST_CASE("zeroed_M pattern for n=3, D={1}")
{
    // Upper-right block is (n-1) x n; with |D| = 1 the free entries are row 1
    // outside column 1 and column 1 outside row 1 (1-based block coordinates).
    const auto pos = zeroed_free_positions(3, 1);
    std::vector<std::pair<int, int>> want{{0, 1}, {0, 2}, {1, 0}};
    CHECK(pos == want);
    EnsembleSpec sp = spec_of(Family::zeroed_M, 3, forced_one());
    sp.anchor_size = 1;
    Stream s(1, 1, 1);
    const RMat M = sample(sp, s).real();
    REQUIRE(M.rows() == 5);
    CHECK(M == M.transpose());
    int nonzero = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) nonzero += M(i, j) != 0.0;
    CHECK(nonzero == 6);
    CHECK(M(0, 3) == 1.0);
    CHECK(M(0, 4) == 1.0);
    CHECK(M(1, 2) == 1.0);
}

TEST_CASE("linearized_P hand expansion, n=2, all shifts 0, A all ones")
{
    Stream s(1, 1, 1);
    const RMat P = sample(spec_of(Family::linearized_P, 2, forced_one()), s).real();
    RMat want(5, 5);
    // index 0 carries A_[1] - lambda1 e_1; rows 1..2 hold -lambda_hat I and
    // A_{/[1]} (first row zero); rows 3..4 hold A_{/[1]} and the column.
    want << 0, 0, 0, 0, 0,
            0, 0, 0, 0, 0,
            0, 0, 0, 1, 1,
            0, 0, 0, 0, 0,
            1, 1, 1, 0, 0;
    CHECK(P == want);
}

TEST_CASE("linearized_P shifts")
{
    RMat A(2, 2);
    A << 1, 2, 3, 4;
    const RMat P = build_P(A, 0.5, 0.25, 2.0);
    CHECK(P(1, 1) == -2.0);
    CHECK(P(2, 2) == -2.0);
    CHECK(P(2, 4) == 4.0 - 0.25);
    CHECK(P(4, 2) == 4.0 - 0.5);
    CHECK(P(3, 0) == -0.5);
    CHECK(P(4, 0) == 3.0);
}

TEST_CASE("families sharing a stream share A")
{
    for (Family f : {Family::block_LA, Family::linearized_P, Family::iid_square}) {
        Stream s1(9, 9, 9), s2(9, 9, 9);
        const RMat A = sample(spec_of(Family::iid_square, 6), s1).real();
        const RMat M = sample(spec_of(f, 6), s2).real();
        if (f == Family::block_LA) CHECK(M.topRightCorner(6, 6) == A);
        if (f == Family::linearized_P) CHECK(M.block(2, 7, 5, 6) == A.bottomRows(5));
        if (f == Family::iid_square) CHECK(M == A);
    }
}

TEST_CASE("shifted")
{
    RMat Z = RMat::Zero(2, 2);
    CHECK(shifted(Z, 1.0) == -RMat::Identity(2, 2));
    CHECK(shifted(RMat(RMat::Identity(2, 2)), 1.0).isZero(0.0));
    CHECK_THROWS_AS(shifted(RMat(2, 3), 1.0), std::invalid_argument);
    Stream s(2, 2, 2);
    const RMat A = sample(spec_of(Family::iid_square, 4, EntryLaw::gaussian()), s).real();
    RMat B = A;
    for (int i = 0; i < 4; ++i) B(i, i) -= 2.0;
    Eigen::JacobiSVD<RMat> oracle(B);
    CHECK(sigma_min_shifted(A, 2.0) == doctest::Approx(oracle.singularValues()(3)).epsilon(1e-12));
}

TEST_CASE("spec validation")
{
    EnsembleSpec r = spec_of(Family::iid_rect, 5);
    r.n_rows = 4;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    r.n_rows = 5;
    CHECK_NOTHROW(r.validate());
    CHECK_THROWS_AS(spec_of(Family::truncated_M_underline, 3).validate(), std::invalid_argument);
    EnsembleSpec p = spec_of(Family::linearized_P, 16);
    p.lambda2 = 17.0;
    CHECK(p.shift_warning());
    p.lambda2 = 15.0;
    CHECK_FALSE(p.shift_warning());
}

TEST_CASE("structural zeros of the truncated families")
{
    EnsembleSpec sp = spec_of(Family::truncated_M_underline, 4, LazyLaw(EntryLaw::rademacher(), 1.0, 0.5));
    Stream s(3, 3, 3);
    const RMat M = sample(sp, s).real();
    REQUIRE(M.rows() == 9);
    CHECK(M.row(0).isZero(0.0));
    CHECK(M.row(1).isZero(0.0));
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) CHECK((M(i, j) == 0.0 || std::abs(M(i, j)) == 2.0));
}

TEST_CASE("sampling is deterministic across worker counts")
{
    const auto spec = spec_of(Family::iid_complex, 5);
    const Stream base(77, tag_of("det"), 0);
    auto draw = [&](int workers) {
        return run_trials<CMat>(64, workers, [&](std::size_t i) {
            Stream s = base.split(i);
            return sample(spec, s).cplx();
        });
    };
    const auto a = draw(1), b = draw(4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("operator norm stays below 4 sqrt(n)")
{
    const int n = 100;
    const auto spec = spec_of(Family::iid_square, n);
    const Stream base(5, tag_of("opnorm"), 0);
    auto over = run_trials<int>(10000, 0, [&](std::size_t i) {
        Stream s = base.split(i);
        const RMat A = sample(spec, s).real();
        Eigen::SelfAdjointEigenSolver<RMat> es(A.transpose() * A, Eigen::EigenvaluesOnly);
        return std::sqrt(es.eigenvalues().maxCoeff()) > 4.0 * std::sqrt(double(n)) ? 1 : 0;
    });
    int total = 0;
    for (int o : over) total += o;
    CHECK(total == 0);
}

TEST_CASE("matrix containers round trip")
{
    Stream s(8, 8, 8);
    const auto r = sample(spec_of(Family::iid_square, 3, EntryLaw::gaussian()), s);
    const auto c = sample(spec_of(Family::iid_complex, 3, EntryLaw::gaussian(true)), s);
    for (const auto& m : {r.data, c.data}) {
        std::stringstream ss;
        write_matrix_binary(ss, m);
        const std::string bytes = ss.str();
        CHECK(bytes.substr(0, 8) == "RMLMAT01");
        const auto back = read_matrix_binary(ss);
        CHECK(back.index() == m.index());
        if (m.index() == 0) CHECK(std::get<RMat>(back) == std::get<RMat>(m));
        else CHECK(std::get<CMat>(back) == std::get<CMat>(m));
    }
    std::stringstream csv;
    write_matrix_csv(csv, r.data);
    CHECK(read_matrix_csv(csv) == r.real());
    std::stringstream bad("RMLMATXX");
    CHECK_THROWS(read_matrix_binary(bad));
}

TEST_CASE("spec json round trip")
{
    EnsembleSpec p = spec_of(Family::complex_P_G, 4, EntryLaw::rademacher(true));
    p.z1 = {0.5, -1.0};
    p.z2 = {2.0, 0.0};
    const auto back = ensemble_spec_from_json(to_json(p));
    CHECK(back.family == p.family);
    CHECK(back.z1 == p.z1);
    CHECK(back.z2 == p.z2);
    CHECK(family_name(back.family) == "complex_P_G");
}
