#include "rml/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rml {

namespace {

const std::pair<Family, const char*> kFamilyNames[] = {
    {Family::iid_square, "iid_square"},
    {Family::iid_rect, "iid_rect"},
    {Family::iid_complex, "iid_complex"},
    {Family::block_LA, "block_LA"},
    {Family::block_curlyLA, "block_curlyLA"},
    {Family::zeroed_M, "zeroed_M"},
    {Family::linearized_P, "linearized_P"},
    {Family::truncated_M_underline, "truncated_M_underline"},
    {Family::complex_P_G, "complex_P_G"},
    {Family::complex_M_G, "complex_M_G"},
};

double draw_scalar(const AnyLaw& law, Stream& s)
{
    return std::visit([&](const auto& l) { return l.sample_real(s); }, law);
}

}  // namespace

std::string family_name(Family f)
{
    for (const auto& [k, v] : kFamilyNames)
        if (k == f) return v;
    return "unknown";
}

Family family_from_name(const std::string& s)
{
    for (const auto& [k, v] : kFamilyNames)
        if (s == v) return k;
    throw std::invalid_argument("unknown ensemble family '" + s + "'");
}

int EnsembleSpec::rows() const
{
    switch (family) {
    case Family::iid_rect: return n_rows;
    case Family::block_LA: return 2 * n;
    case Family::block_curlyLA:
    case Family::zeroed_M: return 2 * n - 1;
    case Family::linearized_P:
    case Family::truncated_M_underline:
    case Family::complex_P_G:
    case Family::complex_M_G: return 2 * n + 1;
    default: return n;
    }
}

int EnsembleSpec::cols() const
{
    return family == Family::iid_rect ? n : rows();
}

bool EnsembleSpec::is_complex() const
{
    return family == Family::iid_complex || family == Family::complex_P_G ||
           family == Family::complex_M_G;
}

bool EnsembleSpec::is_symmetric() const
{
    return family == Family::block_LA || family == Family::block_curlyLA || family == Family::zeroed_M;
}

void EnsembleSpec::validate() const
{
    if (n < 1) throw std::invalid_argument("ensemble: n must be positive");
    if (family == Family::iid_rect && n_rows < n)
        throw std::invalid_argument("ensemble: iid_rect needs n_rows >= n");
    if (family == Family::block_curlyLA && n < 2)
        throw std::invalid_argument("ensemble: block_curlyLA needs n >= 2");
    if (family == Family::zeroed_M && (n < 2 || anchor_size < 0 || anchor_size > n - 1))
        throw std::invalid_argument("ensemble: zeroed_M needs 0 <= |D| <= n-1");
    const bool lazy = std::holds_alternative<LazyLaw>(law);
    if ((family == Family::truncated_M_underline || family == Family::complex_M_G) && !lazy)
        throw std::invalid_argument("ensemble: truncated families need a lazy law");
}

bool EnsembleSpec::shift_warning() const
{
    const double r = 4.0 * std::sqrt(double(n));
    switch (family) {
    case Family::linearized_P:
        return std::abs(lambda1) > r || std::abs(lambda2) > r;
    case Family::complex_P_G: return std::abs(z1) > 2.0 * r || std::abs(z2) > 2.0 * r;
    default: return false;
    }
}

int MatrixSample::rows() const
{
    return std::visit([](const auto& m) { return int(m.rows()); }, data);
}

int MatrixSample::cols() const
{
    return std::visit([](const auto& m) { return int(m.cols()); }, data);
}

RMat draw_real(const AnyLaw& law, int n_rows, int n_cols, Stream& s)
{
    RMat A(n_rows, n_cols);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) A(i, j) = draw_scalar(law, s);
    return A;
}

CMat draw_complex(const AnyLaw& law, int n_rows, int n_cols, Stream& s)
{
    CMat G(n_rows, n_cols);
    for (int i = 0; i < n_rows; ++i)
        for (int j = 0; j < n_cols; ++j) {
            const double re = draw_scalar(law, s);
            const double im = draw_scalar(law, s);
            G(i, j) = {re, im};
        }
    return G;
}

RMat build_LA(const RMat& A)
{
    const int r = int(A.rows()), c = int(A.cols());
    RMat L = RMat::Zero(r + c, r + c);
    L.topRightCorner(r, c) = A;
    L.bottomLeftCorner(c, r) = A.transpose();
    return L;
}

RMat build_curlyLA(const RMat& A)
{
    const int n = int(A.rows());
    return build_LA(A.bottomRows(n - 1));
}

RMat build_P(const RMat& A, double lambda1, double lambda2, double lambda_hat)
{
    const int n = int(A.rows());
    RMat P = RMat::Zero(2 * n + 1, 2 * n + 1);
    // A_{/[1]}: first row identically zero; rows 2..n of A.
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            P(1 + i, 1 + n + j) = A(i, j);
            P(1 + n + i, 1 + j) = A(i, j);
        }
    for (int i = 0; i < n; ++i) P(1 + i, 1 + i) = -lambda_hat;
    for (int i = 1; i < n; ++i) {
        P(1 + i, 1 + n + i) -= lambda2;
        P(1 + n + i, 1 + i) -= lambda1;
    }
    // A_{[1]} - lambda1 e_1: first column of A_{/[1]}, minus lambda1 in its first slot.
    P(1 + n, 0) = -lambda1;
    for (int i = 1; i < n; ++i) P(1 + n + i, 0) = A(i, 0);
    return P;
}

RMat build_M_underline(const RMat& Aunder)
{
    const int n = int(Aunder.rows());
    RMat M = RMat::Zero(2 * n + 1, 2 * n + 1);
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            M(1 + i, 1 + n + j) = Aunder(i, j);
            M(1 + n + i, 1 + j) = Aunder(i, j);
        }
        M(1 + n + i, 0) = Aunder(i, 0);
    }
    return M;
}

CMat build_P_G(const CMat& G, std::complex<double> z1, std::complex<double> z2,
               std::complex<double> lambda_hat)
{
    const int n = int(G.rows());
    CMat P = CMat::Zero(2 * n + 1, 2 * n + 1);
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            P(1 + i, 1 + n + j) = G(i, j);
            P(1 + n + i, 1 + j) = G(i, j);
        }
    for (int i = 0; i < n; ++i) P(1 + i, 1 + i) = -lambda_hat;
    for (int i = 1; i < n; ++i) {
        P(1 + i, 1 + n + i) -= z2;
        P(1 + n + i, 1 + i) -= z1;
    }
    P(1 + n, 0) = -z1;
    for (int i = 1; i < n; ++i) P(1 + n + i, 0) = G(i, 0);
    return P;
}

CMat build_M_G(const CMat& Gunder)
{
    const int n = int(Gunder.rows());
    CMat M = CMat::Zero(2 * n + 1, 2 * n + 1);
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            M(1 + i, 1 + n + j) = Gunder(i, j);
            M(1 + n + i, 1 + j) = Gunder(i, j);
        }
        M(1 + n + i, 0) = Gunder(i, 0);
    }
    return M;
}

std::vector<std::pair<int, int>> zeroed_free_positions(int n, int anchor_size)
{
    std::vector<std::pair<int, int>> pos;
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n; ++j) {
            const bool ri = i < anchor_size, cj = j < anchor_size;
            if (ri != cj) pos.emplace_back(i, j);
        }
    return pos;
}

RMat build_zeroed_M(int n, int anchor_size, const std::vector<double>& free_entries)
{
    const auto pos = zeroed_free_positions(n, anchor_size);
    if (free_entries.size() != pos.size()) throw std::invalid_argument("zeroed_M: wrong entry count");
    RMat M = RMat::Zero(2 * n - 1, 2 * n - 1);
    for (std::size_t k = 0; k < pos.size(); ++k) {
        const auto [i, j] = pos[k];
        M(i, n - 1 + j) = free_entries[k];
        M(n - 1 + j, i) = free_entries[k];
    }
    return M;
}

MatrixSample sample(const EnsembleSpec& spec, Stream& s, SeedPath path)
{
    spec.validate();
    MatrixSample out{RMat(), spec, path};
    const int n = spec.n;
    switch (spec.family) {
    case Family::iid_square: out.data = draw_real(spec.law, n, n, s); break;
    case Family::iid_rect: out.data = draw_real(spec.law, spec.n_rows, n, s); break;
    case Family::iid_complex: out.data = draw_complex(spec.law, n, n, s); break;
    case Family::block_LA: out.data = build_LA(draw_real(spec.law, n, n, s)); break;
    case Family::block_curlyLA: out.data = build_curlyLA(draw_real(spec.law, n, n, s)); break;
    case Family::zeroed_M: {
        const auto count = zeroed_free_positions(n, spec.anchor_size).size();
        std::vector<double> v(count);
        for (auto& x : v) x = draw_scalar(spec.law, s);
        out.data = build_zeroed_M(n, spec.anchor_size, v);
        break;
    }
    case Family::linearized_P:
        out.data = build_P(draw_real(spec.law, n, n, s), spec.lambda1, spec.lambda2, spec.lambda_hat);
        break;
    case Family::truncated_M_underline: out.data = build_M_underline(draw_real(spec.law, n, n, s)); break;
    case Family::complex_P_G:
        out.data = build_P_G(draw_complex(spec.law, n, n, s), spec.z1, spec.z2, spec.z_hat);
        break;
    case Family::complex_M_G: out.data = build_M_G(draw_complex(spec.law, n, n, s)); break;
    }
    return out;
}

RMat shifted(const RMat& A, double lambda)
{
    if (A.rows() != A.cols()) throw std::invalid_argument("shifted: matrix is not square");
    RMat B = A;
    B.diagonal().array() -= lambda;
    return B;
}

CMat shifted(const CMat& A, std::complex<double> lambda)
{
    if (A.rows() != A.cols()) throw std::invalid_argument("shifted: matrix is not square");
    CMat B = A;
    B.diagonal().array() -= lambda;
    return B;
}

RMat shifted(const MatrixSample& s, double lambda)
{
    if (s.is_complex()) throw std::invalid_argument("shifted: complex sample needs a complex shift");
    return shifted(s.real(), lambda);
}

CMat shifted(const MatrixSample& s, std::complex<double> lambda)
{
    if (s.is_complex()) return shifted(s.cplx(), lambda);
    return shifted(CMat(s.real().cast<std::complex<double>>()), lambda);
}

AnchorSet normalize_anchor_set(int n, const std::vector<int>& D1, const std::vector<int>& D2)
{
    std::set<int> d;
    for (int x : D1) {
        if (x < 1 || x > n - 1) throw std::invalid_argument("anchor set: D1 index out of range");
        d.insert(x);
    }
    for (int x : D2) {
        if (x == 2 * n - 1) continue;
        const int y = x - n + 1;
        if (y < 1 || y > n - 1) throw std::invalid_argument("anchor set: D2 index out of range");
        d.insert(y);
    }
    AnchorSet out;
    out.D.assign(d.begin(), d.end());
    out.perm = out.D;
    for (int i = 1; i <= n - 1; ++i)
        if (!d.count(i)) out.perm.push_back(i);
    return out;
}

nlohmann::json to_json(const EnsembleSpec& spec)
{
    nlohmann::json j;
    j["family"] = family_name(spec.family);
    j["n"] = spec.n;
    if (spec.family == Family::iid_rect) j["n_rows"] = spec.n_rows;
    if (spec.family == Family::zeroed_M) j["anchor_size"] = spec.anchor_size;
    if (spec.family == Family::linearized_P) {
        j["lambda1"] = spec.lambda1;
        j["lambda2"] = spec.lambda2;
        j["lambda_hat"] = spec.lambda_hat;
    }
    if (spec.family == Family::complex_P_G) {
        j["z1"] = {spec.z1.real(), spec.z1.imag()};
        j["z2"] = {spec.z2.real(), spec.z2.imag()};
        j["z_hat"] = {spec.z_hat.real(), spec.z_hat.imag()};
    }
    j["law"] = std::visit([](const auto& l) { return to_json(l); }, spec.law);
    return j;
}

EnsembleSpec ensemble_spec_from_json(const nlohmann::json& j)
{
    auto cplx = [&](const char* key) -> std::complex<double> {
        if (!j.contains(key)) return {0.0, 0.0};
        const auto& v = j.at(key);
        if (v.is_number()) return {v.get<double>(), 0.0};
        return {v.at(0).get<double>(), v.at(1).get<double>()};
    };
    EnsembleSpec s;
    s.family = family_from_name(j.at("family").get<std::string>());
    s.n = j.at("n").get<int>();
    s.n_rows = j.value("n_rows", 0);
    s.anchor_size = j.value("anchor_size", 0);
    s.lambda1 = j.value("lambda1", 0.0);
    s.lambda2 = j.value("lambda2", 0.0);
    s.lambda_hat = j.value("lambda_hat", 0.0);
    s.z1 = cplx("z1");
    s.z2 = cplx("z2");
    s.z_hat = cplx("z_hat");
    if (j.contains("law")) s.law = law_from_json(j.at("law"));
    s.validate();
    return s;
}

}  // namespace rml
