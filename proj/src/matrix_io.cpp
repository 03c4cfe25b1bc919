#include "rml/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace rml {

namespace {

constexpr char kMagic[8] = {'R', 'M', 'L', 'M', 'A', 'T', '0', '1'};

template <class T>
void put(std::ostream& os, T v)
{
    static_assert(std::endian::native == std::endian::little);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is)
{
    T v;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("matrix file truncated");
    return v;
}

}  // namespace

void write_matrix_binary(std::ostream& os, const std::variant<RMat, CMat>& m)
{
    os.write(kMagic, 8);
    const bool cx = std::holds_alternative<CMat>(m);
    put<std::uint32_t>(os, cx ? 1u : 0u);
    put<std::uint32_t>(os, 0u);
    std::visit(
        [&](const auto& a) {
            put<std::uint64_t>(os, std::uint64_t(a.rows()));
            put<std::uint64_t>(os, std::uint64_t(a.cols()));
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                for (Eigen::Index j = 0; j < a.cols(); ++j) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(a)>, CMat>) {
                        put<double>(os, a(i, j).real());
                        put<double>(os, a(i, j).imag());
                    } else {
                        put<double>(os, a(i, j));
                    }
                }
        },
        m);
}

std::variant<RMat, CMat> read_matrix_binary(std::istream& is)
{
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a matrix container (bad magic)");
    const auto dtype = get<std::uint32_t>(is);
    get<std::uint32_t>(is);
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    if (dtype == 0) {
        RMat a(rows, cols);
        for (std::uint64_t i = 0; i < rows; ++i)
            for (std::uint64_t j = 0; j < cols; ++j) a(i, j) = get<double>(is);
        return a;
    }
    if (dtype == 1) {
        CMat a(rows, cols);
        for (std::uint64_t i = 0; i < rows; ++i)
            for (std::uint64_t j = 0; j < cols; ++j) {
                const double re = get<double>(is);
                a(i, j) = {re, get<double>(is)};
            }
        return a;
    }
    throw std::runtime_error("matrix container: unknown dtype");
}

void write_matrix_csv(std::ostream& os, const std::variant<RMat, CMat>& m)
{
    std::visit(
        [&](const auto& a) {
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                for (Eigen::Index j = 0; j < a.cols(); ++j) {
                    if (j) os << ',';
                    if constexpr (std::is_same_v<std::decay_t<decltype(a)>, CMat>)
                        os << fmt::format("{:.17g}{:+.17g}i", a(i, j).real(), a(i, j).imag());
                    else
                        os << fmt::format("{:.17g}", a(i, j));
                }
                os << '\n';
            }
        },
        m);
}

RMat read_matrix_csv(std::istream& is)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                r.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("CSV: cannot parse '" + cell + "'");
            }
        }
        if (!rows.empty() && r.size() != rows.front().size()) throw std::runtime_error("CSV: ragged rows");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw std::runtime_error("CSV: empty input");
    RMat a(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) a(i, j) = rows[i][j];
    return a;
}

}  // namespace rml
