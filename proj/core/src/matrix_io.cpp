#include "svshrink/matrix_io.hpp"

#include "svshrink/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace svshrink {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'S', 'M', 'X'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw DomainError("invalid number '" + std::string(tok) + "' on line " +
                      std::to_string(line));
  return v;
}

template <typename T> void put_le(std::ostream &out, T v) {
  std::array<unsigned char, sizeof(T)> buf{};
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf.begin(), buf.end());
  out.write(reinterpret_cast<const char *>(buf.data()), sizeof(T));
}

template <typename T> T get_le(std::istream &in) {
  std::array<unsigned char, sizeof(T)> buf{};
  in.read(reinterpret_cast<char *>(buf.data()), sizeof(T));
  if (!in)
    throw DomainError("truncated binary matrix");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

} // namespace

Matrix read_csv(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#')
      continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = sv.find(',', start);
      row.push_back(parse_double(sv.substr(start, comma - start), lineno));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DomainError("ragged CSV row on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw DomainError("CSV contains no data rows");
  Matrix A(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      A(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  require_finite(A, "CSV matrix");
  return A;
}

Matrix read_csv_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw DomainError("cannot open " + path);
  return read_csv(in);
}

void write_csv(std::ostream &out, const Matrix &A) {
  std::array<char, 32> buf{};
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j > 0)
        out << ',';
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), A(i, j));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

void write_csv_file(const std::string &path, const Matrix &A) {
  std::ofstream out(path);
  if (!out)
    throw DomainError("cannot write " + path);
  write_csv(out, A);
}

Matrix read_binary(std::istream &in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic)
    throw DomainError("missing SSMX magic");
  const auto n = get_le<std::uint64_t>(in);
  const auto m = get_le<std::uint64_t>(in);
  if (n == 0 || m == 0 || n > (1ull << 24) || m > (1ull << 24))
    throw DomainError("implausible binary matrix shape");
  Matrix A(static_cast<Index>(n), static_cast<Index>(m));
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      A(i, j) = get_le<double>(in);
  require_finite(A, "binary matrix");
  return A;
}

void write_binary(std::ostream &out, const Matrix &A) {
  out.write(kMagic.data(), 4);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(A.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(A.cols()));
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      put_le<double>(out, A(i, j));
}

Matrix read_matrix_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DomainError("cannot open " + path);
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  const bool binary = in && magic == kMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in) : read_csv(in);
}

void write_matrix_file(const std::string &path, const Matrix &A) {
  const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out)
    throw DomainError("cannot write " + path);
  if (binary)
    write_binary(out, A);
  else
    write_csv(out, A);
}

} // namespace svshrink
