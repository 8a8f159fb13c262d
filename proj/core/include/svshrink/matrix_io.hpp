#pragma once

#include "svshrink/linalg.hpp"

#include <iosfwd>
#include <string>

namespace svshrink {

/// CSV: one row per line, comma separated, lines starting with '#' ignored.
Matrix read_csv(std::istream &in);
Matrix read_csv_file(const std::string &path);
void write_csv(std::ostream &out, const Matrix &A);
void write_csv_file(const std::string &path, const Matrix &A);

/// Binary: "SSMX", u64 rows, u64 cols, f64 entries row-major, little-endian.
Matrix read_binary(std::istream &in);
void write_binary(std::ostream &out, const Matrix &A);

/// Dispatch on the file's magic bytes (binary) or fall back to CSV.
Matrix read_matrix_file(const std::string &path);
/// Binary when the path ends in ".bin", CSV otherwise.
void write_matrix_file(const std::string &path, const Matrix &A);

} // namespace svshrink
