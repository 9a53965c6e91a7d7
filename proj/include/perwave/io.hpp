#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "perwave/radial_grid.hpp"

namespace perwave {

/// Writes `contents` to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file. Creates missing parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// %.17g, the shortest printf form that round-trips every double.
std::string format_double(double x);

/// Minimal CSV builder with a fixed header and round-trip number formatting.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_; }
  std::string str() const { return out_; }
  void write(const std::filesystem::path& path) const { write_file_atomic(path, out_); }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string out_;
};

/// Binary snapshot: n (uint64), dr, t (float64), then v[0..n) and w[0..n), little-endian.
void write_snapshot(const std::filesystem::path& path, const State& state, double t);
/// Inverse of write_snapshot; returns the state and stores the time in `t`.
State read_snapshot(const std::filesystem::path& path, double& t);

}  // namespace perwave
