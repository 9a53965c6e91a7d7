#include "perwave/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "perwave/errors.hpp"

namespace perwave {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <class T>
void put(std::string& buf, T x) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &x, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T x;
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) throw ConfigError("truncated snapshot");
  std::memcpy(&x, bytes, sizeof(T));
  return x;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

void CsvTable::add_row(const std::vector<double>& values) {
  if (values.size() != columns_) throw ConfigError("CSV row has the wrong number of columns");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ',';
    out_ += format_double(values[i]);
  }
  out_ += '\n';
  ++rows_;
}

void write_snapshot(const std::filesystem::path& path, const State& state, double t) {
  std::string buf;
  buf.reserve(24 + 16 * state.v.size());
  put<std::uint64_t>(buf, state.v.size());
  put<double>(buf, state.grid.dr());
  put<double>(buf, t);
  for (double x : state.v) put<double>(buf, x);
  for (double x : state.w) put<double>(buf, x);
  write_file_atomic(path, buf);
}

State read_snapshot(const std::filesystem::path& path, double& t) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open snapshot " + path.string());
  const auto n = get<std::uint64_t>(in);
  const double dr = get<double>(in);
  t = get<double>(in);
  State s(RadialGrid(dr * static_cast<double>(n), static_cast<int>(n)));
  for (auto& x : s.v) x = get<double>(in);
  for (auto& x : s.w) x = get<double>(in);
  return s;
}

}  // namespace perwave
