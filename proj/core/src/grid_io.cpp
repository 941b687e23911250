#include "implicit/grid_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "implicit/error.hpp"

namespace implicit {

static_assert(std::endian::native == std::endian::little, "binary grid cache assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'I', 'M', 'P', 'G', 'R', 'I', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;
// Refuses headers that would allocate absurd amounts of memory.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 32;

template <class T>
void put(std::ostream& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}

template <class T>
T get(std::istream& in) {
  char bytes[sizeof(T)];
  if (!in.read(bytes, sizeof(T))) fail(ErrorKind::Io, "grid cache is truncated");
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::uint32_t mode_code(FieldMode mode) {
  switch (mode) {
    case FieldMode::IdentityCompletion: return 0;
    case FieldMode::Scaled: return 1;
    case FieldMode::Hamiltonian: return 2;
  }
  return 0;
}

FieldMode mode_from_code(std::uint32_t code) {
  switch (code) {
    case 0: return FieldMode::IdentityCompletion;
    case 1: return FieldMode::Scaled;
    case 2: return FieldMode::Hamiltonian;
    default: fail(ErrorKind::Io, "grid cache has unknown field mode " + std::to_string(code));
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_grid_csv(std::ostream& out, const ParamGrid& grid, const ImplicitSystem& system) {
  if (grid.dim() != system.dim() || grid.codim() != system.codim())
    fail(ErrorKind::ShapeMismatch, "grid and system dimensions differ");
  const std::size_t k = grid.params();
  const std::size_t d = grid.dim();
  const std::size_t l = grid.codim();
  std::string line;
  for (std::size_t j = 0; j < k; ++j) line += "t_" + std::to_string(j + 1) + ",";
  for (std::size_t i = 0; i < d; ++i) line += "x_" + std::to_string(i + 1) + ",";
  for (std::size_t j = 0; j < l; ++j) line += "res_" + std::to_string(j + 1) + (j + 1 < l ? "," : "\n");
  out << line;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    line.clear();
    for (double t : grid.params_at(f)) line += format_double(t) + ",";
    const auto x = grid.point(f);
    for (double v : x) line += format_double(v) + ",";
    const Vector r = system.residual(x);
    for (std::size_t j = 0; j < l; ++j)
      line += format_double(std::abs(r[static_cast<Eigen::Index>(j)])) + (j + 1 < l ? "," : "\n");
    out << line;
  }
}

void write_grid_binary(std::ostream& out, const ParamGrid& grid) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.codim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.params()));
  put<std::uint32_t>(out, mode_code(grid.mode()));
  put<double>(out, grid.minor_rel_tol());
  for (std::size_t v : grid.perm().order()) put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  for (std::size_t j = 0; j < grid.params(); ++j) {
    put<std::uint64_t>(out, grid.half_counts()[j]);
    put<double>(out, grid.steps()[j]);
  }
  put<std::uint64_t>(out, grid.size());
  for (double v : grid.data()) put<double>(out, v);
  if (!out) fail(ErrorKind::Io, "failed writing grid cache");
}

ParamGrid read_grid_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) fail(ErrorKind::Io, "not a grid cache (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) fail(ErrorKind::Io, "unsupported grid cache version " + std::to_string(version));
  const std::size_t d = get<std::uint32_t>(in);
  const std::size_t l = get<std::uint32_t>(in);
  const std::size_t k = get<std::uint32_t>(in);
  const FieldMode mode = mode_from_code(get<std::uint32_t>(in));
  const double minor_rel_tol = get<double>(in);
  if (d == 0 || l == 0 || l >= d || k != d - l) fail(ErrorKind::Io, "grid cache has inconsistent dimensions");
  std::vector<std::size_t> order(d);
  for (auto& v : order) v = get<std::uint32_t>(in);
  std::vector<std::size_t> half(k);
  std::vector<double> steps(k);
  std::uint64_t expected = 1;
  for (std::size_t j = 0; j < k; ++j) {
    half[j] = static_cast<std::size_t>(get<std::uint64_t>(in));
    steps[j] = get<double>(in);
    if (!(steps[j] > 0.0) || half[j] > kMaxValues) fail(ErrorKind::Io, "grid cache has an invalid direction");
    expected *= 2 * half[j] + 1;
    if (expected * d > kMaxValues) fail(ErrorKind::Io, "grid cache is too large");
  }
  const auto nodes = get<std::uint64_t>(in);
  if (nodes != expected) fail(ErrorKind::Io, "grid cache node count does not match its shape");
  ParamGrid grid(d, std::move(half), std::move(steps), mode, VariablePermutation(std::move(order), l),
                 minor_rel_tol);
  for (double& v : grid.data()) v = get<double>(in);
  return grid;
}

void save_grid_binary(const std::filesystem::path& path, const ParamGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_grid_binary(out, grid);
}

ParamGrid load_grid_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return read_grid_binary(in);
}

}  // namespace implicit
