#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "implicit/integrate.hpp"

namespace implicit {

/// Shortest text with 17 significant digits ("%.17g" semantics), so parsing
/// it back yields the same double.
std::string format_double(double value);

/// Header t_1..t_k, x_1..x_d, res_1..res_l; res_j = |F_j(x) - c_j|.
void write_grid_csv(std::ostream& out, const ParamGrid& grid, const ImplicitSystem& system);

/// Binary cache, see docs/formats.md. Little-endian, version 1.
void write_grid_binary(std::ostream& out, const ParamGrid& grid);
ParamGrid read_grid_binary(std::istream& in);

void save_grid_binary(const std::filesystem::path& path, const ParamGrid& grid);
ParamGrid load_grid_binary(const std::filesystem::path& path);

}  // namespace implicit
