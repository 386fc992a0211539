#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "htwin/mesh.hpp"

namespace htwin {

/// Legacy-text VTK unstructured grid with one point-data scalar array.
void export_field_vtk(const Mesh& mesh, std::span<const double> values,
                      const std::filesystem::path& path, const std::string& field_name = "field");

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void export_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

/// log10 |e|, with zero entries replaced by the smallest nonzero |e|.
std::vector<double> log_error_field(std::span<const double> error);

/// Writes <stem>_error.vtk and <stem>_log_error.vtk for error = gt - predicted.
void export_error_fields(const Mesh& mesh, std::span<const double> gt,
                         std::span<const double> predicted, const std::filesystem::path& stem);

}  // namespace htwin
