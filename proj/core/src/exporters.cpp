#include "htwin/exporters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "htwin/errors.hpp"

namespace htwin {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void export_field_vtk(const Mesh& mesh, std::span<const double> values,
                      const std::filesystem::path& path, const std::string& field_name) {
  if (static_cast<int>(values.size()) != mesh.num_nodes()) {
    throw DataError("export_field_vtk: field length does not match node count");
  }
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << field_name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Point2& p : mesh.nodes) out << num(p.x) << ' ' << num(p.y) << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const Triangle& t : mesh.triangles) {
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int i = 0; i < mesh.num_triangles(); ++i) out << "5\n";
  out << "POINT_DATA " << mesh.num_nodes() << '\n';
  out << "SCALARS " << field_name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : values) out << num(v) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void export_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw DataError("export_csv: row width does not match the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << num(row[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("read_csv: missing header in " + path.string());
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("read_csv: bad number '" + cell + "' in " + path.string());
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> log_error_field(std::span<const double> error) {
  double floor_value = std::numeric_limits<double>::infinity();
  for (double e : error) {
    if (e != 0.0) floor_value = std::min(floor_value, std::abs(e));
  }
  std::vector<double> out(error.size());
  if (!std::isfinite(floor_value)) {
    // Nothing nonzero to clamp to.
    std::fill(out.begin(), out.end(), std::log10(std::numeric_limits<double>::min()));
    return out;
  }
  for (std::size_t i = 0; i < error.size(); ++i) {
    out[i] = std::log10(std::max(std::abs(error[i]), floor_value));
  }
  return out;
}

void export_error_fields(const Mesh& mesh, std::span<const double> gt,
                         std::span<const double> predicted, const std::filesystem::path& stem) {
  if (gt.size() != predicted.size()) throw DataError("export_error_fields: length mismatch");
  std::vector<double> err(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) err[i] = gt[i] - predicted[i];
  export_field_vtk(mesh, err, stem.string() + "_error.vtk", "error");
  export_field_vtk(mesh, log_error_field(err), stem.string() + "_log_error.vtk", "log10_error");
}

}  // namespace htwin
