#include <fstream>
#include <sstream>

#include "htwin/errors.hpp"
#include "htwin/mesh.hpp"
#include "json.hpp"

namespace htwin {

using nlohmann::json;

std::string mesh_to_json(const Mesh& mesh) {
  json doc;
  json nodes = json::array();
  for (const Point2& p : mesh.nodes) nodes.push_back({p.x, p.y});
  json tris = json::array();
  for (const Triangle& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  json groups = json::array();
  for (NodeGroup g : mesh.groups) groups.push_back(static_cast<int>(g));
  doc["nodes"] = std::move(nodes);
  doc["triangles"] = std::move(tris);
  doc["groups"] = std::move(groups);
  if (mesh.domain_params) {
    doc["domain_params"] = {(*mesh.domain_params)[0], (*mesh.domain_params)[1]};
  }
  return doc.dump(1);
}

Mesh mesh_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("mesh file: ") + e.what());
  }
  Mesh mesh;
  try {
    for (const auto& p : doc.at("nodes")) {
      mesh.nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& t : doc.at("triangles")) {
      mesh.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    }
    for (const auto& g : doc.at("groups")) {
      const int v = g.get<int>();
      if (v < 0 || v >= kNodeGroupCount) throw DataError("mesh file: unknown group label");
      mesh.groups.push_back(static_cast<NodeGroup>(v));
    }
    if (doc.contains("domain_params") && !doc["domain_params"].is_null()) {
      const auto& dp = doc["domain_params"];
      mesh.domain_params = std::array<double, 2>{dp.at(0).get<double>(), dp.at(1).get<double>()};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("mesh file: ") + e.what());
  }
  mesh.validate();
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write mesh file " + path.string());
  out << mesh_to_json(mesh) << '\n';
  if (!out) throw IoError("failed writing mesh file " + path.string());
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing mesh file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return mesh_from_json(buffer.str());
}

}  // namespace htwin
