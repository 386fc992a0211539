#include "htwin/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "htwin/errors.hpp"
#include "json.hpp"

namespace htwin {

using nlohmann::json;

namespace {

json scaler_json(const nn::MinMaxScaler& s) { return {{"min", s.min}, {"max", s.max}}; }

nn::MinMaxScaler scaler_from(const json& j, int channels, const char* name) {
  nn::MinMaxScaler s;
  s.min = j.at("min").get<std::vector<double>>();
  s.max = j.at("max").get<std::vector<double>>();
  if (s.channels() != channels || s.max.size() != s.min.size()) {
    throw DataError(std::string("checkpoint: scaler '") + name + "' has wrong channel count");
  }
  return s;
}

}  // namespace

std::string checkpoint_to_json(GnnModel& model, const FeatureScalers& scalers,
                               const std::string& target_kind) {
  json doc;
  doc["format"] = kCheckpointFormat;
  doc["target_kind"] = target_kind;
  const GnnConfig& c = model.config;
  doc["architecture"] = {{"hidden_dim", c.hidden_dim},
                         {"message_passing_steps", c.message_passing_steps},
                         {"node_feature_dim", c.node_feature_dim},
                         {"edge_feature_dim", c.edge_feature_dim},
                         {"output_dim", c.output_dim}};
  doc["scalers"] = {{"temperature", scaler_json(scalers.temperature)},
                    {"edge", scaler_json(scalers.edge)},
                    {"target", scaler_json(scalers.target)}};
  json params = json::array();
  for (const nn::Tensor2D* p : model.parameters()) {
    std::vector<double> flat(p->value.data(), p->value.data() + p->value.size());
    params.push_back({{"shape", {p->rows(), p->cols()}}, {"data", std::move(flat)}});
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw DataError("checkpoint: unsupported format tag '" +
                      doc.at("format").get<std::string>() + "'");
    }
    const json& a = doc.at("architecture");
    Checkpoint ck;
    ck.target_kind = doc.at("target_kind").get<std::string>();
    ck.model = init_model(0, a.at("hidden_dim").get<int>(),
                          a.at("message_passing_steps").get<int>(),
                          a.at("node_feature_dim").get<int>(),
                          a.at("edge_feature_dim").get<int>(), a.at("output_dim").get<int>());
    const json& s = doc.at("scalers");
    ck.scalers.temperature = scaler_from(s.at("temperature"), 1, "temperature");
    ck.scalers.edge = scaler_from(s.at("edge"), ck.model.config.edge_feature_dim, "edge");
    ck.scalers.target = scaler_from(s.at("target"), ck.model.config.output_dim, "target");

    const json& params = doc.at("parameters");
    std::vector<nn::Tensor2D*> slots = ck.model.parameters();
    if (params.size() != slots.size()) {
      throw DataError("checkpoint: expected " + std::to_string(slots.size()) +
                      " parameter arrays, found " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const int r = params[i].at("shape").at(0).get<int>();
      const int cc = params[i].at("shape").at(1).get<int>();
      if (r != slots[i]->rows() || cc != slots[i]->cols()) {
        throw DataError("checkpoint: parameter " + std::to_string(i) + " has shape " +
                        std::to_string(r) + "x" + std::to_string(cc));
      }
      const auto data = params[i].at("data").get<std::vector<double>>();
      if (static_cast<long>(data.size()) != slots[i]->value.size()) {
        throw DataError("checkpoint: parameter " + std::to_string(i) + " has wrong length");
      }
      std::copy(data.begin(), data.end(), slots[i]->value.data());
    }
    ck.model.validate();
    return ck;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(GnnModel& model, const FeatureScalers& scalers,
                     const std::string& target_kind, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, scalers, target_kind) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace htwin
