#pragma once

#include <filesystem>
#include <string>

#include "htwin/gnn.hpp"

namespace htwin {

inline constexpr const char* kCheckpointFormat = "htwin-gnn-checkpoint/1";

struct Checkpoint {
  GnnModel model;
  FeatureScalers scalers;
  std::string target_kind;  // "gap" or "increment"
};

std::string checkpoint_to_json(GnnModel& model, const FeatureScalers& scalers,
                               const std::string& target_kind);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(GnnModel& model, const FeatureScalers& scalers,
                     const std::string& target_kind, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace htwin
