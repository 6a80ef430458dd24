#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trojatensor/error.hpp"

namespace trojatensor {

using Index = Eigen::Index;

enum class ModelLabel { Clean, Backdoor, Unknown };
enum class ModelSplit { Train, Test };

constexpr std::string_view to_string(ModelLabel label) noexcept {
  switch (label) {
    case ModelLabel::Clean: return "clean";
    case ModelLabel::Backdoor: return "backdoor";
    case ModelLabel::Unknown: return "unknown";
  }
  return "unknown";
}

constexpr std::string_view to_string(ModelSplit split) noexcept {
  return split == ModelSplit::Train ? "train" : "test";
}

ModelLabel parse_label(std::string_view text);
ModelSplit parse_split(std::string_view text);

struct ModelEntry {
  std::string id;
  std::filesystem::path path;  // ATF file, resolved against the manifest dir
  ModelLabel label = ModelLabel::Unknown;
  ModelSplit split = ModelSplit::Test;
  std::string arch;
};

/// Zoo description: K models sharing the same M x C exemplar grid.
struct ZooManifest {
  std::vector<ModelEntry> models;
  Index exemplars_per_class = 0;  // M
  Index num_classes = 0;          // C
  std::string notes;

  Index model_count() const noexcept { return static_cast<Index>(models.size()); }

  /// Checks K >= 2, id uniqueness, M/C bounds, and train-label presence.
  void validate() const;
};

/// One model's final-layer activations over M exemplars x C classes.
/// Values are kept in IEEE-754 binary32 exactly as stored on disk so that
/// write/read round trips are bit-exact. Only the final layer is kept, so the
/// layer count is structurally 1.
struct ActivationSet {
  static constexpr Index kLayerCount = 1;

  std::string model_id;
  Index exemplars = 0;  // M
  Index classes = 0;    // C
  Index width = 0;      // d_k, may differ between models
  std::vector<float> values;  // row-major (m, c, dim), dim fastest

  Index value_count() const noexcept { return exemplars * classes * width; }

  float at(Index m, Index c, Index dim) const {
    return values[static_cast<std::size_t>((m * classes + c) * width + dim)];
  }
  float& at(Index m, Index c, Index dim) {
    return values[static_cast<std::size_t>((m * classes + c) * width + dim)];
  }

  /// Checks M >= 2, C >= 2, d >= 1, storage size, and finiteness.
  void validate() const;
};

}  // namespace trojatensor
