#include "trojatensor/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "trojatensor/atf.hpp"
#include "trojatensor/parallel.hpp"

namespace trojatensor {

using nlohmann::json;

ModelLabel parse_label(std::string_view text) {
  if (text == "clean") return ModelLabel::Clean;
  if (text == "backdoor") return ModelLabel::Backdoor;
  if (text == "unknown") return ModelLabel::Unknown;
  raise(ErrorCode::SchemaViolation,
        "field 'label' must be clean|backdoor|unknown, got '" + std::string(text) + "'");
}

ModelSplit parse_split(std::string_view text) {
  if (text == "train") return ModelSplit::Train;
  if (text == "test") return ModelSplit::Test;
  raise(ErrorCode::SchemaViolation,
        "field 'split' must be train|test, got '" + std::string(text) + "'");
}

void ZooManifest::validate() const {
  if (model_count() < 2) {
    raise(ErrorCode::SchemaViolation, "field 'models' must list at least 2 models");
  }
  if (exemplars_per_class < 2) {
    raise(ErrorCode::SchemaViolation, "field 'exemplars_per_class' must be >= 2");
  }
  if (num_classes < 2) {
    raise(ErrorCode::SchemaViolation, "field 'num_classes' must be >= 2");
  }
  std::unordered_set<std::string> seen;
  for (const ModelEntry& entry : models) {
    if (entry.id.empty()) {
      raise(ErrorCode::SchemaViolation, "field 'id' must be non-empty");
    }
    if (!seen.insert(entry.id).second) {
      raise(ErrorCode::DuplicateModelId, "model id '" + entry.id + "' appears more than once");
    }
    if (entry.split == ModelSplit::Train && entry.label == ModelLabel::Unknown) {
      raise(ErrorCode::SchemaViolation,
            "field 'label' of train model '" + entry.id + "' must be clean or backdoor");
    }
  }
}

namespace {

template <typename T>
T require_field(const json& node, const char* key) {
  if (!node.contains(key)) {
    raise(ErrorCode::SchemaViolation, std::string("field '") + key + "' is missing");
  }
  try {
    return node.at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorCode::SchemaViolation, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

ZooManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::MissingFile, "manifest '" + path.string() + "' does not exist");
  }
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::IoFailure, "cannot open manifest '" + path.string() + "'");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaViolation, "manifest is not valid JSON: " + std::string(e.what()));
  }

  ZooManifest manifest;
  manifest.exemplars_per_class = require_field<Index>(doc, "exemplars_per_class");
  manifest.num_classes = require_field<Index>(doc, "num_classes");
  if (doc.contains("notes")) manifest.notes = require_field<std::string>(doc, "notes");

  const json models = require_field<json>(doc, "models");
  if (!models.is_array()) {
    raise(ErrorCode::SchemaViolation, "field 'models' must be an array");
  }
  const std::filesystem::path base = path.has_parent_path()
                                         ? path.parent_path()
                                         : std::filesystem::path(".");
  for (const json& node : models) {
    ModelEntry entry;
    entry.id = require_field<std::string>(node, "id");
    std::filesystem::path file = require_field<std::string>(node, "path");
    entry.path = file.is_absolute() ? file : base / file;
    entry.label = parse_label(require_field<std::string>(node, "label"));
    entry.split = parse_split(require_field<std::string>(node, "split"));
    if (node.contains("arch")) entry.arch = require_field<std::string>(node, "arch");
    manifest.models.push_back(std::move(entry));
  }

  manifest.validate();

  // Every referenced file must exist and agree on the exemplar grid.
  for (const ModelEntry& entry : manifest.models) {
    if (!std::filesystem::exists(entry.path)) {
      raise(ErrorCode::MissingFile,
            "model '" + entry.id + "' references missing file '" + entry.path.string() + "'");
    }
    const atf::Header header = atf::read_header(entry.path);
    if (header.exemplars != manifest.exemplars_per_class ||
        header.classes != manifest.num_classes) {
      raise(ErrorCode::InconsistentShape,
            "model '" + entry.id + "' stores grid " + std::to_string(header.exemplars) + "x" +
                std::to_string(header.classes) + ", manifest declares " +
                std::to_string(manifest.exemplars_per_class) + "x" +
                std::to_string(manifest.num_classes));
    }
  }
  return manifest;
}

void save_manifest(const ZooManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["exemplars_per_class"] = manifest.exemplars_per_class;
  doc["num_classes"] = manifest.num_classes;
  if (!manifest.notes.empty()) doc["notes"] = manifest.notes;
  doc["models"] = json::array();
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                            : std::filesystem::path(".");
  for (const ModelEntry& entry : manifest.models) {
    json node;
    node["id"] = entry.id;
    node["path"] = entry.path.lexically_proximate(base).generic_string();
    node["label"] = std::string(to_string(entry.label));
    node["split"] = std::string(to_string(entry.split));
    node["arch"] = entry.arch;
    doc["models"].push_back(std::move(node));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    raise(ErrorCode::IoFailure, "cannot open manifest '" + path.string() + "' for writing");
  }
  out << doc.dump(2) << '\n';
  if (!out) {
    raise(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
  }
}

std::vector<ActivationSet> load_zoo_activations(const ZooManifest& manifest) {
  std::vector<ActivationSet> sets(manifest.models.size());
  parallel_for(manifest.models.size(), [&](std::size_t k) {
    sets[k] = atf::read_activations(manifest.models[k], manifest.exemplars_per_class,
                                    manifest.num_classes);
  });
  return sets;
}

}  // namespace trojatensor
