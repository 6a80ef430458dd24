#pragma once

#include <filesystem>
#include <vector>

#include "trojatensor/types.hpp"

namespace trojatensor {

/// Parses the zoo manifest JSON, resolves model paths against the manifest
/// directory, and validates shapes against every referenced ATF header.
ZooManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const ZooManifest& manifest, const std::filesystem::path& path);

/// Loads every model's activations (parallel across files), checking each
/// against the zoo-wide exemplar grid.
std::vector<ActivationSet> load_zoo_activations(const ZooManifest& manifest);

}  // namespace trojatensor
