#pragma once

#include <filesystem>
#include <string>

#include "trojatensor/types.hpp"

namespace trojatensor::atf {

/// ATF (Activation Tensor File), little-endian binary:
///   magic "ATF1" (41 54 46 31), u32 rank (= 3), u32 dims (M, C, d),
///   then M*C*d IEEE-754 float32 values in row-major order.

struct Header {
  Index exemplars = 0;
  Index classes = 0;
  Index width = 0;
};

/// Reads only the 16-byte header; used for cheap shape validation.
Header read_header(const std::filesystem::path& path);

ActivationSet read(const std::filesystem::path& path, const std::string& model_id = {});

/// Reads and checks the file against the zoo-wide exemplar grid.
ActivationSet read_activations(const ModelEntry& entry, Index exemplars, Index classes);

void write(const ActivationSet& set, const std::filesystem::path& path);

/// Converts a .npy v1.0 array (float32/float64, C-order, 3-d shape M x C x d)
/// to an ActivationSet; float64 input is narrowed to float32.
ActivationSet from_npy(const std::filesystem::path& path, const std::string& model_id = {});

}  // namespace trojatensor::atf
