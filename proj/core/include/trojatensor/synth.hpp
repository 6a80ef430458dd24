#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "trojatensor/types.hpp"

namespace trojatensor {

/// Synthetic model zoo: clean models emit i.i.d. Gaussian activations;
/// backdoor models add a planted low-dimensional component shared across
/// them, scaled to the requested per-entry signal-to-noise ratio.
struct SynthSpec {
  Index models = 60;  // K
  double backdoor_fraction = 0.5;
  Index exemplars = 10;  // M
  Index classes = 10;    // C
  Index min_width = 64;  // d range, inclusive
  Index max_width = 512;
  Index shared_dim = 5;
  double snr_db = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws SpecViolation
};

struct SynthZoo {
  ZooManifest manifest;  // entry paths are filled in by write_zoo
  std::vector<ActivationSet> activations;
  std::vector<bool> truth_backdoor;  // ground truth per model, manifest order
};

/// Deterministic per seed. Backdoor models come first in manifest order, and
/// both groups alternate train/test round-robin. The planted component is a
/// latent exemplar basis (common to all backdoor models) pushed through a
/// width-truncated master embedding, so backdoor activation subspaces agree
/// on overlapping coordinates -- the premise the detector exploits.
SynthZoo generate_zoo(const SynthSpec& spec);

/// Writes manifest.json, atf/<id>.atf files, and truth.csv under dir.
void write_zoo(SynthZoo& zoo, const std::filesystem::path& dir);

}  // namespace trojatensor
