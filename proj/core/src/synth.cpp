#include "trojatensor/synth.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "trojatensor/atf.hpp"
#include "trojatensor/error.hpp"
#include "trojatensor/manifest.hpp"
#include "trojatensor/parallel.hpp"
#include "trojatensor/rng.hpp"

namespace trojatensor {

void SynthSpec::validate() const {
  if (models < 2) raise(ErrorCode::SpecViolation, "need at least 2 models");
  if (backdoor_fraction < 0.0 || backdoor_fraction > 1.0) {
    raise(ErrorCode::SpecViolation, "backdoor_fraction must lie in [0, 1]");
  }
  if (exemplars < 2 || classes < 2) {
    raise(ErrorCode::SpecViolation, "exemplar grid needs M >= 2 and C >= 2");
  }
  if (shared_dim < 1) raise(ErrorCode::SpecViolation, "shared_dim must be >= 1");
  if (min_width < shared_dim) {
    raise(ErrorCode::SpecViolation, "min_width must be >= shared_dim");
  }
  if (max_width < min_width) raise(ErrorCode::SpecViolation, "max_width must be >= min_width");
}

SynthZoo generate_zoo(const SynthSpec& spec) {
  spec.validate();
  const Index grid = spec.exemplars * spec.classes;  // MC
  const Index backdoor_count =
      static_cast<Index>(std::llround(spec.backdoor_fraction * static_cast<double>(spec.models)));

  // Latent exemplar basis Z (MC x s), shared by every backdoor model.
  Eigen::MatrixXd latent(grid, spec.shared_dim);
  {
    CounterRng rng(derive_key(spec.seed, "synth.latent"));
    for (Index i = 0; i < grid; ++i) {
      for (Index j = 0; j < spec.shared_dim; ++j) latent(i, j) = rng.next_normal();
    }
  }
  // Master embedding (s x d_max); model k uses the first d_k columns, so
  // planted subspaces coincide on overlapping activation coordinates.
  Eigen::MatrixXd embedding(spec.shared_dim, spec.max_width);
  for (Index j = 0; j < spec.max_width; ++j) {
    CounterRng rng(derive_key(derive_key(spec.seed, "synth.embed"), static_cast<std::uint64_t>(j)));
    for (Index i = 0; i < spec.shared_dim; ++i) embedding(i, j) = rng.next_normal();
  }

  // Per-entry SNR: the planted entry variance is gain * shared_dim.
  const double snr = std::pow(10.0, spec.snr_db / 10.0);
  const double gain = std::sqrt(snr / static_cast<double>(spec.shared_dim));

  SynthZoo zoo;
  zoo.manifest.exemplars_per_class = spec.exemplars;
  zoo.manifest.num_classes = spec.classes;
  zoo.manifest.notes = "synthetic zoo";
  zoo.manifest.models.resize(static_cast<std::size_t>(spec.models));
  zoo.activations.resize(static_cast<std::size_t>(spec.models));
  zoo.truth_backdoor.resize(static_cast<std::size_t>(spec.models));

  parallel_for(static_cast<std::size_t>(spec.models), [&](std::size_t at) {
    const Index k = static_cast<Index>(at);
    const bool backdoor = k < backdoor_count;
    const Index width =
        spec.min_width +
        static_cast<Index>(
            CounterRng(derive_key(derive_key(spec.seed, "synth.width"),
                                  static_cast<std::uint64_t>(k)))
                .next_int(0, spec.max_width - spec.min_width));

    Eigen::MatrixXd data(grid, width);
    CounterRng noise(derive_key(derive_key(spec.seed, "synth.noise"), static_cast<std::uint64_t>(k)));
    for (Index i = 0; i < grid; ++i) {
      for (Index j = 0; j < width; ++j) data(i, j) = noise.next_normal();
    }
    if (backdoor) {
      data.noalias() += gain * latent * embedding.leftCols(width);
    }

    ActivationSet set;
    const char* prefix = backdoor ? "bd" : "cl";
    const Index group_index = backdoor ? k : k - backdoor_count;
    char id[16];
    std::snprintf(id, sizeof(id), "%s%03lld", prefix, static_cast<long long>(k));
    set.model_id = id;
    set.exemplars = spec.exemplars;
    set.classes = spec.classes;
    set.width = width;
    set.values.resize(static_cast<std::size_t>(grid * width));
    for (Index i = 0; i < grid; ++i) {
      for (Index j = 0; j < width; ++j) {
        set.values[static_cast<std::size_t>(i * width + j)] = static_cast<float>(data(i, j));
      }
    }

    ModelEntry entry;
    entry.id = set.model_id;
    entry.path = set.model_id + ".atf";
    entry.label = backdoor ? ModelLabel::Backdoor : ModelLabel::Clean;
    entry.split = (group_index % 2 == 0) ? ModelSplit::Train : ModelSplit::Test;
    entry.arch = "synthetic";

    zoo.truth_backdoor[at] = backdoor;
    zoo.activations[at] = std::move(set);
    zoo.manifest.models[at] = std::move(entry);
  });

  return zoo;
}

void write_zoo(SynthZoo& zoo, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "atf", ec);
  if (ec) {
    raise(ErrorCode::IoFailure, "cannot create zoo directory '" + dir.string() + "'");
  }

  for (std::size_t k = 0; k < zoo.activations.size(); ++k) {
    const std::filesystem::path file = dir / "atf" / (zoo.activations[k].model_id + ".atf");
    atf::write(zoo.activations[k], file);
    zoo.manifest.models[k].path = file;
  }
  save_manifest(zoo.manifest, dir / "manifest.json");

  std::ofstream truth(dir / "truth.csv", std::ios::trunc);
  if (!truth) {
    raise(ErrorCode::IoFailure, "cannot write truth.csv under '" + dir.string() + "'");
  }
  truth << "model_id,label\n";
  for (std::size_t k = 0; k < zoo.manifest.models.size(); ++k) {
    truth << zoo.manifest.models[k].id << ','
          << (zoo.truth_backdoor[k] ? "backdoor" : "clean") << '\n';
  }
}

}  // namespace trojatensor
