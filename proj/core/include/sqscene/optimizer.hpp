#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sqscene/field.hpp"
#include "sqscene/grid.hpp"
#include "sqscene/losses.hpp"

namespace sqs {

struct FitConfig {
  int primitive_count = 1600;
  PrimitiveKind kind = PrimitiveKind::Superquadric;
  int iterations = 1000;
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;  // decoupled
  EpsBounds eps_bounds;        // (0.1, 2)
  /// -1: primitive_count / 2.
  int prune_split_count = -1;
  /// Iteration of the single prune-split event; -1: 60% of iterations.
  int prune_split_at = -1;
  LossWeights loss_weights;
  std::uint64_t rng_seed = 0;
  int batch_points = 4096;
  /// Support cutoff used for both the value and gradient paths during
  /// fitting; infinity disables culling.
  double cutoff_f = 12.0;
  bool opacity_scaled_geometry = false;
  bool cosine_schedule = true;
  /// Metric checkpoints (loss + IoU/mIoU via rasterization) every this many
  /// iterations; <= 0 records only the prune-split event and the final state.
  int checkpoint_interval = 0;
  double tau = 0.5;

  int resolved_prune_split_count() const {
    return prune_split_count < 0 ? primitive_count / 2 : prune_split_count;
  }
  int resolved_prune_split_at() const {
    return prune_split_at < 0 ? (iterations * 3) / 5 : prune_split_at;
  }
};

struct StepReport {
  double ce = 0.0;
  double lovasz = 0.0;
  double total = 0.0;
};

struct FitCheckpoint {
  int iteration = 0;
  double loss = 0.0;
  double iou = 0.0;
  double miou = 0.0;
};

struct FitResult {
  std::vector<Primitive> primitives;
  PrimitiveKind kind = PrimitiveKind::Superquadric;
  std::vector<double> loss_history;      // per iteration
  std::vector<FitCheckpoint> checkpoints;
};

/// Random initial set: positions uniform over the volume, scales uniform in
/// [0.5, 2] voxel diagonals, identity rotations, opacity 0.5, eps = 1,
/// uniform semantics. Deterministic per rng_seed.
std::vector<Primitive> init_primitives(const FitConfig& config, const GridSpec& spec,
                                       int class_count);

/// Removes the n smallest primitives by effective volume a*sx*sy*sz and
/// splits the n largest along their local longest axis (children at
/// +/- half the halved extent, halved scale on that axis, other attributes
/// inherited). Surviving primitives keep their slots; count is preserved.
/// Returns the indices of slots whose contents changed via `touched` when
/// non-null. Throws std::invalid_argument when 2n exceeds the count.
std::vector<Primitive> prune_and_split(std::vector<Primitive> primitives, int n,
                                       std::vector<std::size_t>* touched = nullptr);

/// Per-scene gradient fitting with AdamW on reparameterized attributes.
class Fitter {
 public:
  Fitter(const OccupancyGrid& scene, const FitConfig& config);

  /// One optimization step over a fresh voxel batch.
  /// Throws std::runtime_error with offending primitive indices on a
  /// non-finite loss or gradient.
  StepReport step();

  /// Applies the prune-split event and resets moments of affected slots.
  void apply_prune_split();

  std::vector<Primitive> primitives() const;
  int iteration() const { return step_count_; }

  struct ObjectiveReport {
    double ce = 0.0;
    double lovasz = 0.0;
    double total = 0.0;
    std::vector<double> gradient;  // w.r.t. the flat parameter vector
  };

  /// Loss and flat-parameter gradient over the given voxels, without
  /// updating parameters. Used by the optimization step and by
  /// finite-difference checks.
  ObjectiveReport objective(std::span<const std::size_t> voxel_ids) const;

  const std::vector<double>& parameters() const { return params_; }
  std::vector<double>& mutable_parameters() { return params_; }

  /// Full schedule: iterations steps with the event at its configured index,
  /// checkpoint metrics per config.
  FitResult run(const std::function<void(const FitCheckpoint&)>& on_checkpoint = {});

 private:
  void pack(const std::vector<Primitive>& prims);
  void unpack_into(std::vector<Primitive>& prims) const;
  int stride() const;
  FitCheckpoint measure(int iteration, double loss) const;

  const OccupancyGrid& scene_;
  FitConfig config_;
  int class_count_;
  double max_scale_;

  std::vector<double> params_;
  std::vector<double> m_;   // first moment
  std::vector<double> v_;   // second moment
  std::vector<std::size_t> sample_pool_;
  std::mt19937_64 rng_;
  int step_count_ = 0;
};

FitResult fit(const OccupancyGrid& scene, const FitConfig& config,
              const std::function<void(const FitCheckpoint&)>& on_checkpoint = {});

}  // namespace sqs
