#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sqs {

/// (C+1)-way distribution from occupancy and per-class probabilities:
/// P(empty) = 1 - p_occ, P(class k) = p_occ * p_sem[k].
Eigen::VectorXd full_class_probs(double p_occ, const Eigen::VectorXd& p_sem);

struct CrossEntropyResult {
  double value = 0.0;
  /// d value / d probs, same shape as the input rows.
  std::vector<Eigen::VectorXd> d_probs;
};

/// Mean over voxels of -ln(P(label)), probabilities floored at 1e-12.
/// probs rows are (C+1)-vectors with entry 0 = empty; labels in {0..C}.
/// Optional class_weights (size C+1) weight each voxel by its label's weight.
/// Throws std::invalid_argument on out-of-range labels.
CrossEntropyResult cross_entropy(std::span<const Eigen::VectorXd> probs,
                                 std::span<const std::uint8_t> labels,
                                 std::optional<Eigen::VectorXd> class_weights = {});

struct LovaszResult {
  double value = 0.0;
  std::vector<Eigen::VectorXd> d_probs;
};

/// Lovasz-softmax surrogate of the Jaccard loss: per class, errors sorted
/// descending (ties by voxel index) and weighted by the discrete gradient of
/// the Lovasz extension, averaged over classes. Classes absent from the
/// labels are skipped when present_classes_only is set.
LovaszResult lovasz_softmax(std::span<const Eigen::VectorXd> probs,
                            std::span<const std::uint8_t> labels,
                            bool present_classes_only = true);

struct LossWeights {
  double ce = 1.0;
  double lovasz = 1.0;
};

struct LossGrad {
  double d_p_occ = 0.0;
  Eigen::VectorXd d_p_sem;
};

struct LossReport {
  double ce = 0.0;
  double lovasz = 0.0;
  double total = 0.0;
  std::vector<LossGrad> grads;  // per voxel, w.r.t. (p_occ, p_sem)
};

/// Composes full_class_probs with both losses and chains the gradients back
/// to (p_occ, p_sem) per voxel.
LossReport evaluate_losses(std::span<const double> p_occ,
                           std::span<const Eigen::VectorXd> p_sem,
                           std::span<const std::uint8_t> labels,
                           const LossWeights& weights = {},
                           bool present_classes_only = true,
                           std::optional<Eigen::VectorXd> class_weights = {});

}  // namespace sqs
