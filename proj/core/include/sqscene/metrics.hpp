#pragma once

#include <cstdint>
#include <vector>

#include "sqscene/grid.hpp"

namespace sqs {

/// Rows = ground truth, columns = prediction, class 0 = empty.
struct ConfusionMatrix {
  int class_count = 0;  // number of semantic classes C; matrix is (C+1)^2
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int class_count_ = 0)
      : class_count(class_count_),
        counts(static_cast<std::size_t>(class_count_ + 1) * (class_count_ + 1), 0) {}

  std::int64_t& at(int gt, int pred) {
    return counts[static_cast<std::size_t>(gt) * (class_count + 1) + pred];
  }
  std::int64_t at(int gt, int pred) const {
    return counts[static_cast<std::size_t>(gt) * (class_count + 1) + pred];
  }
  std::int64_t total() const;
};

/// Per-voxel tally. Throws std::invalid_argument on GridSpec mismatch.
ConfusionMatrix confusion(const OccupancyGrid& pred, const OccupancyGrid& gt);

struct MiouResult {
  double miou = 0.0;
  std::vector<double> per_class_iou;  // size C, NaN where the class is absent
  std::vector<bool> counted;          // class entered the mean
};

/// mIoU over non-empty classes; classes with TP+FP+FN = 0 are excluded.
MiouResult miou(const ConfusionMatrix& cm);

/// Binary occupied-vs-empty IoU (all non-empty classes collapsed).
double iou_binary(const ConfusionMatrix& cm);

}  // namespace sqs
