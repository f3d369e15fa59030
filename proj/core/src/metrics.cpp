#include "sqscene/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqs {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const std::int64_t c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(const OccupancyGrid& pred, const OccupancyGrid& gt) {
  if (!(pred.spec == gt.spec)) {
    throw std::invalid_argument("confusion: GridSpec mismatch");
  }
  if (pred.class_count != gt.class_count) {
    throw std::invalid_argument("confusion: class_count mismatch");
  }
  ConfusionMatrix cm(gt.class_count);
  for (std::size_t v = 0; v < gt.labels.size(); ++v) {
    cm.at(gt.labels[v], pred.labels[v]) += 1;
  }
  return cm;
}

MiouResult miou(const ConfusionMatrix& cm) {
  MiouResult out;
  const int c1 = cm.class_count + 1;
  out.per_class_iou.assign(cm.class_count, std::numeric_limits<double>::quiet_NaN());
  out.counted.assign(cm.class_count, false);
  double sum = 0.0;
  int counted = 0;
  for (int c = 1; c < c1; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0, fn = 0;
    for (int o = 0; o < c1; ++o) {
      if (o != c) {
        fp += cm.at(o, c);
        fn += cm.at(c, o);
      }
    }
    const std::int64_t denom = tp + fp + fn;
    if (denom == 0) continue;  // class absent everywhere: excluded from mean
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    out.per_class_iou[c - 1] = iou;
    out.counted[c - 1] = true;
    sum += iou;
    ++counted;
  }
  out.miou = counted > 0 ? sum / counted : 0.0;
  return out;
}

double iou_binary(const ConfusionMatrix& cm) {
  const int c1 = cm.class_count + 1;
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (int g = 0; g < c1; ++g) {
    for (int p = 0; p < c1; ++p) {
      const bool g_occ = g != 0;
      const bool p_occ = p != 0;
      if (g_occ && p_occ) tp += cm.at(g, p);
      else if (!g_occ && p_occ) fp += cm.at(g, p);
      else if (g_occ && !p_occ) fn += cm.at(g, p);
    }
  }
  const std::int64_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace sqs
