#include "sqscene/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sqs {

namespace {
constexpr double kProbFloor = 1e-12;
}

Eigen::VectorXd full_class_probs(double p_occ, const Eigen::VectorXd& p_sem) {
  Eigen::VectorXd out(p_sem.size() + 1);
  out[0] = 1.0 - p_occ;
  out.tail(p_sem.size()) = p_occ * p_sem;
  return out;
}

CrossEntropyResult cross_entropy(std::span<const Eigen::VectorXd> probs,
                                 std::span<const std::uint8_t> labels,
                                 std::optional<Eigen::VectorXd> class_weights) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("cross_entropy: shape mismatch");
  }
  CrossEntropyResult out;
  out.d_probs.reserve(probs.size());
  double sum = 0.0;
  double weight_sum = 0.0;
  const std::size_t n = probs.size();
  std::vector<double> voxel_w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || label >= probs[i].size()) {
      throw std::invalid_argument("cross_entropy: label out of range");
    }
    if (class_weights) {
      if (class_weights->size() != probs[i].size()) {
        throw std::invalid_argument("cross_entropy: class_weights size mismatch");
      }
      voxel_w[i] = (*class_weights)[label];
    }
    weight_sum += voxel_w[i];
  }
  if (weight_sum <= 0.0) weight_sum = 1.0;

  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    const double p = probs[i][label];
    const double pf = std::max(p, kProbFloor);
    sum += -voxel_w[i] * std::log(pf);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(probs[i].size());
    if (p > kProbFloor) {
      g[label] = -voxel_w[i] / (p * weight_sum);
    }
    out.d_probs.push_back(std::move(g));
  }
  out.value = sum / weight_sum;
  return out;
}

LovaszResult lovasz_softmax(std::span<const Eigen::VectorXd> probs,
                            std::span<const std::uint8_t> labels,
                            bool present_classes_only) {
  if (probs.size() != labels.size()) {
    throw std::invalid_argument("lovasz_softmax: shape mismatch");
  }
  LovaszResult out;
  const std::size_t n = probs.size();
  if (n == 0) return out;
  const Eigen::Index nc = probs[0].size();
  out.d_probs.assign(n, Eigen::VectorXd::Zero(nc));

  std::vector<std::size_t> order(n);
  std::vector<double> errors(n);
  std::vector<char> fg(n);

  double total = 0.0;
  int counted = 0;
  for (Eigen::Index c = 0; c < nc; ++c) {
    int positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
      fg[i] = labels[i] == c ? 1 : 0;
      positives += fg[i];
      errors[i] = fg[i] ? 1.0 - probs[i][c] : probs[i][c];
    }
    if (present_classes_only && positives == 0) continue;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (errors[a] != errors[b]) return errors[a] > errors[b];
      return a < b;  // deterministic tie-break by voxel index
    });

    // discrete gradient of the Lovasz extension of the Jaccard loss
    double inter = positives;
    double uni = positives;
    double prev_jaccard = 0.0;
    double loss_c = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = order[k];
      if (fg[i]) {
        inter -= 1.0;
      } else {
        uni += 1.0;
      }
      const double jaccard = 1.0 - (uni > 0.0 ? inter / uni : 0.0);
      const double grad = jaccard - prev_jaccard;
      prev_jaccard = jaccard;
      loss_c += errors[i] * grad;
      out.d_probs[i][c] += (fg[i] ? -grad : grad);
    }
    total += loss_c;
    ++counted;
  }
  if (counted > 0) {
    total /= counted;
    for (auto& g : out.d_probs) g /= counted;
  }
  out.value = total;
  return out;
}

LossReport evaluate_losses(std::span<const double> p_occ,
                           std::span<const Eigen::VectorXd> p_sem,
                           std::span<const std::uint8_t> labels,
                           const LossWeights& weights, bool present_classes_only,
                           std::optional<Eigen::VectorXd> class_weights) {
  if (p_occ.size() != p_sem.size() || p_occ.size() != labels.size()) {
    throw std::invalid_argument("evaluate_losses: shape mismatch");
  }
  const std::size_t n = p_occ.size();
  std::vector<Eigen::VectorXd> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = full_class_probs(p_occ[i], p_sem[i]);
  }

  const CrossEntropyResult ce = cross_entropy(probs, labels, std::move(class_weights));
  const LovaszResult lov = lovasz_softmax(probs, labels, present_classes_only);

  LossReport report;
  report.ce = ce.value;
  report.lovasz = lov.value;
  report.total = weights.ce * ce.value + weights.lovasz * lov.value;
  report.grads.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd d_probs =
        weights.ce * ce.d_probs[i] + weights.lovasz * lov.d_probs[i];
    LossGrad& g = report.grads[i];
    const Eigen::Index c = p_sem[i].size();
    // through P(empty) = 1 - p_occ, P(k) = p_occ * p_sem[k]
    g.d_p_occ = -d_probs[0];
    g.d_p_sem = Eigen::VectorXd::Zero(c);
    for (Eigen::Index k = 0; k < c; ++k) {
      g.d_p_occ += d_probs[k + 1] * p_sem[i][k];
      g.d_p_sem[k] = d_probs[k + 1] * p_occ[i];
    }
  }
  return report;
}

}  // namespace sqs
