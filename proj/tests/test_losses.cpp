#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sqscene/losses.hpp"

using namespace sqs;

namespace {

// Direct evaluation of the Lovasz extension of the Jaccard loss for one
// class: sort errors descending, accumulate the discrete gradient.
double lovasz_extension_oracle(std::vector<double> errors, std::vector<int> fg) {
  const std::size_t n = errors.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return errors[a] > errors[b];
  });
  const double positives =
      static_cast<double>(std::accumulate(fg.begin(), fg.end(), 0));
  double inter = positives;
  double uni = positives;
  double prev_jaccard = 0.0;
  double value = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = order[r];
    inter -= fg[i];
    uni += 1 - fg[i];
    const double jaccard = 1.0 - (uni > 0 ? inter / uni : 1.0);
    value += errors[i] * (jaccard - prev_jaccard);
    prev_jaccard = jaccard;
  }
  return value;
}

std::vector<Eigen::VectorXd> random_probs(std::mt19937_64& rng, std::size_t n,
                                          int classes) {
  std::normal_distribution<double> n01;
  std::vector<Eigen::VectorXd> probs(n);
  for (auto& row : probs) {
    Eigen::VectorXd logits(classes);
    for (int k = 0; k < classes; ++k) logits[k] = n01(rng);
    const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    row = e / e.sum();
  }
  return probs;
}

}  // namespace

TEST_CASE("full_class_probs") {
  Eigen::VectorXd sem(2);
  sem << 0.25, 0.75;
  const Eigen::VectorXd full = full_class_probs(0.8, sem);
  REQUIRE(full.size() == 3);
  CHECK(full[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(full[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(full[2] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(full.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cross_entropy hand examples") {
  std::vector<Eigen::VectorXd> probs(2, Eigen::VectorXd(3));
  probs[0] << 0.5, 0.25, 0.25;
  probs[1] << 0.1, 0.8, 0.1;
  const std::vector<std::uint8_t> labels = {0, 1};
  const CrossEntropyResult r = cross_entropy(probs, labels);
  CHECK(r.value ==
        doctest::Approx(0.5 * (-std::log(0.5) - std::log(0.8))).epsilon(1e-14));
  // gradient is nonzero only at the label entry
  CHECK(r.d_probs[0][0] == doctest::Approx(-0.5 / 0.5).epsilon(1e-12));
  CHECK(r.d_probs[0][1] == 0.0);
  CHECK(r.d_probs[1][1] == doctest::Approx(-0.5 / 0.8).epsilon(1e-12));
}

TEST_CASE("cross_entropy floor and errors") {
  std::vector<Eigen::VectorXd> probs(1, Eigen::VectorXd(2));
  probs[0] << 1.0, 0.0;
  const std::vector<std::uint8_t> labels = {1};
  const CrossEntropyResult r = cross_entropy(probs, labels);
  CHECK(r.value == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(r.d_probs[0][1] == 0.0);  // clipped region: no gradient

  const std::vector<std::uint8_t> bad = {2};
  CHECK_THROWS_AS(cross_entropy(probs, bad), std::invalid_argument);
}

TEST_CASE("cross_entropy class weights") {
  std::vector<Eigen::VectorXd> probs(2, Eigen::VectorXd(2));
  probs[0] << 0.5, 0.5;
  probs[1] << 0.5, 0.5;
  const std::vector<std::uint8_t> labels = {0, 1};
  Eigen::VectorXd w(2);
  w << 0.0, 2.0;
  const CrossEntropyResult r = cross_entropy(probs, labels, w);
  CHECK(r.value == doctest::Approx(-std::log(0.5)).epsilon(1e-14));
  CHECK(r.d_probs[0][0] == 0.0);  // zero-weight label contributes nothing
}

TEST_CASE("cross_entropy gradient vs finite differences") {
  std::mt19937_64 rng(5);
  auto probs = random_probs(rng, 12, 4);
  std::vector<std::uint8_t> labels(probs.size());
  std::uniform_int_distribution<int> ul(0, 3);
  for (auto& l : labels) l = static_cast<std::uint8_t>(ul(rng));
  const CrossEntropyResult r = cross_entropy(probs, labels);
  const double h = 1e-7;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    for (int k = 0; k < 4; ++k) {
      auto plus = probs, minus = probs;
      plus[v][k] += h;
      minus[v][k] -= h;
      const double fd = (cross_entropy(plus, labels).value -
                         cross_entropy(minus, labels).value) /
                        (2 * h);
      CHECK(r.d_probs[v][k] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("lovasz_softmax perfect and worst predictions") {
  std::vector<Eigen::VectorXd> probs(4, Eigen::VectorXd(2));
  const std::vector<std::uint8_t> labels = {0, 0, 1, 1};
  for (std::size_t v = 0; v < 4; ++v) {
    probs[v].setZero();
    probs[v][labels[v]] = 1.0;
  }
  CHECK(lovasz_softmax(probs, labels).value == doctest::Approx(0.0).epsilon(1e-15));

  for (std::size_t v = 0; v < 4; ++v) {
    probs[v].setZero();
    probs[v][1 - labels[v]] = 1.0;
  }
  CHECK(lovasz_softmax(probs, labels).value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lovasz_softmax matches direct extension evaluation") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> ul(0, 2);
  for (int trial = 0; trial < 50; ++trial) {
    auto probs = random_probs(rng, 10, 3);
    std::vector<std::uint8_t> labels(probs.size());
    for (auto& l : labels) l = static_cast<std::uint8_t>(ul(rng));
    const LovaszResult r = lovasz_softmax(probs, labels);

    double expected = 0.0;
    int present = 0;
    for (int c = 0; c < 3; ++c) {
      std::vector<int> fg(probs.size());
      bool any = false;
      for (std::size_t v = 0; v < probs.size(); ++v) {
        fg[v] = labels[v] == c;
        any = any || fg[v];
      }
      if (!any) continue;
      std::vector<double> errors(probs.size());
      for (std::size_t v = 0; v < probs.size(); ++v) {
        errors[v] = fg[v] ? 1.0 - probs[v][c] : probs[v][c];
      }
      expected += lovasz_extension_oracle(errors, fg);
      ++present;
    }
    expected /= present;
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("lovasz_softmax absent class handling") {
  std::vector<Eigen::VectorXd> probs(3, Eigen::VectorXd(3));
  for (auto& row : probs) row << 0.2, 0.5, 0.3;
  const std::vector<std::uint8_t> labels = {0, 0, 1};  // class 2 absent
  const LovaszResult present_only = lovasz_softmax(probs, labels, true);
  const LovaszResult all = lovasz_softmax(probs, labels, false);
  // counting absent classes adds their (pure false-positive mass) terms
  CHECK(all.value != doctest::Approx(present_only.value).epsilon(1e-12));
}

TEST_CASE("lovasz_softmax gradient vs finite differences") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> ul(0, 2);
  for (int trial = 0; trial < 10; ++trial) {
    auto probs = random_probs(rng, 8, 3);
    std::vector<std::uint8_t> labels(probs.size());
    for (auto& l : labels) l = static_cast<std::uint8_t>(ul(rng));
    const LovaszResult r = lovasz_softmax(probs, labels);
    const double h = 1e-7;
    for (std::size_t v = 0; v < probs.size(); ++v) {
      for (int k = 0; k < 3; ++k) {
        auto plus = probs, minus = probs;
        plus[v][k] += h;
        minus[v][k] -= h;
        const double fd = (lovasz_softmax(plus, labels).value -
                           lovasz_softmax(minus, labels).value) /
                          (2 * h);
        // piecewise linear: FD matches exactly away from sort boundaries
        CHECK(r.d_probs[v][k] == doctest::Approx(fd).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("evaluate_losses composition and chain rule") {
  std::mt19937_64 rng(17);
  const int classes = 3;
  const std::size_t n = 10;
  std::uniform_real_distribution<double> uo(0.05, 0.95);
  std::uniform_int_distribution<int> ul(0, classes);
  std::vector<double> p_occ(n);
  auto p_sem = random_probs(rng, n, classes);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t v = 0; v < n; ++v) {
    p_occ[v] = uo(rng);
    labels[v] = static_cast<std::uint8_t>(ul(rng));
  }
  const LossReport r = evaluate_losses(p_occ, p_sem, labels);
  CHECK(r.total == doctest::Approx(r.ce + r.lovasz).epsilon(1e-14));

  auto total_of = [&](const std::vector<double>& occ,
                      const std::vector<Eigen::VectorXd>& sem) {
    return evaluate_losses(occ, sem, labels).total;
  };
  const double h = 1e-7;
  for (std::size_t v = 0; v < n; ++v) {
    auto occ_p = p_occ, occ_m = p_occ;
    occ_p[v] += h;
    occ_m[v] -= h;
    const double fd = (total_of(occ_p, p_sem) - total_of(occ_m, p_sem)) / (2 * h);
    CHECK(r.grads[v].d_p_occ == doctest::Approx(fd).epsilon(1e-4));
    for (int k = 0; k < classes; ++k) {
      auto sem_p = p_sem, sem_m = p_sem;
      sem_p[v][k] += h;
      sem_m[v][k] -= h;
      const double fds =
          (total_of(p_occ, sem_p) - total_of(p_occ, sem_m)) / (2 * h);
      CHECK(r.grads[v].d_p_sem[k] == doctest::Approx(fds).epsilon(1e-4));
    }
  }
}

TEST_CASE("loss weights scale components") {
  std::vector<double> p_occ = {0.7, 0.3};
  std::vector<Eigen::VectorXd> p_sem(2, Eigen::VectorXd(2));
  p_sem[0] << 0.6, 0.4;
  p_sem[1] << 0.5, 0.5;
  const std::vector<std::uint8_t> labels = {1, 0};
  const LossReport base = evaluate_losses(p_occ, p_sem, labels);
  LossWeights w;
  w.ce = 2.0;
  w.lovasz = 0.5;
  const LossReport scaled = evaluate_losses(p_occ, p_sem, labels, w);
  CHECK(scaled.total ==
        doctest::Approx(2.0 * base.ce + 0.5 * base.lovasz).epsilon(1e-13));
}
