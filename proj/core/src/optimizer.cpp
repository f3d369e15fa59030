#include "sqscene/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sqscene/metrics.hpp"
#include "sqscene/rasterizer.hpp"

namespace sqs {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return std::log(p / (1.0 - p));
}

constexpr double kScaleFloor = 1e-3;

}  // namespace

std::vector<Primitive> init_primitives(const FitConfig& config, const GridSpec& spec,
                                       int class_count) {
  spec.validate();
  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double voxel_diag = spec.voxel_size.norm();
  std::vector<Primitive> out(config.primitive_count);
  for (Primitive& p : out) {
    p.position = spec.origin + spec.extent().cwiseProduct(Vec3(u01(rng), u01(rng), u01(rng)));
    const double s = (0.5 + 1.5 * u01(rng)) * voxel_diag;
    p.scale = Vec3::Constant(s);
    p.rotation = UnitQuaternion::identity();
    p.opacity = 0.5;
    p.eps1 = 1.0;
    p.eps2 = 1.0;
    p.semantics = Eigen::VectorXd::Constant(class_count, 1.0 / class_count);
  }
  return out;
}

std::vector<Primitive> prune_and_split(std::vector<Primitive> primitives, int n,
                                       std::vector<std::size_t>* touched) {
  const int count = static_cast<int>(primitives.size());
  if (n < 0 || 2 * n > count) {
    throw std::invalid_argument("prune_and_split: need 0 <= 2n <= primitive count");
  }
  if (touched) touched->clear();
  if (n == 0) return primitives;

  std::vector<std::size_t> order(primitives.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto volume = [&](std::size_t i) {
    const Primitive& p = primitives[i];
    return p.opacity * p.scale.x() * p.scale.y() * p.scale.z();
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = volume(a), vb = volume(b);
    if (va != vb) return va < vb;
    return a < b;
  });

  for (int k = 0; k < n; ++k) {
    const std::size_t parent_slot = order[primitives.size() - 1 - k];
    const std::size_t prune_slot = order[k];
    Primitive parent = primitives[parent_slot];

    int axis = 0;
    if (parent.scale.y() > parent.scale[axis]) axis = 1;
    if (parent.scale.z() > parent.scale[axis]) axis = 2;

    const Eigen::Matrix3d rot = quat_to_rotmat(parent.rotation);
    const Vec3 dir = rot.row(axis).transpose();  // world direction of the local axis
    const double offset = parent.scale[axis] * 0.5;

    Primitive child = parent;
    child.scale[axis] = parent.scale[axis] * 0.5;
    Primitive child_a = child;
    Primitive child_b = child;
    child_a.position = parent.position + offset * dir;
    child_b.position = parent.position - offset * dir;

    primitives[parent_slot] = child_a;
    primitives[prune_slot] = child_b;
    if (touched) {
      touched->push_back(parent_slot);
      touched->push_back(prune_slot);
    }
  }
  return primitives;
}

int Fitter::stride() const { return 13 + class_count_; }

Fitter::Fitter(const OccupancyGrid& scene, const FitConfig& config)
    : scene_(scene), config_(config), class_count_(scene.class_count),
      rng_(config.rng_seed + 0x9e3779b97f4a7c15ull) {
  scene_.spec.validate();
  if (config_.primitive_count < 1 || config_.iterations < 0 ||
      config_.batch_points < 1 || !(config_.learning_rate >= 0.0)) {
    throw std::invalid_argument("fit: invalid configuration");
  }
  clamp_exponent(1.0, config_.eps_bounds);  // validates the bounds
  max_scale_ = scene_.spec.extent().norm();

  const auto prims = init_primitives(config_, scene_.spec, class_count_);
  params_.assign(prims.size() * stride(), 0.0);
  pack(prims);
  m_.assign(params_.size(), 0.0);
  v_.assign(params_.size(), 0.0);
  sample_pool_.resize(scene_.spec.voxel_count());
  std::iota(sample_pool_.begin(), sample_pool_.end(), std::size_t{0});
}

void Fitter::pack(const std::vector<Primitive>& prims) {
  const int st = stride();
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const Primitive& p = prims[i];
    double* q = params_.data() + i * st;
    q[0] = p.position.x();
    q[1] = p.position.y();
    q[2] = p.position.z();
    for (int j = 0; j < 3; ++j) {
      q[3 + j] = std::log(std::min(std::max(p.scale[j], kScaleFloor), max_scale_));
    }
    q[6] = p.rotation.w;
    q[7] = p.rotation.x;
    q[8] = p.rotation.y;
    q[9] = p.rotation.z;
    q[10] = logit(p.opacity);
    const EpsBounds& b = config_.eps_bounds;
    q[11] = logit((p.eps1 - b.lo) / (b.hi - b.lo));
    q[12] = logit((p.eps2 - b.lo) / (b.hi - b.lo));
    for (int k = 0; k < class_count_; ++k) {
      q[13 + k] = std::log(std::max(p.semantics[k], 1e-12));
    }
  }
}

void Fitter::unpack_into(std::vector<Primitive>& prims) const {
  const int st = stride();
  const std::size_t n = params_.size() / st;
  prims.resize(n);
  const EpsBounds& b = config_.eps_bounds;
  for (std::size_t i = 0; i < n; ++i) {
    const double* q = params_.data() + i * st;
    Primitive& p = prims[i];
    p.position = Vec3(q[0], q[1], q[2]);
    for (int j = 0; j < 3; ++j) {
      p.scale[j] = std::min(std::max(std::exp(q[3 + j]), kScaleFloor), max_scale_);
    }
    p.rotation = {q[6], q[7], q[8], q[9]};
    p.opacity = sigmoid(q[10]);
    if (config_.kind == PrimitiveKind::Superquadric) {
      p.eps1 = b.lo + (b.hi - b.lo) * sigmoid(q[11]);
      p.eps2 = b.lo + (b.hi - b.lo) * sigmoid(q[12]);
    } else {
      p.eps1 = 1.0;
      p.eps2 = 1.0;
    }
    // stable softmax
    double mx = q[13];
    for (int k = 1; k < class_count_; ++k) mx = std::max(mx, q[13 + k]);
    p.semantics.resize(class_count_);
    double sum = 0.0;
    for (int k = 0; k < class_count_; ++k) {
      p.semantics[k] = std::exp(q[13 + k] - mx);
      sum += p.semantics[k];
    }
    p.semantics /= sum;
  }
}

std::vector<Primitive> Fitter::primitives() const {
  std::vector<Primitive> prims;
  unpack_into(prims);
  return prims;
}

Fitter::ObjectiveReport Fitter::objective(std::span<const std::size_t> voxel_ids) const {
  {
    const int st = stride();
    std::vector<std::size_t> bad;
    for (std::size_t j = 0; j < params_.size(); ++j) {
      if (!std::isfinite(params_[j])) {
        if (bad.empty() || bad.back() != j / st) bad.push_back(j / st);
      }
    }
    if (!bad.empty()) {
      std::ostringstream msg;
      msg << "fit: non-finite parameters at iteration " << step_count_
          << "; offending primitives:";
      for (const std::size_t i : bad) msg << ' ' << i;
      throw std::runtime_error(msg.str());
    }
  }
  std::vector<Primitive> prims;
  unpack_into(prims);

  std::vector<Vec3> points;
  std::vector<std::uint8_t> labels;
  points.reserve(voxel_ids.size());
  labels.reserve(voxel_ids.size());
  for (const std::size_t v : voxel_ids) {
    points.push_back(scene_.spec.voxel_center(v));
    labels.push_back(scene_.labels[v]);
  }

  FieldOptions fopts;
  fopts.opacity_scaled_geometry = config_.opacity_scaled_geometry;
  fopts.support_cutoff = config_.cutoff_f;
  FieldEvaluator eval(points, prims, config_.kind, fopts);

  const LossReport rep = evaluate_losses(eval.p_occ(), eval.p_sem(), labels,
                                         config_.loss_weights);

  std::vector<PointTarget> targets(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    targets[i].d_p_occ = rep.grads[i].d_p_occ;
    targets[i].d_p_sem = rep.grads[i].d_p_sem;
  }
  const ParamGradient pg = eval.backward(targets);

  ObjectiveReport out;
  out.ce = rep.ce;
  out.lovasz = rep.lovasz;
  out.total = rep.total;
  out.gradient.assign(params_.size(), 0.0);

  const int st = stride();
  const EpsBounds& b = config_.eps_bounds;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    const double* q = params_.data() + i * st;
    double* g = out.gradient.data() + i * st;
    g[0] = pg.d_position[i].x();
    g[1] = pg.d_position[i].y();
    g[2] = pg.d_position[i].z();
    for (int j = 0; j < 3; ++j) {
      const double raw = std::exp(q[3 + j]);
      g[3 + j] = (raw > kScaleFloor && raw < max_scale_) ? pg.d_scale[i][j] * raw : 0.0;
    }
    for (int j = 0; j < 4; ++j) g[6 + j] = pg.d_quaternion[i][j];
    const double a = sigmoid(q[10]);
    g[10] = pg.d_opacity[i] * a * (1.0 - a);
    if (config_.kind == PrimitiveKind::Superquadric) {
      const double s1 = sigmoid(q[11]);
      const double s2 = sigmoid(q[12]);
      g[11] = pg.d_eps1[i] * (b.hi - b.lo) * s1 * (1.0 - s1);
      g[12] = pg.d_eps2[i] * (b.hi - b.lo) * s2 * (1.0 - s2);
    }
    for (int k = 0; k < class_count_; ++k) g[13 + k] = pg.d_sem_logits[i][k];
  }

  if (!std::isfinite(out.total)) {
    std::ostringstream msg;
    msg << "fit: non-finite loss at iteration " << step_count_
        << "; offending primitives:";
    for (const std::size_t i : pg.nonfinite_primitives()) msg << ' ' << i;
    throw std::runtime_error(msg.str());
  }
  return out;
}

StepReport Fitter::step() {
  const std::size_t total = sample_pool_.size();
  const std::size_t batch = std::min<std::size_t>(config_.batch_points, total);
  if (batch < total) {
    // partial Fisher-Yates: uniform sample without replacement
    for (std::size_t i = 0; i < batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(sample_pool_[i], sample_pool_[pick(rng_)]);
    }
  }
  const std::span<const std::size_t> ids(sample_pool_.data(), batch);

  const ObjectiveReport rep = objective(ids);
  ++step_count_;

  double lr = config_.learning_rate;
  if (config_.cosine_schedule && config_.iterations > 1) {
    const double t = static_cast<double>(step_count_ - 1) /
                     static_cast<double>(config_.iterations);
    lr *= 0.5 * (1.0 + std::cos(M_PI * std::min(t, 1.0)));
  }

  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, step_count_);
  const double bc2 = 1.0 - std::pow(b2, step_count_);
  for (std::size_t j = 0; j < params_.size(); ++j) {
    const double gj = rep.gradient[j];
    m_[j] = b1 * m_[j] + (1.0 - b1) * gj;
    v_[j] = b2 * v_[j] + (1.0 - b2) * gj * gj;
    const double mh = m_[j] / bc1;
    const double vh = v_[j] / bc2;
    params_[j] -= lr * (mh / (std::sqrt(vh) + config_.adam_eps) +
                        config_.weight_decay * params_[j]);
  }

  StepReport out;
  out.ce = rep.ce;
  out.lovasz = rep.lovasz;
  out.total = rep.total;
  return out;
}

void Fitter::apply_prune_split() {
  std::vector<Primitive> prims;
  unpack_into(prims);
  std::vector<std::size_t> touched;
  prims = prune_and_split(std::move(prims), config_.resolved_prune_split_count(), &touched);
  pack(prims);
  const int st = stride();
  for (const std::size_t slot : touched) {
    std::fill_n(m_.begin() + slot * st, st, 0.0);
    std::fill_n(v_.begin() + slot * st, st, 0.0);
  }
}

FitCheckpoint Fitter::measure(int iteration, double loss) const {
  FitCheckpoint cp;
  cp.iteration = iteration;
  cp.loss = loss;
  std::vector<Primitive> prims;
  unpack_into(prims);
  RasterOptions ropts;
  ropts.cutoff_f = config_.cutoff_f;
  ropts.field.opacity_scaled_geometry = config_.opacity_scaled_geometry;
  const ProbabilityGrid pg = rasterize(prims, config_.kind, scene_.spec, ropts);
  const OccupancyGrid pred = discretize(pg, config_.tau);
  const ConfusionMatrix cm = confusion(pred, scene_);
  cp.iou = iou_binary(cm);
  cp.miou = miou(cm).miou;
  return cp;
}

FitResult Fitter::run(const std::function<void(const FitCheckpoint&)>& on_checkpoint) {
  FitResult result;
  result.kind = config_.kind;
  result.loss_history.reserve(config_.iterations);
  const int event_at = config_.resolved_prune_split_at();
  const int n = config_.resolved_prune_split_count();

  auto checkpoint = [&](double loss) {
    const FitCheckpoint cp = measure(step_count_, loss);
    result.checkpoints.push_back(cp);
    if (on_checkpoint) on_checkpoint(cp);
  };

  double last_loss = 0.0;
  for (int it = 0; it < config_.iterations; ++it) {
    if (n > 0 && it == event_at) {
      apply_prune_split();
      checkpoint(last_loss);
    }
    const StepReport rep = step();
    last_loss = rep.total;
    result.loss_history.push_back(rep.total);
    if (config_.checkpoint_interval > 0 && step_count_ % config_.checkpoint_interval == 0 &&
        step_count_ < config_.iterations) {
      checkpoint(last_loss);
    }
  }
  checkpoint(last_loss);
  result.primitives = primitives();
  return result;
}

FitResult fit(const OccupancyGrid& scene, const FitConfig& config,
              const std::function<void(const FitCheckpoint&)>& on_checkpoint) {
  Fitter fitter(scene, config);
  return fitter.run(on_checkpoint);
}

}  // namespace sqs
