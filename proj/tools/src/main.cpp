#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqscene/io.hpp"
#include "sqscene/mesh.hpp"
#include "sqscene/metrics.hpp"
#include "sqscene/optimizer.hpp"
#include "sqscene/rasterizer.hpp"
#include "sqscene/scenegen.hpp"

namespace {

using namespace sqs;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ShapeSpec::Kind shape_kind_from_string(const std::string& s) {
  if (s == "box") return ShapeSpec::Kind::Box;
  if (s == "cylinder") return ShapeSpec::Kind::Cylinder;
  if (s == "ellipsoid") return ShapeSpec::Kind::Ellipsoid;
  if (s == "superquadric") return ShapeSpec::Kind::Superquadric;
  if (s == "ground-plane") return ShapeSpec::Kind::GroundPlane;
  throw std::invalid_argument("manifest: unknown shape kind '" + s + "'");
}

// Manifest schema: {"grid": {"dims": [X,Y,Z], "origin": [..], "voxel_size": [..]},
//                   "class_count": C,
//                   "shapes": [{"kind": "box", "position": [..], "size": [..],
//                               "rotation": [w,x,y,z], "eps": [e1,e2], "class": k}]}
std::pair<Preset, int> load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("manifest: cannot open '" + path + "'");
  nlohmann::json doc;
  is >> doc;
  Preset preset;
  const auto& g = doc.at("grid");
  preset.spec.dims = {g.at("dims")[0].get<int>(), g.at("dims")[1].get<int>(),
                      g.at("dims")[2].get<int>()};
  for (int j = 0; j < 3; ++j) {
    preset.spec.origin[j] = g.at("origin")[j].get<double>();
    preset.spec.voxel_size[j] = g.at("voxel_size")[j].get<double>();
  }
  preset.class_count = doc.value("class_count", 16);
  for (const auto& e : doc.at("shapes")) {
    ShapeSpec s;
    s.kind = shape_kind_from_string(e.at("kind").get<std::string>());
    for (int j = 0; j < 3; ++j) {
      s.position[j] = e.at("position")[j].get<double>();
      s.size[j] = e.at("size")[j].get<double>();
    }
    if (e.contains("rotation")) {
      s.rotation = {e["rotation"][0].get<double>(), e["rotation"][1].get<double>(),
                    e["rotation"][2].get<double>(), e["rotation"][3].get<double>()};
    }
    if (e.contains("eps")) {
      s.eps1 = e["eps"][0].get<double>();
      s.eps2 = e["eps"][1].get<double>();
    }
    s.class_id = e.at("class").get<int>();
    preset.shapes.push_back(s);
  }
  return {preset, preset.class_count};
}

FitResult run_fit(const OccupancyGrid& scene, FitConfig config, bool verbose) {
  return fit(scene, config, [&](const FitCheckpoint& cp) {
    if (verbose) {
      std::printf("iter %d loss %.6f iou %.4f miou %.4f\n", cp.iteration, cp.loss,
                  cp.iou, cp.miou);
    }
  });
}

int run(int argc, char** argv) {
  CLI::App app{"probabilistic superquadric scene representation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic scene grid");
  std::string gen_preset = "single-box";
  std::string gen_manifest;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--preset", gen_preset, "preset name (single-box, box-grid, street, random-<k>)");
  gen->add_option("--manifest", gen_manifest, "JSON shape manifest path");
  gen->add_option("--seed", gen_seed, "preset rng seed");
  gen->add_option("--out", gen_out, "output grid path")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a primitive set to a scene grid");
  std::string fit_scene, fit_out;
  std::string fit_kind = "quadric";
  FitConfig fc;
  fc.primitive_count = 1600;
  int fit_count = 1600, fit_iters = 1000, fit_prune = -1, fit_batch = 4096;
  double eps_lo = 0.1, eps_hi = 2.0, fit_lr = -1.0, fit_tau = 0.5;
  std::uint64_t fit_seed = 0;
  bool fit_opacity_geom = false, fit_verbose = false;
  fit_cmd->add_option("--scene", fit_scene, "ground-truth grid path")->required();
  fit_cmd->add_option("--kind", fit_kind, "quadric | gaussian");
  fit_cmd->add_option("--count", fit_count, "number of primitives");
  fit_cmd->add_option("--iters", fit_iters, "optimization iterations");
  fit_cmd->add_option("--eps-lo", eps_lo, "lower shape-exponent bound");
  fit_cmd->add_option("--eps-hi", eps_hi, "upper shape-exponent bound");
  fit_cmd->add_option("--prune-split", fit_prune,
                      "prune/split count (-1: half the primitives)");
  fit_cmd->add_option("--seed", fit_seed, "rng seed");
  fit_cmd->add_option("--lr", fit_lr, "learning rate (default 0.05)");
  fit_cmd->add_option("--batch", fit_batch, "voxel batch size per step");
  fit_cmd->add_option("--tau", fit_tau, "occupancy threshold for checkpoints");
  fit_cmd->add_flag("--opacity-scaled-geometry", fit_opacity_geom,
                    "scale occupancy terms by opacity");
  fit_cmd->add_flag("-v,--verbose", fit_verbose, "print checkpoint progress");
  fit_cmd->add_option("--out", fit_out, "output primitive-set path")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a prediction against ground truth");
  std::string eval_pred, eval_gt;
  double eval_tau = 0.5;
  eval_cmd->add_option("--pred", eval_pred, "predicted grid or primitive-set path")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth grid path")->required();
  eval_cmd->add_option("--tau", eval_tau, "occupancy threshold for primitive-set input");

  // compare
  auto* cmp = app.add_subcommand("compare", "primitive-count sweep over kinds");
  std::string cmp_scene, cmp_counts = "200,400,800,1600", cmp_kinds = "quadric,gaussian";
  int cmp_iters = 400;
  std::uint64_t cmp_seed = 0;
  double cmp_tau = 0.5;
  bool cmp_verbose = false;
  cmp->add_option("--scene", cmp_scene, "ground-truth grid path")->required();
  cmp->add_option("--counts", cmp_counts, "comma-separated primitive counts");
  cmp->add_option("--kinds", cmp_kinds, "comma-separated kinds (quadric, gaussian)");
  cmp->add_option("--iters", cmp_iters, "iterations per run");
  cmp->add_option("--seed", cmp_seed, "shared rng seed (paired runs)");
  cmp->add_option("--tau", cmp_tau, "occupancy threshold");
  cmp->add_flag("-v,--verbose", cmp_verbose, "print per-run progress");

  // export
  auto* exp = app.add_subcommand("export", "export a primitive set as an OBJ mesh");
  std::string exp_prims, exp_out;
  int exp_res = 32;
  exp->add_option("--primitives", exp_prims, "primitive-set path")->required();
  exp->add_option("--out", exp_out, "output OBJ path")->required();
  exp->add_option("--resolution", exp_res, "tessellation subdivisions per parameter");

  // ablate-eps
  auto* abl = app.add_subcommand("ablate-eps", "shape-exponent range sweep");
  std::string abl_scene, abl_ranges = "0.01:2,0.01:5,0.1:2,0.1:5";
  int abl_iters = 400, abl_count = 64;
  std::uint64_t abl_seed = 0;
  abl->add_option("--scene", abl_scene, "ground-truth grid path")->required();
  abl->add_option("--ranges", abl_ranges, "comma-separated lo:hi pairs");
  abl->add_option("--iters", abl_iters, "iterations per run");
  abl->add_option("--count", abl_count, "primitives per run");
  abl->add_option("--seed", abl_seed, "shared rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (gen->parsed()) {
    Preset preset;
    int class_count = 16;
    if (!gen_manifest.empty()) {
      std::tie(preset, class_count) = load_manifest(gen_manifest);
    } else {
      preset = preset_scene(gen_preset, gen_seed);
      class_count = preset.class_count;
    }
    const OccupancyGrid grid = generate_scene(preset.shapes, preset.spec, class_count);
    save_grid(gen_out, grid);
    std::size_t occupied = 0;
    for (const auto l : grid.labels) occupied += l != 0;
    std::printf("voxels %zu occupied %zu classes %d\n", grid.labels.size(), occupied,
                class_count);
    return 0;
  }

  if (fit_cmd->parsed()) {
    const OccupancyGrid scene = load_grid(fit_scene);
    fc.kind = fit_kind == "gaussian" ? PrimitiveKind::Gaussian
                                     : PrimitiveKind::Superquadric;
    fc.primitive_count = fit_count;
    fc.iterations = fit_iters;
    fc.eps_bounds = {eps_lo, eps_hi};
    fc.prune_split_count = fit_prune;
    fc.rng_seed = fit_seed;
    fc.batch_points = fit_batch;
    fc.tau = fit_tau;
    fc.opacity_scaled_geometry = fit_opacity_geom;
    if (fit_lr > 0.0) fc.learning_rate = fit_lr;
    std::printf("fit kind %s count %d iters %d eps-bounds (%g, %g)\n",
                fc.kind == PrimitiveKind::Gaussian ? "gaussian" : "quadric",
                fc.primitive_count, fc.iterations, fc.eps_bounds.lo, fc.eps_bounds.hi);
    const FitResult result = run_fit(scene, fc, fit_verbose);

    PrimitiveSetFile out;
    out.kind = fc.kind;
    out.class_count = scene.class_count;
    out.eps_bounds = fc.eps_bounds;
    out.primitives = result.primitives;
    out.fit_config = fc;
    save_primitives(fit_out, out);
    const FitCheckpoint& last = result.checkpoints.back();
    std::printf("final loss %.6f iou %.4f miou %.4f\n", last.loss, last.iou, last.miou);
    return 0;
  }

  if (eval_cmd->parsed()) {
    const OccupancyGrid gt = load_grid(eval_gt);
    OccupancyGrid pred;
    if (eval_pred.size() > 5 && eval_pred.substr(eval_pred.size() - 5) == ".json") {
      const PrimitiveSetFile set = load_primitives(eval_pred);
      const ProbabilityGrid pg = rasterize(set.primitives, set.kind, gt.spec);
      pred = discretize(pg, eval_tau);
    } else {
      pred = load_grid(eval_pred);
    }
    const ConfusionMatrix cm = confusion(pred, gt);
    const MiouResult m = miou(cm);
    std::printf("iou %.6f\n", iou_binary(cm));
    std::printf("miou %.6f\n", m.miou);
    for (std::size_t c = 0; c < m.per_class_iou.size(); ++c) {
      if (m.counted[c]) {
        std::printf("class_%02zu_iou %.6f\n", c + 1, m.per_class_iou[c]);
      }
    }
    return 0;
  }

  if (cmp->parsed()) {
    const OccupancyGrid scene = load_grid(cmp_scene);
    std::printf("kind\tcount\tiou\tmiou\tloss\n");
    for (const std::string& kind_s : split(cmp_kinds, ',')) {
      const PrimitiveKind kind = kind_s == "gaussian" ? PrimitiveKind::Gaussian
                                                      : PrimitiveKind::Superquadric;
      for (const std::string& count_s : split(cmp_counts, ',')) {
        FitConfig c;
        c.kind = kind;
        c.primitive_count = std::stoi(count_s);
        c.iterations = cmp_iters;
        c.rng_seed = cmp_seed;
        c.tau = cmp_tau;
        const FitResult r = run_fit(scene, c, cmp_verbose);
        const FitCheckpoint& last = r.checkpoints.back();
        std::printf("%s\t%d\t%.4f\t%.4f\t%.6f\n", kind_s.c_str(), c.primitive_count,
                    last.iou, last.miou, last.loss);
        std::fflush(stdout);
      }
    }
    return 0;
  }

  if (exp->parsed()) {
    const PrimitiveSetFile set = load_primitives(exp_prims);
    export_mesh(set.primitives, set.kind, exp_out, exp_res);
    std::printf("exported %zu primitives to %s\n", set.primitives.size(),
                exp_out.c_str());
    return 0;
  }

  if (abl->parsed()) {
    const OccupancyGrid scene = load_grid(abl_scene);
    std::printf("eps_lo\teps_hi\tiou\tmiou\tloss\n");
    for (const std::string& range_s : split(abl_ranges, ',')) {
      const auto parts = split(range_s, ':');
      if (parts.size() != 2) {
        throw std::invalid_argument("ablate-eps: range must be lo:hi, got '" + range_s + "'");
      }
      FitConfig c;
      c.kind = PrimitiveKind::Superquadric;
      c.primitive_count = abl_count;
      c.iterations = abl_iters;
      c.rng_seed = abl_seed;
      c.eps_bounds = {std::stod(parts[0]), std::stod(parts[1])};
      const FitResult r = run_fit(scene, c, false);
      const FitCheckpoint& last = r.checkpoints.back();
      std::printf("%g\t%g\t%.4f\t%.4f\t%.6f\n", c.eps_bounds.lo, c.eps_bounds.hi,
                  last.iou, last.miou, last.loss);
      std::fflush(stdout);
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
