#include "sqscene/io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sqs {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic = {'O', 'C', 'C', 'G'};
constexpr std::uint32_t kGridVersion = 1;
constexpr int kPrimitivesVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const char* field, std::streamoff offset) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    std::ostringstream msg;
    msg << "grid file: truncated reading " << field << " at byte offset " << offset;
    throw FormatError(msg.str());
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is, const char* field, std::streamoff offset) {
  const std::uint32_t bits = get_u32(is, field, offset);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw FormatError("primitives file: field '" + field + "' must be a 3-array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
T require(const json& j, const std::string& field) {
  if (!j.contains(field)) {
    throw FormatError("primitives file: missing field '" + field + "'");
  }
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw FormatError("primitives file: invalid value for field '" + field + "'");
  }
}

}  // namespace

void save_grid(const std::string& path, const OccupancyGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("grid file: cannot open '" + path + "' for writing");
  os.write(kMagic.data(), 4);
  put_u32(os, kGridVersion);
  put_u32(os, static_cast<std::uint32_t>(grid.spec.dims.x()));
  put_u32(os, static_cast<std::uint32_t>(grid.spec.dims.y()));
  put_u32(os, static_cast<std::uint32_t>(grid.spec.dims.z()));
  for (int j = 0; j < 3; ++j) put_f32(os, static_cast<float>(grid.spec.origin[j]));
  for (int j = 0; j < 3; ++j) put_f32(os, static_cast<float>(grid.spec.voxel_size[j]));
  put_u32(os, static_cast<std::uint32_t>(grid.class_count));
  os.write(reinterpret_cast<const char*>(grid.labels.data()),
           static_cast<std::streamsize>(grid.labels.size()));
  if (!os) throw FormatError("grid file: write failed for '" + path + "'");
}

OccupancyGrid load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("grid file: cannot open '" + path + "'");
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) {
    throw FormatError("grid file: bad magic at byte offset 0");
  }
  const std::uint32_t version = get_u32(is, "version", 4);
  if (version != kGridVersion) {
    std::ostringstream msg;
    msg << "grid file: unsupported version " << version << " at byte offset 4";
    throw FormatError(msg.str());
  }
  OccupancyGrid grid;
  grid.spec.dims.x() = static_cast<int>(get_u32(is, "dims.x", 8));
  grid.spec.dims.y() = static_cast<int>(get_u32(is, "dims.y", 12));
  grid.spec.dims.z() = static_cast<int>(get_u32(is, "dims.z", 16));
  for (int j = 0; j < 3; ++j) grid.spec.origin[j] = get_f32(is, "origin", 20 + 4 * j);
  for (int j = 0; j < 3; ++j) {
    grid.spec.voxel_size[j] = get_f32(is, "voxel_size", 32 + 4 * j);
  }
  grid.class_count = static_cast<int>(get_u32(is, "class_count", 44));
  grid.spec.validate();
  const std::size_t n = grid.spec.voxel_count();
  grid.labels.resize(n);
  if (!is.read(reinterpret_cast<char*>(grid.labels.data()),
               static_cast<std::streamsize>(n))) {
    std::ostringstream msg;
    msg << "grid file: truncated payload, expected " << n << " bytes from offset 48";
    throw FormatError(msg.str());
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (grid.labels[v] > grid.class_count) {
      std::ostringstream msg;
      msg << "grid file: label " << int(grid.labels[v]) << " out of range at voxel " << v;
      throw FormatError(msg.str());
    }
  }
  return grid;
}

namespace {

json fit_config_to_json(const FitConfig& c) {
  return json{{"primitive_count", c.primitive_count},
              {"kind", c.kind == PrimitiveKind::Superquadric ? "superquadric" : "gaussian"},
              {"iterations", c.iterations},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"weight_decay", c.weight_decay},
              {"eps_bounds", {c.eps_bounds.lo, c.eps_bounds.hi}},
              {"prune_split_count", c.resolved_prune_split_count()},
              {"prune_split_at", c.resolved_prune_split_at()},
              {"loss_weights", {c.loss_weights.ce, c.loss_weights.lovasz}},
              {"rng_seed", c.rng_seed},
              {"batch_points", c.batch_points},
              {"cutoff_f", c.cutoff_f},
              {"opacity_scaled_geometry", c.opacity_scaled_geometry},
              {"tau", c.tau}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.primitive_count = j.value("primitive_count", c.primitive_count);
  c.kind = j.value("kind", "superquadric") == std::string("gaussian")
               ? PrimitiveKind::Gaussian
               : PrimitiveKind::Superquadric;
  c.iterations = j.value("iterations", c.iterations);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  if (j.contains("eps_bounds")) {
    c.eps_bounds.lo = j["eps_bounds"][0].get<double>();
    c.eps_bounds.hi = j["eps_bounds"][1].get<double>();
  }
  c.prune_split_count = j.value("prune_split_count", c.prune_split_count);
  c.prune_split_at = j.value("prune_split_at", c.prune_split_at);
  if (j.contains("loss_weights")) {
    c.loss_weights.ce = j["loss_weights"][0].get<double>();
    c.loss_weights.lovasz = j["loss_weights"][1].get<double>();
  }
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.batch_points = j.value("batch_points", c.batch_points);
  c.cutoff_f = j.value("cutoff_f", c.cutoff_f);
  c.opacity_scaled_geometry = j.value("opacity_scaled_geometry", c.opacity_scaled_geometry);
  c.tau = j.value("tau", c.tau);
  return c;
}

}  // namespace

void save_primitives(const std::string& path, const PrimitiveSetFile& set) {
  json doc;
  doc["format"] = "sqscene-primitives";
  doc["version"] = kPrimitivesVersion;
  doc["kind"] = set.kind == PrimitiveKind::Superquadric ? "superquadric" : "gaussian";
  doc["class_count"] = set.class_count;
  doc["eps_bounds"] = {set.eps_bounds.lo, set.eps_bounds.hi};
  if (set.fit_config) doc["fit_config"] = fit_config_to_json(*set.fit_config);

  json prims = json::array();
  for (const Primitive& p : set.primitives) {
    json e;
    e["position"] = vec3_to_json(p.position);
    e["scale"] = vec3_to_json(p.scale);
    e["rotation"] = {p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z};
    e["opacity"] = p.opacity;
    if (set.kind == PrimitiveKind::Superquadric) e["eps"] = {p.eps1, p.eps2};
    e["semantics"] = std::vector<double>(p.semantics.data(),
                                         p.semantics.data() + p.semantics.size());
    prims.push_back(std::move(e));
  }
  doc["primitives"] = std::move(prims);

  std::ofstream os(path);
  if (!os) throw FormatError("primitives file: cannot open '" + path + "' for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw FormatError("primitives file: write failed for '" + path + "'");
}

PrimitiveSetFile load_primitives(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("primitives file: cannot open '" + path + "'");
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw FormatError(std::string("primitives file: parse error: ") + e.what());
  }
  if (require<std::string>(doc, "format") != "sqscene-primitives") {
    throw FormatError("primitives file: field 'format' is not 'sqscene-primitives'");
  }
  if (require<int>(doc, "version") != kPrimitivesVersion) {
    throw FormatError("primitives file: unsupported value in field 'version'");
  }

  PrimitiveSetFile set;
  const std::string kind = require<std::string>(doc, "kind");
  if (kind == "superquadric") {
    set.kind = PrimitiveKind::Superquadric;
  } else if (kind == "gaussian") {
    set.kind = PrimitiveKind::Gaussian;
  } else {
    throw FormatError("primitives file: field 'kind' must be superquadric or gaussian");
  }
  set.class_count = require<int>(doc, "class_count");
  if (set.class_count < 1) {
    throw FormatError("primitives file: field 'class_count' must be >= 1");
  }
  if (!doc.contains("eps_bounds")) {
    throw FormatError("primitives file: missing field 'eps_bounds'");
  }
  set.eps_bounds.lo = doc["eps_bounds"][0].get<double>();
  set.eps_bounds.hi = doc["eps_bounds"][1].get<double>();
  if (doc.contains("fit_config")) set.fit_config = fit_config_from_json(doc["fit_config"]);

  if (!doc.contains("primitives") || !doc["primitives"].is_array()) {
    throw FormatError("primitives file: missing field 'primitives'");
  }
  for (const json& e : doc["primitives"]) {
    Primitive p;
    p.position = vec3_from_json(e.contains("position") ? e["position"] : json{},
                                "position");
    p.scale = vec3_from_json(e.contains("scale") ? e["scale"] : json{}, "scale");
    if (!e.contains("rotation") || !e["rotation"].is_array() || e["rotation"].size() != 4) {
      throw FormatError("primitives file: field 'rotation' must be a 4-array");
    }
    p.rotation = {e["rotation"][0].get<double>(), e["rotation"][1].get<double>(),
                  e["rotation"][2].get<double>(), e["rotation"][3].get<double>()};
    p.opacity = require<double>(e, "opacity");
    if (set.kind == PrimitiveKind::Superquadric) {
      if (!e.contains("eps") || !e["eps"].is_array() || e["eps"].size() != 2) {
        throw FormatError("primitives file: missing field 'eps' for superquadric kind");
      }
      p.eps1 = e["eps"][0].get<double>();
      p.eps2 = e["eps"][1].get<double>();
    }
    const auto sem = require<std::vector<double>>(e, "semantics");
    if (static_cast<int>(sem.size()) != set.class_count) {
      throw FormatError("primitives file: field 'semantics' length != class_count");
    }
    p.semantics = Eigen::Map<const Eigen::VectorXd>(sem.data(), sem.size());
    try {
      validate_primitive(p, set.kind, set.eps_bounds);
    } catch (const std::invalid_argument& err) {
      throw FormatError(std::string("primitives file: ") + err.what());
    }
    set.primitives.push_back(std::move(p));
  }
  return set;
}

}  // namespace sqs
