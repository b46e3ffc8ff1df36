#include "ballchain/cli/config.hpp"

#include "ballchain/errors.hpp"
#include "ballchain/presets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

namespace ballchain::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Division keeps decimal millimetre inputs closest to their metre literals.
double from_mm(double v) { return v / 1000.0; }

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const json& node, const std::string& path) {
  if (!node.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& node, const std::string& path,
                    std::initializer_list<std::string_view> allowed) {
  expect_object(node, path);
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      fail(join(path, it.key()), "unknown key");
    }
  }
}

const json* find(const json& node, std::string_view key) {
  const auto it = node.find(std::string(key));
  return it == node.end() ? nullptr : &*it;
}

const json& require(const json& node, const std::string& path, std::string_view key) {
  const json* value = find(node, key);
  if (!value) fail(join(path, key), "required key is missing");
  return *value;
}

double get_number(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

long long get_integer(const json& node, const std::string& path, long long lo, long long hi) {
  if (!node.is_number_integer()) fail(path, "expected an integer");
  long long v = 0;
  if (node.is_number_unsigned()) {
    const auto u = node.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<long long>::max())) fail(path, "out of range");
    v = static_cast<long long>(u);
  } else {
    v = node.get<long long>();
  }
  if (v < lo || v > hi) {
    fail(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

std::uint64_t get_seed(const json& node, const std::string& path) {
  if (!node.is_number_unsigned() && !(node.is_number_integer() && node.get<long long>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return node.get<std::uint64_t>();
}

std::string get_string(const json& node, const std::string& path) {
  if (!node.is_string()) fail(path, "expected a string");
  return node.get<std::string>();
}

std::vector<double> get_numbers(const json& node, const std::string& path) {
  if (!node.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(get_number(node[i], index_path(path, i)));
  return out;
}

Vec3 get_vec3(const json& node, const std::string& path) {
  const std::vector<double> v = get_numbers(node, path);
  if (v.size() != 3) fail(path, "expected 3 numbers");
  return Vec3(v[0], v[1], v[2]);
}

// Either a row-major 3x3 array or {"axis": [x, y, z], "angle_deg": a}.
Mat3 get_rotation(const json& node, const std::string& path) {
  if (node.is_object()) {
    reject_unknown(node, path, {"axis", "angle_deg"});
    const Vec3 axis = get_vec3(require(node, path, "axis"), join(path, "axis"));
    const double angle = get_number(require(node, path, "angle_deg"), join(path, "angle_deg"));
    if (axis.norm() == 0.0) fail(join(path, "axis"), "must be non-zero");
    return rotation_exp(axis.normalized() * deg_to_rad(angle));
  }
  if (!node.is_array() || node.size() != 3) fail(path, "expected a 3x3 array or {axis, angle_deg}");
  Mat3 r;
  for (int i = 0; i < 3; ++i) r.row(i) = get_vec3(node[i], index_path(path, i)).transpose();
  if (!is_rotation(r)) fail(path, "is not a proper rotation (orthonormal, det +1, tolerance 1e-12)");
  return r;
}

std::vector<double> get_axis(const json& node, const std::string& path) {
  if (node.is_array()) {
    std::vector<double> v = get_numbers(node, path);
    if (v.empty()) fail(path, "must not be empty");
    return v;
  }
  reject_unknown(node, path, {"start", "stop", "step"});
  const double start = get_number(require(node, path, "start"), join(path, "start"));
  const double stop = get_number(require(node, path, "stop"), join(path, "stop"));
  const double step = get_number(require(node, path, "step"), join(path, "step"));
  if (!(step > 0.0)) fail(join(path, "step"), "must be > 0");
  if (stop < start) fail(join(path, "stop"), "must be >= start");
  const double span = (stop - start) / step;
  if (span > 1e6) fail(path, "too many values");
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> v;
  v.reserve(count);
  for (std::size_t i = 0; i < count; ++i) v.push_back(start + static_cast<double>(i) * step);
  return v;
}

WorkspaceGrid get_grid(const json& node, const std::string& path) {
  reject_unknown(node, path, {"phi_deg", "psi_deg"});
  const auto phi = get_axis(require(node, path, "phi_deg"), join(path, "phi_deg"));
  const auto psi = get_axis(require(node, path, "psi_deg"), join(path, "psi_deg"));
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (std::abs(psi[i]) > 180.0) fail(index_path(join(path, "psi_deg"), i), "|psi| must be <= 180");
  }
  return WorkspaceGrid::from_degree_lists(phi, psi);
}

// {"phi_deg", "psi_deg"} pair, optionally labelled.
LabeledConfig get_config_point(const json& node, const std::string& path, bool labeled) {
  if (labeled) {
    reject_unknown(node, path, {"label", "phi_deg", "psi_deg"});
  } else {
    reject_unknown(node, path, {"phi_deg", "psi_deg"});
  }
  LabeledConfig c;
  if (labeled) {
    c.label = get_string(require(node, path, "label"), join(path, "label"));
    if (c.label.empty() || c.label.find_first_of(",\"\n\r") != std::string::npos) {
      fail(join(path, "label"), "must be non-empty without commas, quotes or newlines");
    }
  }
  c.phi_deg = get_number(require(node, path, "phi_deg"), join(path, "phi_deg"));
  c.psi_deg = get_number(require(node, path, "psi_deg"), join(path, "psi_deg"));
  if (std::abs(c.psi_deg) > 180.0) fail(join(path, "psi_deg"), "|psi| must be <= 180");
  c.gamma = bend_from_angles(deg_to_rad(c.psi_deg), deg_to_rad(c.phi_deg));
  return c;
}

ChainSpec parse_chain(const json& node, const ChainSpec& defaults) {
  const std::string path = "chain";
  reject_unknown(node, path, {"n", "d", "mu", "remanence"});
  ChainSpec chain = defaults;
  if (const json* n = find(node, "n")) chain.n = static_cast<int>(get_integer(*n, "chain.n", 1, 100000));
  const json* d = find(node, "d");
  if (d) {
    chain.d = from_mm(get_number(*d, "chain.d"));
    if (!(chain.d > 0.0)) fail("chain.d", "must be a positive length (mm)");
  }
  const json* mu = find(node, "mu");
  const json* remanence = find(node, "remanence");
  if (mu && remanence) fail("chain.mu", "give either mu or remanence, not both");
  if (mu) {
    chain.mu = get_number(*mu, "chain.mu");
  } else if (remanence) {
    const double br = get_number(*remanence, "chain.remanence");
    if (br < 0.0) fail("chain.remanence", "must be >= 0");
    chain.mu = sphere_dipole_moment(br, chain.d);
  } else if (d) {
    chain.mu = sphere_dipole_moment(kN42Remanence, chain.d);
  }
  chain.validate();
  return chain;
}

SensorSpec parse_sensor(const json& node, const std::string& path) {
  reject_unknown(node, path, {"position", "rotation"});
  SensorSpec s;
  s.position = get_vec3(require(node, path, "position"), join(path, "position")).unaryExpr(&from_mm);
  if (const json* r = find(node, "rotation")) s.rotation = get_rotation(*r, join(path, "rotation"));
  return s;
}

std::optional<fs::path> get_path(const json& node, const std::string& path, const fs::path& base_dir) {
  const fs::path p = get_string(node, path);
  if (p.empty()) fail(path, "must not be empty");
  return p.is_absolute() ? p : base_dir / p;
}

int get_outer_iterations(const json& node, const std::string& path) {
  return static_cast<int>(get_integer(node, path, 0, 1000));
}

int get_samples(const json& node, const std::string& path) {
  return static_cast<int>(get_integer(node, path, 1, 1000000));
}

std::vector<double> get_noise_levels(const json& node, const std::string& path) {
  std::vector<double> levels = get_numbers(node, path);
  if (levels.empty()) fail(path, "must not be empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0.0) fail(index_path(path, i), "must be >= 0");
  }
  return levels;
}

}  // namespace

SceneSpec parse_scene(const json& node) {
  if (node.is_string()) {
    const std::string name = node.get<std::string>();
    auto preset = preset_scene(name);
    if (!preset) fail("scene", "unknown preset '" + name + "' (expected config-I or config-II)");
    return *preset;
  }
  reject_unknown(node, "scene", {"preset", "chain", "base", "sensors"});

  SceneSpec scene;
  bool from_preset = false;
  if (const json* preset = find(node, "preset")) {
    const std::string name = get_string(*preset, "scene.preset");
    auto p = preset_scene(name);
    if (!p) fail("scene.preset", "unknown preset '" + name + "'");
    scene = *p;
    from_preset = true;
  } else {
    scene.chain = default_chain();
  }

  // Field paths below are reported without the "scene." prefix (e.g.
  // "chain.d"), matching the SI struct names.
  if (const json* chain = find(node, "chain")) scene.chain = parse_chain(*chain, scene.chain);

  if (const json* base = find(node, "base")) {
    reject_unknown(*base, "base", {"position", "rotation"});
    scene.base.position = get_vec3(require(*base, "base", "position"), "base.position").unaryExpr(&from_mm);
    scene.base.rotation = get_rotation(require(*base, "base", "rotation"), "base.rotation");
  } else if (!from_preset) {
    fail("base", "required key is missing");
  }

  if (const json* sensors = find(node, "sensors")) {
    if (!sensors->is_array() || sensors->empty()) fail("sensors", "expected a non-empty array");
    scene.sensors.clear();
    for (std::size_t j = 0; j < sensors->size(); ++j) {
      scene.sensors.push_back(parse_sensor((*sensors)[j], index_path("sensors", j)));
    }
  } else if (!from_preset) {
    fail("sensors", "required key is missing");
  }

  scene.validate();
  return scene;
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  reject_unknown(doc, "", {"scene", "command"});
  RunConfig cfg;
  const json& scene = require(doc, "", "scene");
  cfg.scene = parse_scene(scene);
  if (scene.is_string()) {
    cfg.scene_source = scene.get<std::string>();
  } else if (const json* preset = find(scene, "preset")) {
    cfg.scene_source = preset->get<std::string>() + "+overrides";
  } else {
    cfg.scene_source = "inline";
  }

  const json* command = find(doc, "command");
  if (!command) return cfg;
  reject_unknown(*command, "command",
                 {"forward", "estimate", "observability", "sensitivity", "calibrate", "replay"});

  if (const json* node = find(*command, "forward")) {
    const std::string path = "command.forward";
    reject_unknown(*node, path, {"grid"});
    ForwardBlock block;
    block.grid = get_grid(require(*node, path, "grid"), join(path, "grid"));
    cfg.forward = block;
  }
  if (const json* node = find(*command, "estimate")) {
    const std::string path = "command.estimate";
    reject_unknown(*node, path, {"outer_iterations", "gain_table", "readings"});
    EstimateBlock block;
    if (const json* v = find(*node, "outer_iterations")) {
      block.outer_iterations = get_outer_iterations(*v, join(path, "outer_iterations"));
    }
    if (const json* v = find(*node, "gain_table")) block.gain_table = get_path(*v, join(path, "gain_table"), base_dir);
    if (const json* v = find(*node, "readings")) block.readings = get_path(*v, join(path, "readings"), base_dir);
    cfg.estimate = block;
  }
  if (const json* node = find(*command, "observability")) {
    const std::string path = "command.observability";
    reject_unknown(*node, path, {"grid"});
    ObservabilityBlock block;
    block.grid = get_grid(require(*node, path, "grid"), join(path, "grid"));
    cfg.observability = block;
  }
  if (const json* node = find(*command, "sensitivity")) {
    const std::string path = "command.sensitivity";
    reject_unknown(*node, path, {"grid", "noise_levels", "samples", "seed"});
    SensitivityBlock block;
    block.grid = sensitivity_grid();
    if (const json* v = find(*node, "grid")) block.grid = get_grid(*v, join(path, "grid"));
    if (const json* v = find(*node, "noise_levels")) block.noise_levels = get_noise_levels(*v, join(path, "noise_levels"));
    if (const json* v = find(*node, "samples")) block.samples = get_samples(*v, join(path, "samples"));
    if (const json* v = find(*node, "seed")) block.seed = get_seed(*v, join(path, "seed"));
    cfg.sensitivity = block;
  }
  if (const json* node = find(*command, "calibrate")) {
    const std::string path = "command.calibrate";
    reject_unknown(*node, path, {"configs", "samples"});
    CalibrateBlock block;
    const json& configs = require(*node, path, "configs");
    const std::string cpath = join(path, "configs");
    if (!configs.is_array() || configs.empty()) fail(cpath, "expected a non-empty array");
    for (std::size_t k = 0; k < configs.size(); ++k) {
      LabeledConfig c = get_config_point(configs[k], index_path(cpath, k), true);
      for (const LabeledConfig& prev : block.configs) {
        if (prev.label == c.label) fail(index_path(cpath, k) + ".label", "duplicate label '" + c.label + "'");
      }
      block.configs.push_back(std::move(c));
    }
    if (const json* v = find(*node, "samples")) block.samples = get_path(*v, join(path, "samples"), base_dir);
    cfg.calibrate = block;
  }
  if (const json* node = find(*command, "replay")) {
    const std::string path = "command.replay";
    reject_unknown(*node, path,
                   {"configs", "noise_level", "samples", "seed", "outer_iterations", "channel_noise_scale"});
    ReplayBlock block;
    if (const json* v = find(*node, "configs")) {
      const std::string cpath = join(path, "configs");
      if (!v->is_array() || v->empty()) fail(cpath, "expected a non-empty array");
      for (std::size_t k = 0; k < v->size(); ++k) {
        block.configs.push_back(get_config_point((*v)[k], index_path(cpath, k), false).gamma);
      }
    } else {
      block.configs = replay_configs();
    }
    if (const json* v = find(*node, "noise_level")) {
      block.noise_level = get_number(*v, join(path, "noise_level"));
      if (block.noise_level < 0.0) fail(join(path, "noise_level"), "must be >= 0");
    }
    if (const json* v = find(*node, "samples")) block.samples = get_samples(*v, join(path, "samples"));
    if (const json* v = find(*node, "seed")) block.seed = get_seed(*v, join(path, "seed"));
    if (const json* v = find(*node, "outer_iterations")) {
      block.outer_iterations = get_outer_iterations(*v, join(path, "outer_iterations"));
    }
    if (const json* v = find(*node, "channel_noise_scale")) {
      const std::string spath = join(path, "channel_noise_scale");
      const std::vector<double> scale = get_numbers(*v, spath);
      if (scale.size() != cfg.scene.channel_count()) {
        fail(spath, "expected " + std::to_string(cfg.scene.channel_count()) + " values (3 per sensor)");
      }
      for (std::size_t c = 0; c < scale.size(); ++c) {
        if (scale[c] < 0.0) fail(index_path(spath, c), "must be >= 0");
      }
      block.channel_noise_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    }
    cfg.replay = block;
  }
  return cfg;
}

json read_json_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(what + " '" + path.string() + "' cannot be opened");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  const json doc = read_json_file(path, "config");
  return parse_run_config(doc, path.parent_path());
}

json scene_to_json(const SceneSpec& scene) {
  auto vec = [](const Vec3& v) { return json::array({v[0], v[1], v[2]}); };
  auto mat = [&](const Mat3& m) {
    return json::array({vec(m.row(0).transpose()), vec(m.row(1).transpose()), vec(m.row(2).transpose())});
  };
  json sensors = json::array();
  for (const SensorSpec& s : scene.sensors) {
    sensors.push_back({{"position", vec(s.position)}, {"rotation", mat(s.rotation)}});
  }
  return {
      {"chain", {{"n", scene.chain.n}, {"d", scene.chain.d}, {"mu", scene.chain.mu}}},
      {"base", {{"position", vec(scene.base.position)}, {"rotation", mat(scene.base.rotation)}}},
      {"sensors", sensors},
  };
}

std::string scene_hash(const SceneSpec& scene) {
  const std::string text = scene_to_json(scene).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json gain_table_to_json(const GainTable& table) {
  json entries = json::array();
  for (const GainEntry& e : table.entries()) {
    const BendAngles a = angles_from_bend(e.center);
    entries.push_back({{"psi_deg", rad_to_deg(a.psi)},
                       {"phi_deg", rad_to_deg(a.phi)},
                       {"gain", std::vector<double>(e.gain.data(), e.gain.data() + e.gain.size())}});
  }
  return {{"format", "ballchain-gain-table"},
          {"version", 1},
          {"channels", table.channel_count()},
          {"entries", entries}};
}

GainTable gain_table_from_json(const json& doc) {
  const std::string path = "gain_table";
  reject_unknown(doc, path, {"format", "version", "channels", "entries"});
  if (get_string(require(doc, path, "format"), "gain_table.format") != "ballchain-gain-table") {
    fail("gain_table.format", "expected \"ballchain-gain-table\"");
  }
  if (get_integer(require(doc, path, "version"), "gain_table.version", 1, 1) != 1) {
    fail("gain_table.version", "unsupported");
  }
  const auto channels = static_cast<std::size_t>(
      get_integer(require(doc, path, "channels"), "gain_table.channels", 3, 3000000));
  if (channels % 3 != 0) fail("gain_table.channels", "must be a multiple of 3");
  const json& entries = require(doc, path, "entries");
  if (!entries.is_array() || entries.empty()) fail("gain_table.entries", "expected a non-empty array");

  std::vector<GainEntry> out;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const std::string epath = index_path("gain_table.entries", k);
    const json& e = entries[k];
    reject_unknown(e, epath, {"psi_deg", "phi_deg", "gain"});
    const double psi = get_number(require(e, epath, "psi_deg"), join(epath, "psi_deg"));
    const double phi = get_number(require(e, epath, "phi_deg"), join(epath, "phi_deg"));
    if (std::abs(psi) > 180.0) fail(join(epath, "psi_deg"), "|psi| must be <= 180");
    const std::vector<double> g = get_numbers(require(e, epath, "gain"), join(epath, "gain"));
    if (g.size() != channels) {
      fail(join(epath, "gain"), "expected " + std::to_string(channels) + " values");
    }
    out.push_back({bend_from_angles(deg_to_rad(psi), deg_to_rad(phi)),
                   Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()))});
  }
  return GainTable(std::move(out));
}

GainTable load_gain_table(const fs::path& path) {
  return gain_table_from_json(read_json_file(path, "gain table"));
}

void save_gain_table(const GainTable& table, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << gain_table_to_json(table).dump(2) << '\n';
}

}  // namespace ballchain::cli
