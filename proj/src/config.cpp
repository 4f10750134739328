#include "vision/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <sstream>

#include "json.hpp"

namespace vision {

namespace pt = boost::property_tree;

namespace {

pt::ptree load_ini(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read " + path.string() + ": " + e.message());
  }
  return tree;
}

void store_ini(const pt::ptree& tree, const std::filesystem::path& path) {
  try {
    pt::write_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError("cannot write " + path.string() + ": " + e.message());
  }
}

template <typename T>
void read_key(const pt::ptree& tree, const std::string& key, T& out) {
  auto node = tree.get_child_optional(key);
  if (!node) return;
  try {
    out = node->get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError("bad value for " + key + ": '" + node->data() + "'");
  }
}

// Doubles are written with enough digits to round-trip.
std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

RangeTag parse_range(const std::string& s) {
  if (s == "unit") return RangeTag::kUnit;
  if (s == "symmetric") return RangeTag::kSymmetric;
  throw ConfigError("unknown range '" + s + "' (expected unit or symmetric)");
}

void solver_from_tree(const pt::ptree& tree, SolverConfig& cfg) {
  read_key(tree, "solver.steps", cfg.steps);
  read_key(tree, "solver.tau_frac", cfg.tau_frac);
  read_key(tree, "solver.lambda", cfg.lambda_lpf);
  read_key(tree, "solver.cg_steps", cfg.cg_steps);
  read_key(tree, "solver.eta", cfg.eta);
  read_key(tree, "solver.seed", cfg.seed);
  read_key(tree, "solver.denoiser", cfg.denoiser);
  read_key(tree, "solver.codec", cfg.codec);
  read_key(tree, "solver.workers", cfg.workers);
  std::string kind = to_string(cfg.schedule);
  read_key(tree, "solver.schedule", kind);
  try {
    cfg.schedule = parse_schedule_kind(kind);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  std::string range = to_string(cfg.output_range);
  read_key(tree, "solver.output_range", range);
  cfg.output_range = parse_range(range);
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

void solver_to_tree(const SolverConfig& cfg, pt::ptree& tree) {
  tree.put("solver.steps", cfg.steps);
  tree.put("solver.tau_frac", exact(cfg.tau_frac));
  tree.put("solver.lambda", exact(cfg.lambda_lpf));
  tree.put("solver.cg_steps", cfg.cg_steps);
  tree.put("solver.eta", exact(cfg.eta));
  tree.put("solver.seed", cfg.seed);
  tree.put("solver.schedule", to_string(cfg.schedule));
  tree.put("solver.denoiser", cfg.denoiser);
  tree.put("solver.codec", cfg.codec);
  tree.put("solver.output_range", to_string(cfg.output_range));
  tree.put("solver.workers", cfg.workers);
}

nlohmann::json step_json(const StepRecord& s) {
  return {{"t", s.t},
          {"alpha_bar", s.alpha_bar},
          {"lpf_sigma", s.lpf_sigma},
          {"residual_denoised", s.residual_denoised},
          {"residual_cg", s.residual_cg},
          {"residual_lpf", s.residual_lpf},
          {"cg_iterations", s.cg_iterations},
          {"cg_breakdown", s.cg_breakdown},
          {"seconds", s.seconds}};
}

nlohmann::json report_json(const RunReport& r) {
  auto steps = nlohmann::json::array();
  for (const auto& s : r.timesteps) steps.push_back(step_json(s));
  return {{"tau", r.tau},
          {"steps", r.steps},
          {"operator", r.operator_name},
          {"init_seconds", r.init_seconds},
          {"total_seconds", r.total_seconds},
          {"final_residual", r.final_residual},
          {"timesteps", steps}};
}

nlohmann::json psf_json(const PsfEstimate& p) {
  return {{"sigma", p.sigma}, {"residual", p.residual}, {"lo", p.lo}, {"hi", p.hi}};
}

}  // namespace

SolverConfig read_solver_config(const std::filesystem::path& path, SolverConfig base) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  solver_from_tree(load_ini(path), base);
  return base;
}

void write_solver_config(const SolverConfig& cfg, const std::filesystem::path& path) {
  pt::ptree tree;
  solver_to_tree(cfg, tree);
  store_ini(tree, path);
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  pt::ptree tree;
  tree.put("run.version", m.version);
  tree.put("run.command", m.command);
  tree.put("run.input", m.input);
  tree.put("run.output", m.output);
  tree.put("run.seconds", exact(m.seconds));
  tree.put("shape.n", m.input_shape.n);
  tree.put("shape.c", m.input_shape.c);
  tree.put("shape.h", m.input_shape.h);
  tree.put("shape.w", m.input_shape.w);
  const auto& d = m.descriptor;
  tree.put("degradation.task", d.task);
  tree.put("degradation.blur_kernel", d.blur_kernel);
  tree.put("degradation.blur_sigma", exact(d.blur_sigma));
  tree.put("degradation.sr_factor", d.sr_factor);
  tree.put("degradation.mask_rate", exact(d.mask_rate));
  tree.put("degradation.mask_per_frame", d.mask_per_frame);
  tree.put("degradation.average_window", d.average_window);
  tree.put("degradation.temporal_first", d.temporal_first);
  tree.put("degradation.seed", d.seed);
  if (m.solver) solver_to_tree(*m.solver, tree);
  store_ini(tree, path);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("manifest not found: " + path.string());
  const pt::ptree tree = load_ini(path);
  if (!tree.get_child_optional("degradation.task")) {
    throw ConfigError("manifest " + path.string() + " has no [degradation] task");
  }
  RunManifest m;
  read_key(tree, "run.version", m.version);
  read_key(tree, "run.command", m.command);
  read_key(tree, "run.input", m.input);
  read_key(tree, "run.output", m.output);
  read_key(tree, "run.seconds", m.seconds);
  read_key(tree, "shape.n", m.input_shape.n);
  read_key(tree, "shape.c", m.input_shape.c);
  read_key(tree, "shape.h", m.input_shape.h);
  read_key(tree, "shape.w", m.input_shape.w);
  auto& d = m.descriptor;
  read_key(tree, "degradation.task", d.task);
  read_key(tree, "degradation.blur_kernel", d.blur_kernel);
  read_key(tree, "degradation.blur_sigma", d.blur_sigma);
  read_key(tree, "degradation.sr_factor", d.sr_factor);
  read_key(tree, "degradation.mask_rate", d.mask_rate);
  read_key(tree, "degradation.mask_per_frame", d.mask_per_frame);
  read_key(tree, "degradation.average_window", d.average_window);
  read_key(tree, "degradation.temporal_first", d.temporal_first);
  read_key(tree, "degradation.seed", d.seed);
  if (tree.get_child_optional("solver")) {
    SolverConfig cfg;
    solver_from_tree(tree, cfg);
    m.solver = cfg;
  }
  return m;
}

std::string run_report_json(const RunReport& report) { return report_json(report).dump(2); }

std::string blind_report_json(const BlindResult& result) {
  nlohmann::json j = report_json(result.report);
  j["psf_round1"] = psf_json(result.round1);
  j["psf_round2"] = psf_json(result.round2);
  j["round1_residual"] = result.round1_residual;
  j["round2_residual"] = result.round2_residual;
  return j.dump(2);
}

}  // namespace vision
