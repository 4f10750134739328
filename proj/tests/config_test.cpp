#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vision/config.hpp"

using namespace vision;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "vision_config_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(SolverConfigFile, RoundTripsEveryField) {
  SolverConfig cfg;
  cfg.steps = 40;
  cfg.tau_frac = 0.1 + 0.2;
  cfg.lambda_lpf = 1.25;
  cfg.cg_steps = 3;
  cfg.eta = 1.0 / 3.0;
  cfg.seed = 18446744073709551615ull;
  cfg.schedule = ScheduleKind::kCosine;
  cfg.denoiser = "zero";
  cfg.codec = "haar";
  cfg.output_range = RangeTag::kSymmetric;
  cfg.workers = 6;
  const auto path = scratch("roundtrip.ini");
  write_solver_config(cfg, path);
  const auto back = read_solver_config(path);
  EXPECT_EQ(back.steps, cfg.steps);
  EXPECT_EQ(back.tau_frac, cfg.tau_frac);
  EXPECT_EQ(back.lambda_lpf, cfg.lambda_lpf);
  EXPECT_EQ(back.cg_steps, cfg.cg_steps);
  EXPECT_EQ(back.eta, cfg.eta);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.schedule, cfg.schedule);
  EXPECT_EQ(back.denoiser, cfg.denoiser);
  EXPECT_EQ(back.codec, cfg.codec);
  EXPECT_EQ(back.output_range, cfg.output_range);
  EXPECT_EQ(back.workers, cfg.workers);
}

TEST(SolverConfigFile, MissingKeysKeepBase) {
  const auto path = scratch("partial.ini");
  std::ofstream(path) << "[solver]\nsteps = 50\n";
  SolverConfig base;
  base.eta = 0.25;
  const auto cfg = read_solver_config(path, base);
  EXPECT_EQ(cfg.steps, 50u);
  EXPECT_EQ(cfg.eta, 0.25);
  EXPECT_EQ(cfg.cg_steps, 10u);
}

TEST(SolverConfigFile, BadValuesAreConfigErrors) {
  const auto path = scratch("bad.ini");
  for (const char* body : {"[solver]\nsteps = many\n", "[solver]\neta = 2\n", "[solver]\nschedule = wavy\n",
                           "[solver]\noutput_range = hdr\n", "not an ini [[\n"}) {
    std::ofstream(path) << body;
    EXPECT_THROW(read_solver_config(path), ParameterError) << body;
  }
  EXPECT_THROW(read_solver_config(scratch("absent.ini")), ConfigError);
}

TEST(Manifest, RoundTrip) {
  RunManifest m;
  m.command = "degrade";
  m.input = "in.vtf";
  m.output = "out dir";
  m.input_shape = Shape{7, 3, 64, 48};
  m.descriptor.task = "sr+";
  m.descriptor.sr_factor = 2;
  m.descriptor.blur_sigma = 2.7;
  m.descriptor.mask_per_frame = false;
  m.descriptor.temporal_first = false;
  m.descriptor.seed = 99;
  m.seconds = 1.5;
  const auto path = scratch("manifest.ini");
  write_manifest(m, path);
  auto back = read_manifest(path);
  EXPECT_EQ(back.version, kVersion);
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.input, m.input);
  EXPECT_EQ(back.output, m.output);
  EXPECT_EQ(back.input_shape, m.input_shape);
  EXPECT_EQ(back.descriptor, m.descriptor);
  EXPECT_FALSE(back.solver.has_value());

  m.solver = SolverConfig{};
  m.solver->seed = 5;
  write_manifest(m, path);
  back = read_manifest(path);
  ASSERT_TRUE(back.solver.has_value());
  EXPECT_EQ(back.solver->seed, 5u);
}

TEST(Manifest, MissingFileAndTask) {
  EXPECT_THROW(read_manifest(scratch("nope.ini")), ConfigError);
  const auto path = scratch("notask.ini");
  std::ofstream(path) << "[run]\ncommand = degrade\n[shape]\nn = 1\nc = 1\nh = 4\nw = 4\n";
  EXPECT_THROW(read_manifest(path), ConfigError);
}

TEST(Reports, JsonCarriesStepsAndRounds) {
  RunReport r;
  r.tau = 2;
  r.steps = 25;
  r.operator_name = "blur";
  r.timesteps.push_back(StepRecord{2, 0.9, 0.5, 1.0, 0.5, 0.4, 3, false, 0.01});
  r.final_residual = 0.25;
  const auto j = nlohmann::json::parse(run_report_json(r));
  EXPECT_EQ(j["tau"], 2);
  EXPECT_EQ(j["timesteps"].size(), 1u);
  EXPECT_EQ(j["final_residual"], 0.25);

  BlindResult b;
  b.round1.sigma = 2.5;
  b.round2.sigma = 2.9;
  b.round1_residual = 1.0;
  b.round2_residual = 0.9;
  const auto jb = nlohmann::json::parse(blind_report_json(b));
  EXPECT_EQ(jb["psf_round1"]["sigma"], 2.5);
  EXPECT_EQ(jb["psf_round2"]["sigma"], 2.9);
  EXPECT_EQ(jb["round2_residual"], 0.9);
}
