#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "selfcheck.hpp"
#include "vision/config.hpp"
#include "vision/degrade.hpp"
#include "vision/denoiser.hpp"
#include "vision/metrics.hpp"
#include "vision/parallel.hpp"
#include "vision/pipeline.hpp"
#include "vision/remote.hpp"
#include "vision/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace vision;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kIo = 3,
  kTransport = 4,
  kRemote = 5,
};

constexpr std::chrono::milliseconds kRemoteTimeout{30000};

void save_video(const VideoTensor& v, const fs::path& path) {
  if (path.extension() == ".vtf") {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    vtf_save(v, path);
  } else {
    write_frame_dir(v, path);
  }
}

fs::path sidecar(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  if (p.filename().empty()) p = p.parent_path();
  return p.string() + suffix;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << text << "\n";
  if (!f) throw IoError("write failed for " + path.string());
}

std::string remote_address(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon != std::string::npos) return spec.substr(colon + 1);
  const char* env = std::getenv("VISION_REMOTE");
  if (!env || !*env) {
    throw ConfigError("'" + spec + "' needs an address (remote:HOST:PORT) or VISION_REMOTE");
  }
  return env;
}

bool is_remote(const std::string& spec) { return spec.rfind("remote", 0) == 0; }

struct Models {
  std::shared_ptr<const Denoiser> denoiser;
  std::shared_ptr<const LatentCodec> codec;
};

Models make_models(const SolverConfig& cfg) {
  Models m;
  std::shared_ptr<RemoteClient> client;
  auto client_for = [&](const std::string& spec) {
    const std::string addr = remote_address(spec);
    if (!client || client->address() != addr) {
      client = std::make_shared<RemoteClient>(addr, kRemoteTimeout, std::max<std::size_t>(cfg.workers, 1));
    }
    return client;
  };

  if (cfg.denoiser == "zero") m.denoiser = zero_denoiser();
  else if (cfg.denoiser == "gaussian") m.denoiser = gaussian_prior_denoiser(make_schedule(cfg.steps, cfg.schedule));
  else if (is_remote(cfg.denoiser)) m.denoiser = remote_denoiser(client_for(cfg.denoiser));
  else throw ConfigError("unknown denoiser '" + cfg.denoiser + "' (zero, gaussian, remote:ADDR)");

  if (cfg.codec == "identity") m.codec = identity_codec();
  else if (cfg.codec == "haar") m.codec = haar_codec();
  else if (is_remote(cfg.codec)) m.codec = remote_codec(client_for(cfg.codec), 1, 1);
  else throw ConfigError("unknown codec '" + cfg.codec + "' (identity, haar, remote:ADDR)");
  return m;
}

// Solver flags shared by reconstruct and blind. Unset flags leave the config
// file values alone.
struct SolverFlags {
  std::string config;
  std::optional<std::string> denoiser;
  std::optional<std::string> codec;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> steps;
  std::optional<double> tau_frac;
  std::optional<std::uint32_t> cg_steps;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<std::uint32_t> workers;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "INI file with a [solver] section");
    cmd->add_option("--denoiser", denoiser, "zero | gaussian | remote[:HOST:PORT]");
    cmd->add_option("--codec", codec, "identity | haar | remote[:HOST:PORT]");
    cmd->add_option("--seed", seed, "seed for the shared renoising draw");
    cmd->add_option("--steps", steps, "diffusion steps T");
    cmd->add_option("--tau-frac", tau_frac, "start fraction, tau = round(frac*T)");
    cmd->add_option("--cg-steps", cg_steps, "CG iterations per timestep");
    cmd->add_option("--eta", eta, "stochastic noise weight");
    cmd->add_option("--lambda", lambda, "low-pass filter scale");
    cmd->add_option("--workers", workers, "worker threads (default: logical cores)");
  }

  SolverConfig resolve() const {
    SolverConfig cfg;
    cfg.workers = static_cast<std::uint32_t>(default_workers());
    if (!config.empty()) cfg = read_solver_config(config, cfg);
    if (denoiser) cfg.denoiser = *denoiser;
    if (codec) cfg.codec = *codec;
    if (seed) cfg.seed = *seed;
    if (steps) cfg.steps = *steps;
    if (tau_frac) cfg.tau_frac = *tau_frac;
    if (cg_steps) cfg.cg_steps = *cg_steps;
    if (eta) cfg.eta = *eta;
    if (lambda) cfg.lambda_lpf = *lambda;
    if (workers) cfg.workers = *workers;
    try {
      cfg.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

int cmd_degrade(const std::string& input, const std::string& task, std::optional<std::uint64_t> seed,
                const std::string& manifest, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  DegradationDescriptor d;
  if (!manifest.empty()) d = read_manifest(manifest).descriptor;
  if (!task.empty()) d.task = task;
  if (seed) d.seed = *seed;
  if (manifest.empty() && task.empty()) throw ConfigError("--task or --manifest is required");

  const VideoTensor x = load_video(input);
  Measurement m;
  try {
    m = degrade(x, d);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  save_video(m.y, out);

  RunManifest rm;
  rm.command = "degrade";
  rm.input = input;
  rm.output = out;
  rm.input_shape = m.input_shape;
  rm.descriptor = d;
  rm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path mpath = sidecar(out, ".ini");
  write_manifest(rm, mpath);
  std::cout << "measurement " << to_string(m.y.shape()) << " -> " << out << "\n"
            << "manifest -> " << mpath.string() << "\n";
  return kOk;
}

void report_metrics(const VideoTensor& out, const std::string& reference, const fs::path& path) {
  const VideoTensor ref = convert_range(load_video(reference), out.range());
  const MetricReport p = psnr(out, ref);
  std::string text = p.to_json();
  std::cout << "psnr mean " << p.mean << " dB\n";
  if (ref.shape().h >= kSsimWindow && ref.shape().w >= kSsimWindow) {
    const MetricReport s = ssim(convert_range(out, RangeTag::kUnit), convert_range(ref, RangeTag::kUnit));
    std::cout << "ssim mean " << s.mean << "\n";
    text = "[" + text + ",\n" + s.to_json() + "]";
  }
  write_text(path, text);
}

int cmd_reconstruct(const std::string& input, const std::string& manifest, const SolverFlags& flags,
                    const std::string& reference, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  const RunManifest rm = read_manifest(manifest);
  SolverConfig cfg = flags.resolve();
  const VideoTensor y = load_video(input);
  LinearDegradation a;
  try {
    a = build_operator(rm.descriptor, rm.input_shape);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("manifest operator: ") + e.what());
  }
  if (a.output_shape() != y.shape()) {
    throw ShapeError("measurement " + to_string(y.shape()) + " does not match the manifest operator output " +
                     to_string(a.output_shape()));
  }

  const Models models = make_models(cfg);
  const ReconstructResult r = Solver(cfg, models.denoiser, models.codec).reconstruct(y, a);
  save_video(r.video, out);
  write_text(sidecar(out, ".report.json"), run_report_json(r.report));
  if (!reference.empty()) report_metrics(r.video, reference, sidecar(out, ".metrics.json"));

  RunManifest run = rm;
  run.command = "reconstruct";
  run.input = input;
  run.output = out;
  run.solver = cfg;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(run, sidecar(out, ".ini"));
  std::cout << "reconstruction " << to_string(r.video.shape()) << " -> " << out << "\n"
            << "tau " << r.report.tau << ", final residual " << r.report.final_residual << "\n";
  return kOk;
}

int cmd_blind(const std::string& input, const std::string& pre, const SolverFlags& flags,
              const std::string& reference, const std::string& out) {
  SolverConfig cfg = flags.resolve();
  const VideoTensor y = load_video(input);
  std::shared_ptr<const PreRestorer> restorer;
  if (pre == "identity") {
    restorer = identity_pre_restorer();
  } else if (pre.rfind("oracle:", 0) == 0) {
    restorer = oracle_pre_restorer(load_video(pre.substr(7)));
  } else {
    throw ConfigError("unknown --pre '" + pre + "' (identity, oracle:PATH)");
  }

  const Models models = make_models(cfg);
  const BlindResult r = Solver(cfg, models.denoiser, models.codec).blind_reconstruct(y, *restorer);
  save_video(r.video, out);
  write_text(sidecar(out, ".report.json"), blind_report_json(r));
  if (!reference.empty()) report_metrics(r.video, reference, sidecar(out, ".metrics.json"));

  RunManifest run;
  run.command = "blind";
  run.input = input;
  run.output = out;
  run.input_shape = y.shape();
  run.descriptor.task = "deblur";
  run.descriptor.blur_kernel = kPsfKernelSize;
  run.descriptor.blur_sigma = r.round2.sigma;
  run.solver = cfg;
  run.seconds = r.first.report.total_seconds + r.report.total_seconds;
  write_manifest(run, sidecar(out, ".ini"));
  std::cout << "psf sigma round 1 " << r.round1.sigma << ", round 2 " << r.round2.sigma << "\n"
            << "residual round 1 " << r.round1_residual << ", round 2 " << r.round2_residual << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot video restoration with a diffusion prior"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string input, out, task, manifest, reference, pre = "identity";
  std::optional<std::uint64_t> degrade_seed;
  SolverFlags solver_flags;
  cli::SelfcheckOptions check_opts;

  auto* deg = app.add_subcommand("degrade", "apply a degradation and write the measurement");
  deg->add_option("--input", input, "frame directory or .vtf file")->required();
  deg->add_option("--task", task, "identity|deblur|sr|inpaint|average|deblur+|sr+|inpaint+");
  deg->add_option("--seed", degrade_seed, "mask seed");
  deg->add_option("--manifest", manifest, "replay the degradation recorded in a manifest");
  deg->add_option("--out", out, "output frame directory or .vtf file")->required();

  auto* rec = app.add_subcommand("reconstruct", "restore a measurement");
  rec->add_option("--input", input, "measurement (frame directory or .vtf)")->required();
  rec->add_option("--manifest", manifest, "manifest written by degrade")->required();
  rec->add_option("--reference", reference, "ground truth for PSNR/SSIM");
  rec->add_option("--out", out, "output frame directory or .vtf file")->required();
  solver_flags.attach(rec);

  auto* blind = app.add_subcommand("blind", "restore a blurred video with unknown PSF width");
  blind->add_option("--input", input, "blurred video (frame directory or .vtf)")->required();
  blind->add_option("--pre", pre, "pre-restorer: identity | oracle:PATH");
  blind->add_option("--reference", reference, "ground truth for PSNR/SSIM");
  blind->add_option("--out", out, "output frame directory or .vtf file")->required();

  auto* check = app.add_subcommand("selfcheck", "run internal consistency checks");
  check->add_option("--inject-fault", check_opts.inject_fault)->group("");

  // blind shares the solver flags; a second SolverFlags keeps option ownership simple.
  SolverFlags blind_flags;
  blind_flags.attach(blind);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*deg) return cmd_degrade(input, task, degrade_seed, manifest, out);
    if (*rec) return cmd_reconstruct(input, manifest, solver_flags, reference, out);
    if (*blind) return cmd_blind(input, pre, blind_flags, reference, out);
    if (*check) return cli::run_selfcheck(check_opts, std::cout) ? kOk : kFailure;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const TransportError& e) {
    std::cerr << "remote transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const RemoteError& e) {
    std::cerr << "remote error: " << e.what() << "\n";
    return kRemote;
  } catch (const ProtocolError& e) {
    std::cerr << "remote protocol error: " << e.what() << "\n";
    return kRemote;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
