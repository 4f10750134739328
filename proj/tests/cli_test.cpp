#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "vision/config.hpp"
#include "vision/metrics.hpp"
#include "vision/tensor_io.hpp"

using namespace vision;
namespace vt = vision::testing;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / "vision_cli_test" / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  CliRun invoke(const std::string& args) const {
    const fs::path log = dir_ / "log.txt";
    const std::string cmd = std::string(VISION_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
  }

  static std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, DegradeConstantVideoStaysConstant) {
  vtf_save(VideoTensor(Shape{7, 3, 16, 16}, RangeTag::kUnit, 0.4f), path("x.vtf"));
  const auto r = invoke("degrade --input " + path("x.vtf").string() + " --task deblur+ --out " + path("y.vtf").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto y = vtf_load(path("y.vtf"));
  EXPECT_EQ(y.shape(), (Shape{7, 3, 16, 16}));
  for (float v : y.data()) EXPECT_NEAR(v, 0.4f, 1e-6);
  EXPECT_TRUE(fs::exists(path("y.vtf.ini")));
}

TEST_F(Cli, SuperResolutionWritesSmallPngFrames) {
  write_frame_dir(vt::smooth_video(Shape{2, 3, 16, 16}), path("frames"));
  const auto r = invoke("degrade --input " + path("frames").string() + " --task sr --out " + path("lowres").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto y = read_frame_dir(path("lowres"));
  EXPECT_EQ(y.shape(), (Shape{2, 3, 4, 4}));
  EXPECT_TRUE(fs::exists(path("lowres.ini")));
}

TEST_F(Cli, ManifestReplayIsByteIdentical) {
  vtf_save(vt::smooth_video(Shape{8, 1, 16, 16}), path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task inpaint+ --seed 42 --out " +
                path("a.vtf").string()).code, 0);
  const auto r = invoke("degrade --input " + path("x.vtf").string() + " --manifest " + path("a.vtf.ini").string() +
                     " --out " + path("b.vtf").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(bytes(path("a.vtf")), bytes(path("b.vtf")));
  EXPECT_EQ(read_manifest(path("b.vtf.ini")).descriptor.seed, 42u);
}

TEST_F(Cli, IdentityReconstructionWithZeroDenoiser) {
  const auto x = vt::smooth_video(Shape{8, 3, 16, 16});
  vtf_save(x, path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task identity --out " + path("y.vtf").string()).code, 0);
  const auto r = invoke("reconstruct --input " + path("y.vtf").string() + " --manifest " + path("y.vtf.ini").string() +
                     " --denoiser zero --lambda 0 --eta 0 --workers 2 --reference " + path("x.vtf").string() + " --out " +
                     path("r.vtf").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_GE(psnr(vtf_load(path("r.vtf")), x).mean, 50.0);
  EXPECT_TRUE(fs::exists(path("r.vtf.report.json")));
  EXPECT_TRUE(fs::exists(path("r.vtf.metrics.json")));
  const auto manifest = read_manifest(path("r.vtf.ini"));
  ASSERT_TRUE(manifest.solver.has_value());
  EXPECT_EQ(manifest.solver->denoiser, "zero");
}

TEST_F(Cli, SameSeedGivesIdenticalOutputs) {
  vtf_save(vt::smooth_video(Shape{3, 3, 16, 16}), path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task deblur --out " + path("y.vtf").string()).code, 0);
  const std::string base = "reconstruct --input " + path("y.vtf").string() + " --manifest " +
                           path("y.vtf.ini").string() + " --codec haar --seed 3 ";
  ASSERT_EQ(invoke(base + "--workers 1 --out " + path("a.vtf").string()).code, 0);
  ASSERT_EQ(invoke(base + "--workers 3 --out " + path("b.vtf").string()).code, 0);
  EXPECT_EQ(bytes(path("a.vtf")), bytes(path("b.vtf")));
}

TEST_F(Cli, MissingManifestFlagIsConfigError) {
  vtf_save(VideoTensor(Shape{1, 1, 4, 4}, RangeTag::kUnit), path("y.vtf"));
  const auto r = invoke("reconstruct --input " + path("y.vtf").string() + " --out " + path("r.vtf").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("--manifest"), std::string::npos) << r.output;
}

TEST_F(Cli, BadSolverValueIsConfigError) {
  vtf_save(VideoTensor(Shape{1, 1, 8, 8}, RangeTag::kUnit), path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task deblur --out " + path("y.vtf").string()).code, 0);
  const auto r = invoke("reconstruct --input " + path("y.vtf").string() + " --manifest " + path("y.vtf.ini").string() +
                     " --eta 3 --out " + path("r.vtf").string());
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task smear --out " + path("z.vtf").string()).code, 2);
}

TEST_F(Cli, MissingInputIsIoError) {
  const auto r = invoke("degrade --input " + path("absent.vtf").string() + " --task sr --out " + path("y.vtf").string());
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(Cli, UnreachableRemoteIsTransportError) {
  vtf_save(VideoTensor(Shape{1, 1, 8, 8}, RangeTag::kUnit, 0.5f), path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task deblur --out " + path("y.vtf").string()).code, 0);
  const auto r = invoke("reconstruct --input " + path("y.vtf").string() + " --manifest " + path("y.vtf.ini").string() +
                     " --denoiser remote:127.0.0.1:1 --out " + path("r.vtf").string());
  EXPECT_EQ(r.code, 4) << r.output;
}

TEST_F(Cli, BlindWithOraclePreRestorer) {
  const auto x = vt::smooth_video(Shape{2, 3, 32, 32});
  vtf_save(x, path("x.vtf"));
  ASSERT_EQ(invoke("degrade --input " + path("x.vtf").string() + " --task deblur --out " + path("y.vtf").string()).code, 0);
  const auto r = invoke("blind --input " + path("y.vtf").string() + " --pre oracle:" + path("x.vtf").string() +
                     " --reference " + path("x.vtf").string() + " --out " + path("b.vtf").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("psf sigma round 1 3"), std::string::npos) << r.output;
  EXPECT_NEAR(read_manifest(path("b.vtf.ini")).descriptor.blur_sigma, 3.0, 0.5);
  EXPECT_EQ(invoke("blind --input " + path("y.vtf").string() + " --pre magic --out " + path("c.vtf").string()).code, 2);
}

TEST_F(Cli, SelfcheckPassesAndCatchesInjectedFault) {
  const auto start = std::chrono::steady_clock::now();
  const auto ok = invoke("selfcheck");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_NE(ok.output.find("all checks passed"), std::string::npos);
  EXPECT_LT(seconds, 60.0);
  const auto bad = invoke("selfcheck --inject-fault adjoint");
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.output.find("FAIL"), std::string::npos) << bad.output;
}
