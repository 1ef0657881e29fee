#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "irp/capture_io.hpp"
#include "irp/manifest.hpp"
#include "temp_dir.hpp"

namespace irp {
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run irp_lab(const std::string& args, const test::TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(IRP_LAB_BIN) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

TEST(Cli, GenerationIsReproducible) {
  test::TempDir dir;
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  ASSERT_EQ(irp_lab("gen --out " + a + " --scenes 3 --size 24x20 --seed 4", dir).code, 0);
  ASSERT_EQ(irp_lab("gen --out " + b + " --scenes 3 --size 24x20 --seed 4", dir).code, 0);
  EXPECT_EQ(read_file_bytes(dir / "a" / "manifest.json"), read_file_bytes(dir / "b" / "manifest.json"));
}

TEST(Cli, ExitCodes) {
  test::TempDir dir;
  const auto missing = (dir / "nowhere" / "x.png").string();
  const auto r = irp_lab("predict --model " + (dir / "m.irpw").string() + " --image " + missing, dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("m.irpw"), std::string::npos) << r.err;

  EXPECT_EQ(irp_lab("gen --out x --frobnicate", dir).code, 2);
  EXPECT_EQ(irp_lab("", dir).code, 2);
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << R"({"predictor": {"widht": 3}})";
  }
  const auto bad = irp_lab("config --config " + (dir / "bad.json").string(), dir);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("predictor.widht"), std::string::npos) << bad.err;
}

TEST(Cli, SmallPipeline) {
  test::TempDir dir;
  {
    std::ofstream cfg(dir / "small.json");
    cfg << R"({"predictor": {"channels": 8, "squeeze_ratio": 4, "fusion_repeats": 1, "input_size": 16}})";
  }
  const std::string c = " --config " + (dir / "small.json").string();
  const std::string d = (dir / "ds").string();
  ASSERT_EQ(irp_lab("gen --out " + d + " --scenes 10 --size 24x24" + c, dir).code, 0);
  const std::string m = d + "/manifest.json", l = d + "/labels.csv", w = (dir / "m.irpw").string();
  ASSERT_EQ(irp_lab("label --manifest " + m + " --out " + l + c, dir).code, 0);
  ASSERT_EQ(irp_lab("train --manifest " + m + " --labels " + l + " --out " + w + " --epochs 1" + c, dir).code, 0);
  const auto ev = irp_lab("eval --model " + w + " --manifest " + m + " --labels " + l, dir);
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("scene_average"), std::string::npos);

  const auto manifest = load_manifest(m);
  const auto capture = d + "/" + manifest.scenes.front().captures.front().file.path;
  const auto pr = irp_lab("predict --model " + w + " --image " + capture, dir);
  ASSERT_EQ(pr.code, 0) << pr.err;
  EXPECT_NO_THROW((void)std::stod(pr.out));
}

}  // namespace
}  // namespace irp
