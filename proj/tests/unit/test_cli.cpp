#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "itm/hdr_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kTiny =
    " --frame-size 48 --patch-size 40 --patches 2 --epochs 2 --batch-size 2 --base-channels 8"
    " --res-blocks 1 --global-pool 8 --global-dim 16 --rdb-layers 2 --rdb-growth 8 --cbam-reduction 4";

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" ITM_CLI_PATH "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// One small trained codec shared by the read-only tests.
const fs::path& workspace() {
  static const fs::path dir = [] {
    auto d = testing_dir("cli");
    REQUIRE(run(d, "make-scenes --output scenes --count 2 --size 64 --seed 1").code == 0);
    REQUIRE(run(d, "train --data scenes --styles reinhard,durand --output m.pt --seed 3" + kTiny).code == 0);
    return d;
  }();
  return dir;
}

const std::string kModel = " --weights m.pt --profile m.pt.profile";

}  // namespace

TEST_CASE("train writes a checkpoint, a profile and a log") {
  const auto dir = testing_dir("cli_train");
  REQUIRE(run(dir, "make-scenes --output scenes --count 2 --size 64").code == 0);
  const auto r = run(dir, "train --data scenes --output a.pt --log log.jsonl --seed 1" + kTiny);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "a.pt"));
  CHECK(fs::exists(dir / "a.pt.profile"));
  CHECK(slurp(dir / "a.pt.profile").find("style_registry = reinhard") != std::string::npos);
  const auto log = slurp(dir / "log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
}

TEST_CASE("encode writes an ldr of the input size") {
  const auto& dir = workspace();
  CHECK(run(dir, "encode --input scenes/scene_0.hdr --style reinhard --output e.png" + kModel).code == 0);
  const auto ldr = itm::read_ldr(dir / "e.png");
  CHECK(ldr.width == 64);
  CHECK(ldr.height == 64);
  CHECK(run(dir, "encode --input scenes/scene_0.hdr --style durand --jpeg-quality 80 --output e.jpg" + kModel)
            .code == 0);
  CHECK(itm::read_ldr(dir / "e.jpg").width == 64);
}

TEST_CASE("encode reports style similarity when given a target") {
  const auto& dir = workspace();
  const auto r = run(dir, "encode --input scenes/scene_0.hdr --style reinhard --output e.png --target e.png" + kModel);
  CHECK(r.code == 0);
  CHECK(r.out.find("ldr_psnr,inf") != std::string::npos);
}

TEST_CASE("style misuse exits with the usage code") {
  const auto& dir = workspace();
  const auto unknown = run(dir, "encode --input scenes/scene_0.hdr --style aubry --output x.png" + kModel);
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("durand") != std::string::npos);
  CHECK(unknown.err.find("reinhard") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.png"));
  CHECK(run(dir, "encode --input scenes/scene_0.hdr --style reinhard --param 1.2 --output x.png" + kModel).code ==
        2);
  CHECK(run(dir, "encode --input scenes/scene_0.hdr --output x.png" + kModel).code == 2);
  CHECK(run(dir, "frobnicate").code == 2);
}

TEST_CASE("decode restores either style without a style flag") {
  const auto& dir = workspace();
  for (const std::string style : {"reinhard", "durand"}) {
    REQUIRE(run(dir, "encode --input scenes/scene_1.hdr --style " + style + " --output s.png" + kModel).code == 0);
    const auto r = run(dir, "decode --input s.png --output s.hdr --report --ground-truth scenes/scene_1.hdr" + kModel);
    CHECK(r.code == 0);
    CHECK(r.out.find("pu_psnr") != std::string::npos);
    CHECK(itm::read_hdr(dir / "s.hdr").width == 64);
  }
}

TEST_CASE("data failures exit with the data code") {
  const auto& dir = workspace();
  std::ofstream(dir / "corrupt.png") << "not an image";
  CHECK(run(dir, "decode --input corrupt.png --output c.hdr" + kModel).code == 3);
  std::ofstream(dir / "corrupt.hdr") << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 4 +X 4\n";
  CHECK(run(dir, "encode --input corrupt.hdr --style reinhard --output c.png" + kModel).code == 3);
}

TEST_CASE("incremental training requires an initial checkpoint") {
  const auto& dir = workspace();
  const auto r = run(dir, "train --data scenes --scheme incremental --styles durand --output inc.pt" + kTiny);
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(dir / "inc.pt"));
}

TEST_CASE("incremental training extends a trained codec") {
  const auto dir = testing_dir("cli_incremental");
  REQUIRE(run(dir, "make-scenes --output scenes --count 2 --size 64").code == 0);
  REQUIRE(run(dir, "train --data scenes --output base.pt" + kTiny).code == 0);
  const auto r = run(dir, "train --data scenes --scheme incremental --styles durand --init-checkpoint base.pt"
                          " --output inc.pt" + kTiny);
  CHECK(r.code == 0);
  CHECK(slurp(dir / "inc.pt.profile").find("style_registry = durand, reinhard") != std::string::npos);
}

TEST_CASE("eval emits a delimited metric table") {
  const auto& dir = workspace();
  const auto r = run(dir, "eval --data scenes --style durand" + kModel);
  CHECK(r.code == 0);
  CHECK(r.out.rfind("image,ldr_psnr,ldr_ssim,pu_psnr,pu_ssim,pu_msssim\n", 0) == 0);
  CHECK(r.out.find("\nscene_0.hdr,") != std::string::npos);
  CHECK(r.out.find("\nmean,") != std::string::npos);
}

TEST_CASE("rd-curve emits a monotone rate table and a plot") {
  const auto& dir = workspace();
  const auto r = run(dir, "rd-curve --data scenes --qualities 50,60,70,80,90,95 --svg rd.svg" + kModel);
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "quality,bpp,pu_psnr,pu_ssim,pu_msssim");
  double previous = 0.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const auto first = line.find(',');
    const double bpp = std::stod(line.substr(first + 1));
    CHECK(bpp > previous);
    previous = bpp;
    ++rows;
  }
  CHECK(rows == 6);
  CHECK(fs::exists(dir / "rd.svg"));
  CHECK(run(dir, "rd-curve --data scenes --qualities 90,50" + kModel).code == 2);
}

TEST_CASE("prepare-data writes samples and a manifest") {
  const auto& dir = workspace();
  const auto r = run(dir, "prepare-data --data scenes --frame-size 48 --patch-size 40 --patches 3 --output corpus");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "corpus" / "manifest.tsv"));
  CHECK(fs::exists(dir / "corpus" / "scene_0_p2.hdr"));
  CHECK(fs::exists(dir / "corpus" / "scene_1_p0.reinhard.png"));
}

TEST_CASE("a fixed seed fixes the trained codec") {
  const auto dir = testing_dir("cli_seed");
  REQUIRE(run(dir, "make-scenes --output scenes --count 2 --size 64 --seed 4").code == 0);
  for (const std::string name : {"a", "b", "c"}) {
    const std::string seed = name == "c" ? "8" : "7";
    REQUIRE(run(dir, "train --data scenes --output " + name + ".pt --seed " + seed + kTiny).code == 0);
    REQUIRE(run(dir, "encode --input scenes/scene_0.hdr --style reinhard --output " + name + ".png --weights " +
                         name + ".pt --profile " + name + ".pt.profile")
                .code == 0);
  }
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
  CHECK(slurp(dir / "a.png") != slurp(dir / "c.png"));
}

TEST_CASE("flags come from the environment and a config file") {
  const auto& dir = workspace();
  CHECK(run(dir, "encode --input scenes/scene_0.hdr --output env.png" + kModel, "ITM_STYLE=durand").code == 0);
  CHECK(fs::exists(dir / "env.png"));
  std::ofstream(dir / "c.toml") << "[encode]\nstyle = \"aubry\"\n";
  CHECK(run(dir, "--config c.toml encode --input scenes/scene_0.hdr --output cfg.png" + kModel).code == 2);
  CHECK(run(dir, "--config c.toml encode --input scenes/scene_0.hdr --style reinhard --output cfg.png" + kModel)
            .code == 0);
}
