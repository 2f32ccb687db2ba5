#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "wcvs/cli.hpp"
#include "wcvs/io.hpp"

namespace wcvs {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "wcvs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return test::data_path(name).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"simulate", "--scene", data("scene_checker.json")}).code, 1);
  EXPECT_EQ(run({"guide", "--trajectory", data("traj_linear.json"), "--out", "/tmp/x"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, DataErrorExitsTwo) {
  test::TempDir dir("cli_data");
  io::write_text(dir / "bad.json", "{\"quads\": [{\"corners\": 3}]}");
  const CliRun r = run({"simulate", "--scene", (dir / "bad.json").string(), "--trajectory", data("traj_linear.json"),
                     "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, GradcheckPasses) {
  test::TempDir dir("cli_gc");
  const CliRun r = run({"gradcheck", "--seed", "7", "--count", "2", "--out", (dir / "gc.json").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  const io::json j = io::read_json(dir / "gc.json");
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_LT(j["max_rel_error"].get<double>(), 1e-4);
  EXPECT_EQ(run({"gradcheck", "--op", "no_such_op"}).code, 2);
}

TEST(Cli, SimulateThenGuideWithEmptyCloud) {
  test::TempDir dir("cli_guide");
  const CliRun sim = run({"simulate", "--scene", data("scene_checker.json"), "--trajectory", data("traj_linear.json"),
                       "--out", (dir / "gt").string()});
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_TRUE(fs::exists(dir / "gt" / "frame_0005.pfm"));
  EXPECT_TRUE(fs::exists(dir / "gt" / "flow_0001.pfm"));
  EXPECT_FALSE(fs::exists(dir / "gt" / "flow_0000.pfm"));
  EXPECT_TRUE(fs::exists(dir / "gt" / "semantics_0000.pgm"));

  io::write_ply(dir / "empty.ply", WorldCloud{});
  const CliRun g = run({"guide", "--trajectory", data("traj_linear.json"), "--cloud", (dir / "empty.ply").string(),
                     "--frames", (dir / "gt").string(), "--out", (dir / "g").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  for (int t = 0; t < 6; ++t) {
    const GuidanceImage gi = io::read_guidance(dir / "g", io::frame_name("guidance", t, ""));
    EXPECT_EQ(gi.valid.count(), 0u);
    for (double v : gi.rgb.data()) ASSERT_EQ(v, 0.0);
  }

  const CliRun st = run({"metrics", "short-term", "--frames", (dir / "gt").string(), "--flows", (dir / "gt").string()});
  EXPECT_EQ(st.code, 0) << st.err;
  const CliRun fb = run({"metrics", "fb", "--first", (dir / "gt" / "frame_0000.pfm").string(), "--last",
                      (dir / "gt" / "frame_0000.pfm").string()});
  EXPECT_EQ(fb.code, 0) << fb.err;
}

TEST(Cli, StereoIsConsistent) {
  test::TempDir dir("cli_stereo");
  const CliRun r = run({"stereo", "--scene", data("scene_checker.json"), "--trajectory", data("traj_stereo.json"),
                     "--out", dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(io::read_json(dir / "stereo_report.json")["consistent"].get<bool>());
}

TEST(Cli, NetspecEmitAndValidate) {
  test::TempDir dir("cli_netspec");
  const CliRun e = run({"netspec", "emit", "--role", "generator", "--height", "16", "--width", "16", "--widths", "16",
                     "8", "--out", (dir / "g.json").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(run({"netspec", "validate", (dir / "g.json").string()}).code, 0);

  io::json bad = io::read_json(dir / "g.json");
  bad["widths"] = io::json::array();
  io::write_json(dir / "bad.json", bad);
  EXPECT_EQ(run({"netspec", "validate", (dir / "bad.json").string()}).code, 2);
}

TEST(Cli, PipelineIsDeterministic) {
  test::TempDir dir("cli_pipeline");
  const io::json base = io::read_json(test::data_path("manifest.json"));
  std::vector<fs::path> outs;
  for (const char* name : {"a", "b"}) {
    io::json m = base;
    m["scene"] = data("scene_checker.json");
    m["trajectory"] = data("traj_linear.json");
    m["output_dir"] = (dir / name).string();
    io::write_json(dir / (std::string(name) + ".json"), m);
    const CliRun r = run({"pipeline", "--manifest", (dir / (std::string(name) + ".json")).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    outs.push_back(dir / name);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(outs[0])) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), outs[0]);
    ASSERT_TRUE(fs::exists(outs[1] / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(outs[1] / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 20u);
  const io::json report = io::read_json(outs[0] / "report.json");
  EXPECT_TRUE(report.contains("losses"));
  EXPECT_TRUE(report.contains("fb_consistency"));
}

}  // namespace
}  // namespace wcvs
