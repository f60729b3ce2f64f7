#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "exorder/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("exorder_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Runs the binary with `args`; output of both streams lands in `log`.
int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(EXORDER_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_text(const fs::path& out, const std::string& pipelines, bool seed = true) {
  std::ostringstream s;
  if (seed) s << "seed = 11\n";
  s << "pipelines = [" << pipelines << "]\n";
  s << "output_dir = \"" << out.string() << "\"\n";
  s << "[exactness]\npoints = 2\nqmax = 20000\n";
  s << "[sample]\ncount = 5\n";
  return s.str();
}

}  // namespace

TEST_CASE("build writes a snapshot and a manifest") {
  TempDir d("build");
  write(d.path / "c.toml", config_text(d.path / "out", "\"build\"", false));
  CHECK(run_cli("build " + (d.path / "c.toml").string(), d.path / "log") == 0);
  CHECK(fs::exists(d.path / "out" / "tree_snapshot.json"));
  REQUIRE(fs::exists(d.path / "out" / "MANIFEST"));
  auto m = exorder::Json::parse(slurp(d.path / "out" / "MANIFEST"));
  CHECK(m.at("exit_code").get<int>() == 0);
  CHECK(m.at("artifacts").contains("tree_snapshot.json"));
}

TEST_CASE("configuration errors exit with 2") {
  TempDir d("config");
  write(d.path / "noseed.toml", config_text(d.path / "out", "\"build\", \"sample\"", false));
  CHECK(run_cli("run " + (d.path / "noseed.toml").string(), d.path / "log") == 2);
  write(d.path / "unknown.toml", config_text(d.path / "out", "\"build\"") + "[geometry]\nbogus = 1\n");
  CHECK(run_cli("build " + (d.path / "unknown.toml").string(), d.path / "log") == 2);
  CHECK(slurp(d.path / "log").find("bogus") != std::string::npos);
  CHECK(run_cli("run " + (d.path / "missing.toml").string(), d.path / "log") == 2);
  CHECK(run_cli("no-such-command", d.path / "log") == 2);
}

TEST_CASE("identical configs give identical artifacts") {
  TempDir d("determinism");
  const std::string steps = "\"build\", \"exactness\", \"sample\"";
  write(d.path / "a.toml", config_text(d.path / "a", steps));
  write(d.path / "b.toml", config_text(d.path / "b", steps));
  REQUIRE(run_cli("run " + (d.path / "a.toml").string(), d.path / "log") == 0);
  REQUIRE(run_cli("run " + (d.path / "b.toml").string(), d.path / "log") == 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(d.path / "a")) {
    std::string name = e.path().filename().string();
    if (name == "MANIFEST") continue;  // carries timings
    CHECK_MESSAGE(slurp(e.path()) == slurp(d.path / "b" / name), name);
    ++compared;
  }
  CHECK(compared >= 3);
  auto ma = exorder::Json::parse(slurp(d.path / "a" / "MANIFEST"));
  auto mb = exorder::Json::parse(slurp(d.path / "b" / "MANIFEST"));
  CHECK(ma.at("artifacts") == mb.at("artifacts"));
}

TEST_CASE("a corrupted snapshot fails verification with 4") {
  TempDir d("corrupt");
  write(d.path / "c.toml", config_text(d.path / "out", "\"build\""));
  REQUIRE(run_cli("build " + (d.path / "c.toml").string(), d.path / "log") == 0);
  fs::path snap = d.path / "out" / "tree_snapshot.json";
  auto j = exorder::Json::parse(slurp(snap));
  double w = exorder::json_double(j["nu_bar"]["log_weights"][0]);
  j["nu_bar"]["log_weights"][0] = w + 0.01;
  write(snap, exorder::dump_json(j));
  CHECK(run_cli("verify " + (d.path / "c.toml").string(), d.path / "log") == 4);
  CHECK(slurp(d.path / "log").find("nu_bar-normalized") != std::string::npos);
}

TEST_CASE("report on partial and mismatched directories") {
  TempDir d("report");
  CHECK(run_cli("report " + (d.path / "nothing").string(), d.path / "log") == 2);
  fs::create_directories(d.path / "empty");
  CHECK(run_cli("report " + (d.path / "empty").string(), d.path / "log") == 1);  // no MANIFEST
  write(d.path / "c.toml", config_text(d.path / "out", "\"build\""));
  REQUIRE(run_cli("build " + (d.path / "c.toml").string(), d.path / "log") == 0);
  CHECK(run_cli("report " + (d.path / "out").string(), d.path / "log") == 0);
  fs::copy(d.path / "out", d.path / "partial");
  fs::remove(d.path / "partial" / "tree_snapshot.json");
  CHECK(run_cli("report " + (d.path / "partial").string(), d.path / "log") == 1);

  fs::create_directories(d.path / "x");
  fs::create_directories(d.path / "y");
  fs::copy_file(d.path / "out" / "MANIFEST", d.path / "x" / "MANIFEST");
  write(d.path / "x" / "decay.csv", "# schema=exorder.decay version=1\n# config_hash=h\nxi,modulus\n100,0.5\n");
  write(d.path / "y" / "decay.csv", "# schema=exorder.decay version=1\n# config_hash=h\nxi,modulus\n100,0.6\n");
  CHECK(run_cli("report " + (d.path / "x").string() + " --golden " + (d.path / "y").string(), d.path / "log") == 4);
}
