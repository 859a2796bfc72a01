// End-to-end checks of the command-line binary: exit codes, output files,
// embedded config, and byte-level determinism.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "equibound/data_model.hpp"
#include "equibound/synth.hpp"

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("EQUIBOUND_CLI");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "equibound_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate then audit produces the report files") {
  fs::path dir = work_dir("audit");
  const std::string frame = (dir / "frame.csv").string();
  CHECK(run("generate --n-pre 1500 --n-post 1500 --seed 4 --offsets=-1,-2 --out " +
            frame) == 0);
  CHECK(run("audit --input " + frame + " --gamma-min 1.0 --gamma-max 1.1 " +
            "--gamma-step 0.05 --seed 1 --out-dir " + dir.string()) == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "curves.csv"));

  auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rep["version"].is_string());
  CHECK(rep["config"]["command"] == "audit");
  CHECK(rep["config"]["seed"] == 1);
  CHECK(rep["gamma_grid"].size() == 3);
  CHECK(rep["groups"].size() == 2);
}

TEST_CASE("audit exits 2 on a frame violating the era invariant") {
  fs::path dir = work_dir("invalid");
  const fs::path frame = dir / "bad.csv";
  std::ofstream(frame) << "x1,d,t,y,g\n0.1,0,1,1,0\n0.2,1,0,,0\n";
  CHECK(run("audit --input " + frame.string() + " --out-dir " + dir.string()) == 2);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("audit") == 1);                       // missing --input
  CHECK(run("frobnicate") == 1);                  // unknown subcommand
  fs::path dir = work_dir("usage");
  const std::string frame = (dir / "frame.csv").string();
  CHECK(run("generate --n-pre 300 --n-post 300 --out " + frame) == 0);
  CHECK(run("audit --input " + frame + " --gamma-min 0.5 --out-dir " +
            dir.string()) == 1);                  // gamma below 1
}

TEST_CASE("single-point gamma grid works") {
  fs::path dir = work_dir("single");
  const std::string frame = (dir / "frame.csv").string();
  CHECK(run("generate --n-pre 800 --n-post 800 --seed 9 --out " + frame) == 0);
  CHECK(run("audit --input " + frame + " --gamma-min 1.0 --gamma-max 1.0 " +
            "--out-dir " + dir.string()) == 0);
  auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rep["gamma_grid"].size() == 1);
  for (const auto& grp : rep["groups"]) CHECK(grp["points"].size() == 1);
}

TEST_CASE("simulate: one trial emits one row per method; fixed seed is byte-stable") {
  fs::path dir1 = work_dir("sim1");
  const std::string base =
      "simulate --trials 1 --n-pre 700 --n-post 700 --seed 11 --out-dir ";
  CHECK(run(base + dir1.string()) == 0);
  CHECK(fs::exists(dir1 / "coverage.csv"));
  std::istringstream cov(slurp(dir1 / "coverage.csv"));
  std::string line;
  int data_rows = 0;
  bool header_seen = false;
  while (std::getline(cov, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header_seen) {
      CHECK(line == "n,method,capture_rate");
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  CHECK(data_rows == 3);  // onestep, plugin_ci, plugin_point

  // identical invocation again: outputs must be byte-identical
  const std::string cov1 = slurp(dir1 / "coverage.csv");
  const std::string tri1 = slurp(dir1 / "trials.csv");
  CHECK(run(base + dir1.string()) == 0);
  CHECK(cov1 == slurp(dir1 / "coverage.csv"));
  CHECK(tri1 == slurp(dir1 / "trials.csv"));
}

TEST_CASE("benchmark runs end-to-end on a frame with a binary covariate") {
  fs::path dir = work_dir("bench");
  // build a frame whose x2 is binary
  equibound::SyntheticConfig dgp;
  dgp.n_pre = 600;
  dgp.n_post = 1400;
  dgp.seed = 13;
  auto [frame, latent] = equibound::generate(dgp);
  std::vector<equibound::UnitRecord> recs;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    equibound::UnitRecord r;
    r.x = {frame.x(i, 0), frame.x(i, 1) > 0.0 ? 1.0 : 0.0};
    r.d = frame.d(i);
    r.t = frame.t(i);
    if (r.d == 0) r.y = frame.y(i);
    r.g = frame.group(i);
    recs.push_back(r);
  }
  const fs::path fpath = dir / "frame.csv";
  equibound::save_frame(equibound::AuditFrame::from_records(recs), fpath);

  CHECK(run("benchmark --input " + fpath.string() + " --z-column x2 --out-dir " +
            dir.string()) == 0);
  auto out = nlohmann::json::parse(slurp(dir / "gamma_prime.json"));
  CHECK(out["gamma_prime"].get<double>() >= 1.0);
  CHECK(out["z_column"] == "x2");
  CHECK(out["config"]["command"] == "benchmark");

  // non-binary column exits 2
  CHECK(run("benchmark --input " + fpath.string() + " --z-column x1 --out-dir " +
            dir.string()) == 2);
}

TEST_CASE("config file supplies defaults that flags override") {
  fs::path dir = work_dir("config");
  const std::string frame = (dir / "frame.csv").string();
  CHECK(run("generate --n-pre 500 --n-post 500 --seed 3 --out " + frame) == 0);
  std::ofstream(dir / "run.toml") << "[audit]\nseed = 77\ngamma-max = 1.05\n";
  CHECK(run("--config " + (dir / "run.toml").string() + " audit --input " + frame +
            " --out-dir " + dir.string()) == 0);
  auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rep["config"]["seed"] == 77);
  CHECK(rep["config"]["gamma_max"] == 1.05);
}
