#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MICROGRID_SIM) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("mgsim_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
  CHECK(run("run") == 2);
  CHECK(run("run --policy nonsense") == 2);
  CHECK(run("run --policy greedy --no-device-shields") == 2);
  CHECK(run("audit /nonexistent.csv") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("run, audit and determinism") {
  TempDir t;
  const std::string out = (t.path / "a").string();
  REQUIRE(run("run --policy heuristic --synth-seed 7 --days 1 --out " + out) == 0);
  const auto j = nlohmann::json::parse(slurp(t.path / "a" / "summary.json"));
  CHECK(j["total"]["neg_balance_steps"] == 0);
  CHECK(run("audit " + (t.path / "a" / "heuristic_s7.csv").string()) == 0);

  REQUIRE(run("run --policy heuristic --synth-seed 7 --days 1 --out " + (t.path / "b").string()) == 0);
  CHECK(slurp(t.path / "a" / "heuristic_s7.csv") == slurp(t.path / "b" / "heuristic_s7.csv"));

  // A corrupted trajectory fails the audit.
  std::string csv = slurp(t.path / "a" / "heuristic_s7.csv");
  std::ofstream(t.path / "bad.csv") << csv << "1,2,3\n";
  CHECK(run("audit " + (t.path / "bad.csv").string()) != 0);
}

TEST_CASE("gen-data and rainflow") {
  TempDir t;
  const fs::path data = t.path / "d.csv";
  REQUIRE(run("gen-data --seed 3 --days 2 --out " + data.string()) == 0);
  std::ifstream in(data);
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 2 * 1440 + 1);
  CHECK(run("run --policy greedy --data " + data.string() + " --days 1 --out " + (t.path / "o").string()) == 0);

  std::ofstream(t.path / "trace.txt") << "0.5\n0.5\n0.5\n";
  CHECK(run("rainflow " + (t.path / "trace.txt").string()) == 0);
  CHECK(run("print-config") == 0);
}

}
