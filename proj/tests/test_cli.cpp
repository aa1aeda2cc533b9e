#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "utp/runner.hpp"
#include "utp/trace.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(UTP_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "utp_cli_test";
  fs::create_directories(dir);
  fs::remove(dir / name);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run with verification") {
  const Result r = cli("run --op cholesky --n 64 --b1 2 --config G1 --verify");
  CHECK(r.code == 0);
  std::istringstream is(r.out);
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  CHECK(header == utp::kResultHeader);
  const auto row = utp::ResultRow::parse(line);
  REQUIRE(row.residual.has_value());
  CHECK(*row.residual <= 1e-8);
}

TEST_CASE("ragged partition exits 4") { CHECK(cli("run --op cholesky --n 64 --b1 3 --config G1").code == 4); }

TEST_CASE("distributed run reports messages") {
  const fs::path out = scratch("g3.csv");
  CHECK(cli("run --op cholesky --config G3 --n 64 --b1 2 --b2 2 --ranks 2 --out " + out.string()).code == 0);
  std::istringstream is(slurp(out));
  std::string header, line;
  std::getline(is, header);
  std::getline(is, line);
  CHECK(utp::ResultRow::parse(line).messages > 0);
  CHECK_FALSE(utp::ResultRow::parse(line).residual.has_value());
}

TEST_CASE("--out appends and writes the header once") {
  const fs::path out = scratch("append.csv");
  CHECK(cli("run --n 16 --b1 2 --config G1 --out " + out.string()).code == 0);
  CHECK(cli("run --n 16 --b1 2 --config G2 --out " + out.string()).code == 0);
  std::istringstream is(slurp(out));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == utp::kResultHeader);
  CHECK(lines[1].rfind("G1,", 0) == 0);
  CHECK(lines[2].rfind("G2,", 0) == 0);
}

TEST_CASE("configuration errors exit 4") {
  CHECK(cli("run --n 16 --b1 2 --config G4").code == 4);
  CHECK(cli("run --n 16 --b1 2 --config G3 --ranks 2").code == 4);
  CHECK(cli("run --n 16 --b1 2 --config /nonexistent.cfg").code == 4);
  CHECK(cli("run --n 16 --config G1").code == 4);
  CHECK(cli("run --op lu --n 16 --b1 2 --config G1").code == 4);
  const fs::path cfg = scratch("bad.cfg");
  std::ofstream(cfg) << "node cb kernel\nnode cb kernel\nroot cb\n";
  const Result r = cli("run --n 16 --b1 2 --config " + cfg.string());
  CHECK(r.code == 4);
  CHECK(r.out.find("line 2") != std::string::npos);
}

TEST_CASE("config file") {
  const fs::path cfg = scratch("g2.cfg");
  std::ofstream(cfg) << "# shared memory\nnode sg threaded workers=3\nnode cb kernel\nedge sg cb\nroot sg\n";
  const Result r = cli("run --n 32 --b1 4 --config " + cfg.string() + " --verify");
  CHECK(r.code == 0);
  CHECK(r.out.find(",3,1,") != std::string::npos);
}

TEST_CASE("non-SPD input exits 3 naming the pivot") {
  for (const char* cfg : {"G1 --b2 2", "G2 --threads 2 --b2 2", "G3 --ranks 2 --b2 2", "G3 --ranks 4 --b2 2"}) {
    CAPTURE(cfg);
    const Result r = cli(std::string("run --n 32 --b1 2 --negate-diagonal --config ") + cfg);
    CHECK(r.code == 3);
    CHECK(r.out.find("pivot 0") != std::string::npos);
  }
}

TEST_CASE("trace-check") {
  const fs::path trace = scratch("t.csv");
  REQUIRE(cli("run --n 32 --b1 2 --b2 2 --config G3 --ranks 2 --trace " + trace.string()).code == 0);
  const Result ok = cli("trace-check " + trace.string());
  CHECK(ok.code == 0);
  CHECK(ok.out.find("ok:") == 0);

  // Swap a ready and a run_start line of one leaf.
  const fs::path flat = scratch("flat.csv");
  REQUIRE(cli("run --n 32 --b1 4 --config G2 --threads 2 --trace " + flat.string()).code == 0);
  std::ifstream is(flat);
  auto ev = utp::read_trace(is);
  std::size_t ready = 0, start = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].event == utp::EventKind::RunStart) {
      start = i;
      break;
    }
  }
  for (std::size_t i = 0; i < start; ++i) {
    if (ev[i].task == ev[start].task && ev[i].event == utp::EventKind::Ready) ready = i;
  }
  std::swap(ev[ready].event, ev[start].event);
  std::swap(ev[ready].node, ev[start].node);
  const fs::path bad = scratch("swapped.csv");
  {
    std::ofstream os(bad);
    utp::write_trace(os, ev);
  }
  const Result v = cli("trace-check " + bad.string());
  CHECK(v.code == 5);
  CHECK(v.out.find("violation") != std::string::npos);

  const fs::path empty = scratch("empty.csv");
  std::ofstream{empty};
  CHECK(cli("trace-check " + empty.string()).code == 4);
  CHECK(cli("trace-check /nonexistent.csv").code == 4);
}

TEST_CASE("bench prints one row per point") {
  const Result r = cli("bench --n 32,64 --config G1,G2 --b1 2 --repeats 2 --verify");
  CHECK(r.code == 0);
  std::istringstream is(r.out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == utp::kResultHeader);
  CHECK(utp::ResultRow::parse(lines[1]).residual == utp::ResultRow::parse(lines[2]).residual);
}
