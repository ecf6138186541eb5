// Runs the installed command-line tool as a subprocess.
#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("costsens_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(COSTSENS_CLI) + " " + args + " 2>" + err.string();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int raw = ::pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out, slurp(err)};
}

std::string data(const std::string& rel) { return (fs::path(COSTSENS_DATA) / rel).string(); }

std::string write(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

}  // namespace

TEST_CASE("missing input exits 2 with a machine-readable code") {
  const auto r = run("fit --input /no/such/file.csv");
  CHECK(r.status == 2);
  CHECK(r.err.find("input-not-found") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("").status == 2);
  CHECK(run("simulate --scenarios x.ini").status == 2);  // --seed missing
  CHECK(run("synth").status == 2);
  CHECK(run("fit --input a.csv --variance robust").status == 2);
  CHECK(run("--help").status == 0);
}

TEST_CASE("uncensored file gives the same fit with and without IPW") {
  const auto f = write("uncensored.csv",
                       "cost,time,event,treat,z\n3,1,1,0,0.1\n2,2,1,0,0.4\n4,3,1,0,0.2\n5,1,1,1,0.3\n8,2,1,1,0.9\n"
                       "4,4,1,1,0.5\n1,3,1,0,0.7\n7,5,1,1,0.2\n");
  const auto a = run("fit --input " + f + " --format csv");
  const auto b = run("fit --input " + f + " --format csv --no-ipw");
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  auto body = [](const std::string& s) { return s.substr(0, s.find("ipw")); };
  CHECK(body(a.out) == body(b.out));
  CHECK(a.out.find("treat") != std::string::npos);
}

TEST_CASE("synthetic cohort fit lands near its calibration target") {
  const auto csv = (scratch() / "synth.csv").string();
  REQUIRE(run("synth --seed 42 --output " + csv).status == 0);
  const auto out = (scratch() / "fit.csv").string();
  const auto r = run("fit --input " + csv + " --shift-zero --output " + out);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("cost ratio") != std::string::npos);
  const std::string fit = slurp(out);
  // treat row: name,estimate,se,...,cost_ratio,cr_low,cr_high
  const auto pos = fit.find("\ntreat,");
  REQUIRE(pos != std::string::npos);
  std::istringstream line(fit.substr(pos + 1, fit.find('\n', pos + 1) - pos - 1));
  std::vector<std::string> cells;
  for (std::string c; std::getline(line, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() >= 8);
  const double est = std::stod(cells[1]), se = std::stod(cells[2]);
  CHECK(std::abs(est - std::log(0.873)) < 1.96 * se);
}

TEST_CASE("adjust prints one row and marks domain failures without failing") {
  const auto r = run("adjust --beta-star -0.1358 --se 0.04872 --family bernoulli --confounder pi0=0.7 pi1=0.5 effect=1.1");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("0.89") != std::string::npos);
  const auto d = run("adjust --beta-star 0.1 --se 0.1 --family gamma --confounder shape0=1 scale0=1 shape1=1 scale1=1 "
                     "effect=3 --format csv");
  CHECK(d.status == 0);
  CHECK(d.out.find("mgf-domain") != std::string::npos);
}

TEST_CASE("sweep reproduces the binary grid and rejects malformed files") {
  const auto r = run("sweep --grid " + data("grids/bernoulli-prevalence.ini") + " --format csv");
  REQUIRE(r.status == 0);
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n';
  CHECK(lines == 10);
  const auto bad = write("bad.ini", "[sweep]\nfamily = bernoulli\n[grid]\npi0 = 0.5\nwidth = 1\n");
  const auto b = run("sweep --grid " + bad + " --beta-star 0 --se 1");
  CHECK(b.status == 2);
  CHECK(b.err.find("config-error") != std::string::npos);
  const auto empty = write("empty.ini", "[sweep]\nfamily = poisson\n");
  const auto e = run("sweep --grid " + empty + " --beta-star 0 --se 1 --format csv");
  CHECK(e.status == 0);
  CHECK(std::count(e.out.begin(), e.out.end(), '\n') == 1);
}

TEST_CASE("simulate is byte-identical across runs and worker counts") {
  const auto sc = write("cell.ini", "[scenario]\npreset = ci-bernoulli\ngamma = 0.25\ncensor_prob = 0, 0.25\n");
  const auto a = run("simulate --scenarios " + sc + " --seed 9 --reps 1 --format csv");
  const auto b = run("simulate --scenarios " + sc + " --seed 9 --reps 1 --format csv");
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  const auto w1 = run("simulate --scenarios " + sc + " --seed 9 --reps 30 --workers 1 --format csv");
  const auto w8 = run("simulate --scenarios " + sc + " --seed 9 --reps 30 --workers 8 --format csv");
  CHECK(w1.out == w8.out);
  const auto other = run("simulate --scenarios " + sc + " --seed 10 --reps 30 --format csv");
  CHECK(other.out != w1.out);
}

TEST_CASE("simulate lists unknown scenario keys") {
  const auto sc = write("badcell.ini", "[scenario]\npreset = ci-normal\ngamma = 1\nwidth = 2\nheight = 3\n");
  const auto r = run("simulate --scenarios " + sc + " --seed 1 --reps 2");
  CHECK(r.status == 2);
  CHECK(r.err.find("width") != std::string::npos);
  CHECK(r.err.find("height") != std::string::npos);
}

TEST_CASE("estimation failures exit 1") {
  const auto f = write("separable.csv", "cost,time,event,treat,z,w\n1,1,1,0,1,0\n2,1,1,0,2,1\n3,1,1,1,3,0\n4,1,1,1,4,1\n");
  const auto r = run("diagnose --input " + f);
  CHECK(r.status == 1);
  CHECK(r.err.find("separation") != std::string::npos);
  const auto z = write("zeros.csv", "cost,time,event,treat\n0,1,1,0\n0,1,1,1\n");
  CHECK(run("fit --input " + z + " --shift-zero").status == 1);
}

TEST_CASE("diagnose writes a CSV alongside the table") {
  const auto csv = (scratch() / "synth_diag.csv").string();
  REQUIRE(run("synth --seed 5 --output " + csv).status == 0);
  const auto out = (scratch() / "diag.csv").string();
  const auto r = run("diagnose --input " + csv + " --output " + out);
  REQUIRE(r.status == 0);
  CHECK(slurp(out).rfind("covariate,", 0) == 0);
}
