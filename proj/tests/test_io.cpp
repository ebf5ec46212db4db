#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "s3w/io.hpp"
#include "s3w/s3w.hpp"

using namespace s3w;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
  fs::path path;
  TmpDir() : path(fs::temp_directory_path() /
                  ("s3w_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("shortest round-trip formatting preserves doubles") {
  Rng r(301);
  for (int i = 0; i < 200; ++i) {
    double x = (r.u01() - 0.5) * std::pow(10.0, double(r.bounded(20)) - 10.0);
    CHECK(std::stod(format_g17(x)) == x);
  }
  CHECK(std::stod(format_g17(3.14159265358979312)) == 3.14159265358979312);
}

TEST_CASE("cloud files round trip bare and weighted layouts") {
  TmpDir tmp;
  Rng r(303);
  Mat pts = sample_uniform_rows(2, 17, r);

  std::string bare = tmp.file("bare.csv");
  write_cloud_csv(bare, pts);
  EmpiricalMeasure back = read_cloud_csv(bare);
  CHECK(back.uniform);
  // exact values round trip; renormalization may shave an ulp
  CHECK((back.points - pts).cwiseAbs().maxCoeff() < 1e-15);

  Vec w(17);
  for (int i = 0; i < 17; ++i) w[i] = double(i + 1);
  w /= w.sum();
  std::string weighted = tmp.file("weighted.csv");
  write_cloud_csv(weighted, pts, w);
  EmpiricalMeasure wback = read_cloud_csv(weighted);
  CHECK_FALSE(wback.uniform);
  CHECK((wback.points - pts).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((wback.weights - w).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("reader diagnoses malformed files with their location") {
  TmpDir tmp;
  std::string p = tmp.file("bad.csv");
  {
    std::ofstream out(p);
    out << "0,0,1\n0,1\n";
  }
  try {
    read_cloud_csv(p);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find(p) != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);
  }
  {
    std::ofstream out(p);
    out << "0,0,0.6,-0.5\n";  // negative weight column
  }
  CHECK_THROWS_AS(read_cloud_csv(p), std::invalid_argument);
  CHECK_THROWS_AS(read_cloud_csv(tmp.file("missing.csv")),
                  std::invalid_argument);
}

TEST_CASE("grid specifications expand to the documented forms") {
  auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  };
  close(parse_grid("1,2.5,7"), {1.0, 2.5, 7.0});
  close(parse_grid("42"), {42.0});
  close(parse_grid("0:10:5"), {0.0, 2.5, 5.0, 7.5, 10.0});
  close(parse_grid("1:16:log:5"), {1.0, 2.0, 4.0, 8.0, 16.0});
  // endpoints are exact, not accumulated
  CHECK(parse_grid("1e-6:1e-1:log:6").front() == 1e-6);
  CHECK(parse_grid("1e-6:1e-1:log:6").back() == 1e-1);
  CHECK_THROWS_AS(parse_grid(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1:2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("0:10:log:3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("1:2:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("a,b"), std::invalid_argument);
}

TEST_CASE("ramp specifications") {
  CHECK(parse_ramp("2:30") == std::make_pair(std::size_t{2}, std::size_t{30}));
  CHECK(parse_ramp("5:5") == std::make_pair(std::size_t{5}, std::size_t{5}));
  CHECK_THROWS_AS(parse_ramp("0:5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ramp("5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ramp("1:2:3"), std::invalid_argument);
}

TEST_CASE("generator specifications build the documented measures") {
  Rng r(305);
  GeneratedTarget u = load_target("uniform:d=2:n=50", r);
  CHECK(u.measure.size() == 50);
  CHECK(u.measure.sphere_dim() == 2);
  CHECK(u.density.has_value());

  Rng r2(306);
  GeneratedTarget v = load_target("vmf:mu=0,0,1:kappa=10:n=30", r2);
  CHECK(v.measure.size() == 30);
  REQUIRE(v.density.has_value());
  CHECK(v.density->components.size() == 1);
  CHECK(v.density->components[0].kappa == 10.0);

  Rng r3(307);
  GeneratedTarget ico = load_target("icosa12:kappa=50:n=24", r3);
  CHECK(ico.measure.size() == 24);
  REQUIRE(ico.density.has_value());
  CHECK(ico.density->components.size() == 12);

  // high-dimensional generator: measure only, no closed-form density
  Rng r4(308);
  GeneratedTarget hd = load_target("vmf:mu=1,0,0,0:kappa=3:n=10", r4);
  CHECK(hd.measure.sphere_dim() == 3);
  CHECK_FALSE(hd.density.has_value());

  Rng r5(309);
  CHECK_THROWS_AS(load_target("uniform:d=2:n=50:extra=1", r5),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_target("vmf:kappa=1:n=5", r5), std::invalid_argument);

  // determinism
  Rng a(310), b(310);
  GeneratedTarget ga = load_target("uniform:d=3:n=20", a);
  GeneratedTarget gb = load_target("uniform:d=3:n=20", b);
  CHECK((ga.measure.points - gb.measure.points).norm() == 0.0);
}

TEST_CASE("file targets load through the same entry point") {
  TmpDir tmp;
  Rng r(311);
  Mat pts = sample_uniform_rows(2, 9, r);
  std::string p = tmp.file("cloud.csv");
  write_cloud_csv(p, pts);
  GeneratedTarget t = load_target(p, r);
  CHECK(t.measure.size() == 9);
  CHECK_FALSE(t.density.has_value());
}

TEST_CASE("trace files carry blanks off the metric cadence") {
  TmpDir tmp;
  FlowTrace trace;
  trace.loss = {0.5, 0.25};
  trace.cum_seconds = {0.125, 0.25};
  trace.nll = {std::numeric_limits<double>::quiet_NaN(), 42.0};
  trace.log_w2 = {std::numeric_limits<double>::quiet_NaN(), -1.5};
  std::string p = tmp.file("trace.csv");
  write_trace_csv(p, trace);
  std::string text = slurp(p);
  CHECK(text == "step,loss,cum_seconds,nll,log_w2\n"
                "1,0.5,0.125,,\n"
                "2,0.25,0.25,42,-1.5\n");
}

TEST_CASE("study files are long-format with one row per repetition") {
  TmpDir tmp;
  StudyReport rep;
  rep.id = "demo";
  rep.param_names = {"alpha", "method"};
  StudyCell cell;
  cell.params = {{"alpha", "0.5"}, {"method", "s3w"}};
  cell.values = {1.0, 2.0};
  rep.cells.push_back(cell);
  std::string p = tmp.file("report.csv");
  write_study_csv(p, rep);
  std::string text = slurp(p);
  CHECK(text == "study,alpha,method,rep,value\n"
                "demo,0.5,s3w,0,1\n"
                "demo,0.5,s3w,1,2\n");
}
