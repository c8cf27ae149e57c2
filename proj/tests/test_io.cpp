#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "crboot/io.hpp"

using namespace crboot;

TEST_CASE("doubles round-trip through 17 significant digits", "[io]") {
  std::mt19937_64 eng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(u(eng), static_cast<int>(i % 200) - 100);
    REQUIRE(std::stod(io::format_double(x)) == x);
  }
  REQUIRE(io::format_double(0.5) == "0.5");
  REQUIRE(io::format_double(2.0 / 3) == "0.66666666666666663");
}

TEST_CASE("curve CSV round trip", "[io]") {
  const StepCurve c({0.1, 0.2, 1.0 / 3}, {1.0 / 7, 2.0 / 7, std::nextafter(0.5, 1.0)});
  const std::string text = io::curve_csv(c);
  REQUIRE(text.rfind("time,value\n", 0) == 0);
  const StepCurve back = io::parse_curve_csv(text);
  REQUIRE(back.grid() == c.grid());
  REQUIRE(back.values() == c.values());
  REQUIRE_THROWS(io::parse_curve_csv("t,v\n1,2\n"));
  REQUIRE_THROWS(io::parse_curve_csv("time,value\n1;2\n"));
}

TEST_CASE("curve JSON carries the grid and the initial value", "[io]") {
  const auto j = io::curve_json(StepCurve({1.0, 2.0}, {0.9, 0.5}, 1.0));
  REQUIRE(j["times"].size() == 2);
  REQUIRE(j["values"][1].get<double>() == 0.5);
  REQUIRE(j["initial"].get<double>() == 1.0);
}

TEST_CASE("wide table CSV evaluates every curve on the grid", "[io]") {
  const StepCurve a({1.0, 3.0}, {0.1, 0.2});
  const StepCurve b({2.0}, {5.0}, 1.0);
  const std::string s = io::table_csv({1.0, 2.0, 3.0}, {"a", "b"}, {&a, &b});
  REQUIRE(s == "time,a,b\n1,0.10000000000000001,1\n2,0.10000000000000001,5\n3,0.20000000000000001,5\n");
}

TEST_CASE("band JSON and plot-data CSV", "[io]") {
  BandResult b;
  b.times = {1, 2};
  b.lower = {0.1, 0.2};
  b.upper = {0.3, 0.4};
  b.estimate = {0.2, 0.3};
  b.q = 2.5;
  b.spec.t1 = 0.5;
  b.spec.t2 = 2.5;
  b.seed = 42;
  b.n = 10;
  const auto j = io::band_json(b);
  for (const char* key : {"times", "lower", "upper", "pointEstimate", "q", "spec", "warnings"}) REQUIRE(j.contains(key));
  REQUIRE(j["spec"]["seed"].get<std::uint64_t>() == 42);
  REQUIRE(j["spec"]["band"] == "ep");
  REQUIRE(j["spec"]["multiplier"] == "poisson");
  REQUIRE(j["spec"]["interval"][1].get<double>() == 2.5);
  REQUIRE(io::band_csv(b) == "time,lower,estimate,upper\n1,0.10000000000000001,0.20000000000000001,0.29999999999999999\n"
                             "2,0.20000000000000001,0.29999999999999999,0.40000000000000002\n");
}

TEST_CASE("replicate path dump", "[io]") {
  std::vector<BootstrapPath> paths;
  paths.push_back({StepCurve({1.0, 2.0}, {0.5, -0.25}), PathKind::AalenJohansen, 1, 0});
  paths.push_back({StepCurve({1.0, 2.0}, {1.0, 2.0}), PathKind::AalenJohansen, 1, 1});
  REQUIRE(io::replicate_paths_csv(paths) == "replicate,time,value\n0,1,0.5\n0,2,-0.25\n1,1,1\n1,2,2\n");
}

TEST_CASE("coverage JSON and table row", "[io]") {
  CoverageReport r;
  r.scenario.seed = 5;
  r.covered = 9;
  r.valid = 10;
  r.coverage = 0.9;
  r.elapsed_seconds = 123.0;
  const auto j = io::coverage_json(r);
  REQUIRE(j["coverage"].get<double>() == 0.9);
  REQUIRE(j["scenario"]["seed"].get<std::uint64_t>() == 5);
  REQUIRE(j["scenario"]["interval"][0].get<double>() == 0.25);
  REQUIRE(!j.contains("elapsedSeconds"));
  const std::string row = io::coverage_table_csv({{1.0, 50, "poisson", 0.8908, 0.9291}, {0.0, 250, "weird", -1, 0.9381}});
  REQUIRE(row == "p,n,multiplier,old,new\n1,50,poisson,89.08,92.91\n0,250,weird,,93.81\n");
}

TEST_CASE("file helpers report failures", "[io]") {
  REQUIRE_THROWS_AS(io::read_file("/nonexistent/dir/file.csv"), std::runtime_error);
  REQUIRE_THROWS_AS(io::write_file("/nonexistent/dir/file.csv", "x"), std::runtime_error);
}
