#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "experiments.hpp"

using namespace sqzem;
using namespace sqzem::cli;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sqzem_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

std::string config_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == Errc::config) return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, UnknownKeysNameTheirPath) {
  json c = default_config();
  const auto msg = config_error([&] { apply_patch(c, parse_assignment("params.bogus=1")); });
  EXPECT_NE(msg.find("params.bogus"), std::string::npos);
  EXPECT_NE(config_error([&] { apply_patch(c, json{{"nope", 1}}); }).find("nope"), std::string::npos);
  EXPECT_NE(config_error([&] { apply_patch(c, json{{"grids", {{"xi_points", "many"}}}}); })
                .find("grids.xi_points"),
            std::string::npos);
  // A failed patch leaves the config untouched.
  EXPECT_EQ(c, default_config());
}

TEST(Config, DottedAssignments) {
  json c = default_config();
  apply_patch(c, parse_assignment("params.xi_max=1100"));
  EXPECT_EQ(c["params"]["xi_max"], 1100);
  apply_patch(c, parse_assignment("params.xi_max=null"));
  EXPECT_TRUE(c["params"]["xi_max"].is_null());
  apply_patch(c, parse_assignment("blockade.g1_values=[0.5,1]"));
  EXPECT_EQ(c["blockade"]["g1_values"].size(), 2u);
  apply_patch(c, parse_assignment("output=some/dir"));
  EXPECT_EQ(c["output"], "some/dir");
  EXPECT_FALSE(config_error([] { parse_assignment("novalue"); }).empty());
  EXPECT_FALSE(config_error([] { parse_assignment("a..b=1"); }).empty());
}

TEST(Config, PresetsAndDefaultsTable) {
  for (const char* name : {"fig2", "fig3a", "fig3b"}) {
    json c = default_config();
    EXPECT_NO_THROW(apply_patch(c, preset(name))) << name;
  }
  EXPECT_FALSE(config_error([] { preset("fig9"); }).empty());
  const std::string table = describe_defaults();
  // Every leaf of the defaults appears in the table.
  std::function<void(const json&, const std::string&)> walk = [&](const json& j,
                                                                   const std::string& path) {
    for (const auto& [k, v] : j.items()) {
      const std::string p = path.empty() ? k : path + "." + k;
      if (v.is_object()) {
        walk(v, p);
      } else {
        EXPECT_NE(table.find("  " + p + " = "), std::string::npos) << p;
      }
    }
  };
  walk(default_config(), "");
}

TEST(Config, TypedViews) {
  json c = default_config();
  EXPECT_EQ(truncation(c, "frames", 3).str(), "(12,12,8)");
  EXPECT_FALSE(config_error([&] { truncation(c, "frames", 2); }).empty());
  apply_patch(c, parse_assignment("truncation.blockade=[6.5,14]"));
  EXPECT_FALSE(config_error([&] { truncation(c, "blockade", 2); }).empty());
  apply_patch(c, parse_assignment("grids.xi_points=0"));
  EXPECT_FALSE(config_error([&] { positive_int(c, "grids", "xi_points"); }).empty());
}

TEST(Plumbing, NineSignificantDigits) {
  EXPECT_EQ(fmt(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(fmt(600.0), "600");
  EXPECT_EQ(fmt(1.3333333333e-3), "0.00133333333");
  EXPECT_EQ(fmt(std::nan("")), "nan");
}

TEST(Plumbing, ParallelForCoversEveryIndexOnce) {
  for (int threads : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_THROW(parallel_for(10, 4, [](std::size_t i) {
                 if (i == 7) throw Error(Errc::accuracy, "boom");
               }),
               Error);
}

TEST(Plumbing, TimeAveragedDeviation) {
  const std::vector<double> t = {0.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(time_averaged_deviation(t, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}), 0.0);
  EXPECT_NEAR(time_averaged_deviation(t, {1.1, 1.1, 1.1}, {1.0, 1.0, 1.0}), 0.1, 1e-15);
}

TEST(Design, SinglePointRow) {
  const auto dir = scratch_dir("design_single");
  json c = default_config();
  apply_patch(c, parse_assignment("params.xi_min=800"));
  apply_patch(c, parse_assignment("grids.xi_points=1"));
  Report report;
  run_design({c, dir, 1}, report);
  const auto lines = read_lines(dir / "design_xi.csv");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "xi,a,r0,M,N,G1,G2,Omega1,Omega2,rwa_ratio,valid");
  const auto f = split(lines[1]);
  ASSERT_EQ(f.size(), 11u);
  EXPECT_EQ(f[0], "800");
  EXPECT_EQ(f[1], "2.5");
  EXPECT_NEAR(std::stod(f[2]), 0.25 * std::log(9.0), 1e-8);
  EXPECT_NEAR(std::stod(f[5]), 0.001 * 4.0 / 3.0, 1e-11);
  EXPECT_NEAR(std::stod(f[7]), 600.0, 1e-6);
  EXPECT_EQ(f[10], "1");
  for (const auto& ch : report.checks) EXPECT_TRUE(ch.passed) << ch.name << ": " << ch.detail;
  EXPECT_EQ(read_lines(dir / "design_r0.csv").front(), "r0,G1");
}

TEST(Design, RowsBeyondCriticalAreMarked) {
  const auto dir = scratch_dir("design_beyond");
  json c = default_config();
  apply_patch(c, parse_assignment("params.xi_max=1100"));
  Report report;
  run_design({c, dir, 2}, report);
  const auto lines = read_lines(dir / "design_xi.csv");
  int marked = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (std::stod(f[0]) >= 1000.0) {
      EXPECT_EQ(f[1], "nan");
      ++marked;
    } else {
      EXPECT_NE(f[1], "nan");
    }
  }
  EXPECT_EQ(marked, 10);
  EXPECT_EQ(report.summaries["design"]["error_rows"].size(), 10u);
  for (const auto& ch : report.checks) EXPECT_TRUE(ch.passed) << ch.name << ": " << ch.detail;
}

TEST(Design, OutputIndependentOfThreads) {
  const auto a = scratch_dir("design_t1");
  const auto b = scratch_dir("design_t4");
  const json c = default_config();
  Report ra, rb;
  run_design({c, a, 1}, ra);
  run_design({c, b, 4}, rb);
  EXPECT_EQ(read_lines(a / "design_xi.csv"), read_lines(b / "design_xi.csv"));
}

TEST(Design, EmptyGridIsAConfigError) {
  json c = default_config();
  apply_patch(c, parse_assignment("grids.xi_points=0"));
  Report report;
  EXPECT_FALSE(config_error([&] { run_design({c, scratch_dir("design_empty"), 1}, report); }).empty());
}

TEST(Verify, DissipatorIdentityWithoutMechanicalCoupling) {
  EXPECT_LT(dissipator_identity_defect(0.3, 0.0, TruncationSpec({15, 15, 2}), 5), 1e-10);
}

TEST(Verify, DissipatorIdentityFailsAtTheEdge) {
  // Projecting onto states that touch the cutoff exposes the truncated commutator.
  EXPECT_GT(dissipator_identity_defect(0.3, 0.1, TruncationSpec({6, 6, 2}), 5), 1e-6);
}

TEST(Verify, UnsqueezedFramesCoincide) {
  const TruncationSpec spec({3, 3, 3});
  EXPECT_LT(dissipator_identity_defect(0.0, 0.1, spec, 2), 1e-15);
  const auto dyn = frames_dynamics(0.0, 1.0, 0.1, 2.0, 0.01, spec, 5.0, 21, {}, 2);
  EXPECT_LT(dyn.deviation, 1e-12);
  const auto rwa = rwa_dynamics(0.0, 0.2, 5.0, 1.0, 0.01, spec, 5.0, 21, {}, 2);
  EXPECT_LT(rwa.dynamics.deviation, 1e-12);
}

TEST(G2, TrajectoryCsvLeavesUndefinedPointsEmpty) {
  const auto dir = scratch_dir("g2_csv");
  json c = default_config();
  apply_patch(c, parse_assignment("truncation.blockade=[3,4]"));
  apply_patch(c, parse_assignment("truncation.blockade_check=[3,5]"));
  apply_patch(c, parse_assignment("grids.g2_points=11"));
  apply_patch(c, parse_assignment("grids.g2_t_end_kappa=2"));
  Report report;
  run_g2({c, dir, 1}, report);
  const auto lines = read_lines(dir / "g2_trajectory.csv");
  ASSERT_EQ(lines.size(), 12u);
  EXPECT_EQ(lines[0], "t,g2,n_cav,n_mech,trace_err");
  EXPECT_EQ(split(lines[1])[1], "");
  EXPECT_NE(split(lines.back())[1], "");
  EXPECT_EQ(report.models["g2"]["frame"], "reduced-blockade");
  EXPECT_EQ(report.models["g2"]["terms"].size(), 2u);
}
