#include "qsync/error.hpp"
#include "qsync/experiment.hpp"
#include "qsync/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace qsync {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qsync_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.scenario = Scenario::generic;
  c.n = 6;
  c.noise_pct = {0.0, 1.0};
  c.observed_pct = {100.0};
  c.seeds = {0, 1};
  c.quad.irls_iters = 2;
  c.quad.alt_iters = 3;
  c.record_time = false;
  return c;
}

TEST(Config, ParsesKeysListsAndRanges) {
  std::stringstream ss(
      "# comment\n"
      "scenario = subsample-sweep\n"
      "n = 13\n"
      "noise_pct = 0, 0.5,1\n"
      "seeds = 2-5\n"
      "rho = 0.02   # trailing\n"
      "sweep_m = 0, 30, 60\n"
      "clusters = 10, 15, 15\n");
  const ExperimentConfig c = read_config(ss);
  EXPECT_EQ(c.scenario, Scenario::subsample_sweep);
  EXPECT_EQ(c.n, 13);
  EXPECT_EQ(c.noise_pct, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{2, 3, 4, 5}));
  EXPECT_EQ(c.quad.rho, 0.02);
  EXPECT_EQ(c.sweep_m, (std::vector<int>{0, 30, 60}));
}

TEST(Config, ErrorsCarryLineNumbers) {
  for (const char* text : {"n = 6\nbogus = 1\n", "n = 6\nrho = abc\n", "n = 6\njust words\n"}) {
    std::stringstream ss(text);
    try {
      read_config(ss);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::parse);
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
  }
  ExperimentConfig c;
  EXPECT_THROW(apply_setting(c, "unknown", "1"), Error);
}

TEST(Config, WriteReadRoundTrip) {
  ExperimentConfig c = small_config();
  c.scene.distance = 10;
  c.scene.extent = 18;
  c.cluster_sizes = {6, 6};
  c.cluster_overlap = 2;
  std::stringstream ss;
  write_config(ss, c);
  std::stringstream again;
  write_config(again, read_config(ss));
  EXPECT_EQ(ss.str(), again.str());
}

TEST(Config, ValidationNamesField) {
  ExperimentConfig c = small_config();
  c.n = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.observed_pct = {0.0};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Results, CsvRoundTrip) {
  std::vector<ResultRow> rows(2);
  rows[0] = {"collinear", 10, 0.5, 60, 0.123456789, 0.1, 1.5, 1.25, 2.0, 7, 0, 0.0};
  rows[1] = {"subsample-sweep", 13, 1, 100, 0.2, 0.2, 3, 3, 4, 1, 30, 0.5};
  std::stringstream ss;
  write_results_csv(ss, rows);
  const std::vector<ResultRow> back = read_results_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].scenario, "collinear");
  EXPECT_DOUBLE_EQ(back[0].mean_et, 0.123456789);
  EXPECT_EQ(back[1].subsample_m, 30);
  EXPECT_EQ(back[1].seed, 1u);
}

TEST(Results, TenColumnFilesAndErrors) {
  std::stringstream ok("scenario,n,noise,observed,mean_et,med_et,mean_er,med_er,time_s,seed\ngeneric,5,0,100,0,0,0,0,1,3\n");
  const auto rows = read_results_csv(ok);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].subsample_m, 0);
  std::stringstream bad("scenario,n,noise,observed,mean_et,med_et,mean_er,med_er,time_s,seed\ngeneric,5,0,100,0,0,0,0,1,3\ngeneric,5,x,100,0,0,0,0,1,3\n");
  try {
    read_results_csv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("results line 3"), std::string::npos) << e.what();
  }
}

TEST(Experiment, SynthesizeIsDeterministicAndNoiseFree) {
  const ExperimentConfig c = small_config();
  const SynthData a = synthesize(c, 0.0, 100.0, 4), b = synthesize(c, 0.0, 100.0, 4);
  EXPECT_EQ(a.gt.stacked(), b.gt.stacked());
  ASSERT_EQ(a.quad.canonical_count(), 15u);
  const QuadBlock exact = quadrifocal_from_cameras(a.gt.cameras[0], a.gt.cameras[1], a.gt.cameras[2], a.gt.cameras[3]);
  const QuadBlock got = a.quad.get({0, 1, 2, 3});
  const double s = block_norm(exact);
  for (std::size_t k = 0; k < 81; ++k) EXPECT_NEAR(got[k], exact[k] / s, 1e-12);
  EXPECT_EQ(synthesize(c, 0.0, 60.0, 4).quad.canonical_count(), 9u);
}

TEST(Experiment, RunsAreByteStableWithoutTimes) {
  const ExperimentConfig c = small_config();
  const auto a = run_experiment(c), b = run_experiment(c);
  ASSERT_EQ(a.size(), 4u);
  std::stringstream sa, sb;
  std::vector<ResultRow> ra, rb;
  for (const auto& r : a) ra.push_back(r.row);
  for (const auto& r : b) rb.push_back(r.row);
  write_results_csv(sa, ra);
  write_results_csv(sb, rb);
  EXPECT_EQ(sa.str(), sb.str());
  for (const auto& r : a) EXPECT_EQ(r.row.time_s, 0.0);
  // noiseless rows recover the cameras
  EXPECT_LT(a[0].row.mean_et, 1e-6);
  EXPECT_EQ(a[0].tag, run_tag(0.0, 100.0, 0));
}

TEST(Experiment, ParallelJobsMatchSerial) {
  ExperimentConfig c = small_config();
  const auto serial = run_experiment(c);
  c.jobs = 3;
  const auto parallel = run_experiment(c);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].tag, parallel[k].tag);
    EXPECT_EQ(serial[k].cameras.stacked(), parallel[k].cameras.stacked());
  }
}

TEST(Experiment, OutputFiles) {
  const fs::path dir = scratch("outputs");
  ExperimentConfig c = small_config();
  c.noise_pct = {0.0};
  c.seeds = {0};
  write_run_outputs(dir.string(), run_experiment(c));
  EXPECT_TRUE(fs::exists(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / ("diag_" + run_tag(0, 100, 0) + ".csv")));
  EXPECT_TRUE(fs::exists(dir / ("cameras_" + run_tag(0, 100, 0) + ".txt")));
  const auto tags = write_synth_files(c, (dir / "synth").string());
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "synth" / tags[0] / "quad.blocks"));
  EXPECT_EQ(load_results_csv((dir / "results.csv").string()).size(), 1u);
  fs::remove_all(dir);
}

TEST(Report, SummaryAveragesSeeds) {
  std::vector<ResultRow> rows(3);
  rows[0] = {"generic", 6, 1, 100, 1.0, 1.0, 2.0, 2.0, 1.0, 0, 0, 0};
  rows[1] = {"generic", 6, 1, 100, 3.0, 3.0, 4.0, 4.0, 3.0, 1, 0, 0};
  rows[2] = {"generic", 6, 0, 100, 0.0, 0.0, 0.0, 0.0, 1.0, 0, 0, 0};
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].mean.noise, 0.0);
  EXPECT_EQ(s[1].seeds, 2);
  EXPECT_DOUBLE_EQ(s[1].mean.mean_et, 2.0);
  EXPECT_DOUBLE_EQ(s[1].mean.mean_er, 3.0);
  std::stringstream t;
  write_summary_table(t, s);
  int lines = 0;
  for (std::string l; std::getline(t, l);) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(Report, SvgIsDeterministic) {
  const std::vector<Series> s{{"a", {0, 1, 2}, {0.5, 0.25, 1.0}}, {"b", {0, 2}, {1, 2}}};
  const ChartSpec spec{"title", "x", "y", false};
  const std::string a = svg_line_chart(spec, s), b = svg_line_chart(spec, s);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("<polyline"), std::string::npos);
}

TEST(Report, SinglePointAndEmptyCharts) {
  const ChartSpec spec{"one", "x", "y", true};
  const std::string one = svg_line_chart(spec, {{"only", {1}, {0.1}}});
  EXPECT_NE(one.find("<circle"), std::string::npos);
  EXPECT_EQ(one.find("nan"), std::string::npos);
  const std::string none = svg_line_chart(spec, {});
  EXPECT_NE(none.find("</svg>"), std::string::npos);
  EXPECT_EQ(none.find("<polyline"), std::string::npos);
}

TEST(Report, WritesTableAndCharts) {
  const fs::path dir = scratch("report");
  std::vector<ResultRow> rows(2);
  rows[0] = {"subsample-sweep", 13, 1, 100, 0.1, 0.1, 1, 1, 5, 0, 0, 4.0};
  rows[1] = {"subsample-sweep", 13, 1, 100, 0.2, 0.2, 2, 2, 1, 0, 30, 0.5};
  const auto names = write_report(dir.string(), rows);
  EXPECT_EQ(names.size(), 6u);
  for (const auto& n : names) EXPECT_TRUE(fs::exists(dir / n)) << n;
  EXPECT_NE(slurp(dir / "table.txt").find("full"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace qsync
