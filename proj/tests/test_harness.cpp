#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "patankar/harness/config.hpp"
#include "patankar/harness/output.hpp"
#include "patankar/harness/run.hpp"

using namespace patankar;
using namespace patankar::harness;
namespace fs = std::filesystem;

namespace {

auto without_wall_clock(const std::string& summary) -> std::string {
  std::istringstream in(summary);
  std::string out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("wall_clock", 0) != 0) { out += line + "\n"; }
  }
  return out;
}

auto slurp(const fs::path& p) -> std::string {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Toml, ParsesSubset) {
  const auto t = parse_toml(R"(
name = "x"   # trailing comment
[problem]
id = "burgers"
u1 = 1e4
[run]
N = [100, 200]
flag = true
)");
  EXPECT_EQ(t.at("name").text, "x");
  EXPECT_EQ(t.at("problem.u1").number, 1e4);
  ASSERT_EQ(t.at("run.N").items.size(), 2u);
  EXPECT_EQ(t.at("run.N").items[1].number, 200.0);
  EXPECT_TRUE(t.at("run.flag").boolean);
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_toml("[open\n"), ConfigError);
  EXPECT_THROW(parse_toml("novalue\n"), ConfigError);
}

TEST(Config, FromTomlAndValidation) {
  const auto c = config_from_toml(parse_toml(R"(
[problem]
id = "buckley"
u1 = 0.5
u2 = 1e-30
T = 0.25
[scheme]
flux = "upwind"
integrator = ["ee", "mpe"]
[run]
N = [50, 100]
cfl = [0.5, 1.2]
timestep = "fixed"
)"));
  EXPECT_EQ(c.problem, "buckley");
  EXPECT_EQ(*c.params.final_time, 0.25);
  EXPECT_EQ(c.timestep, TimestepMode::Fixed);
  EXPECT_EQ(expand(c).size(), 2u * 2u * 2u);
  EXPECT_THROW(config_from_toml(parse_toml("[run]\nbogus = 1\n")), ConfigError);
  EXPECT_THROW(config_from_toml(parse_toml("[run]\ntimestep = \"sometimes\"\n")), ConfigError);
  RunConfig bad;
  bad.cells = {200, 100};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.cells = {100};
  bad.cfl = {-1.0};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(load_config(std::string(PATANKAR_PRESET_DIR) + "/../tests/data/bad.toml"), ConfigError);
}

TEST(Config, EveryPresetLoads) {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(PATANKAR_PRESET_DIR)) {
    if (e.path().extension() != ".toml") { continue; }
    const auto c = load_config(e.path().string());
    EXPECT_NO_THROW(c.validate()) << e.path();
    EXPECT_FALSE(expand(c).empty());
    ++count;
  }
  EXPECT_GE(count, 8u);
}

TEST(Config, HashTracksSettings) {
  RunConfig c;
  const RunCase a{c, "upwind", "mpe", 100, 1.0};
  RunCase b = a;
  EXPECT_EQ(a.config_hash(), b.config_hash());
  b.cfl = 1.0 + 1e-15;
  EXPECT_NE(a.config_hash(), b.config_hash());
  EXPECT_EQ(a.run_id(), "burgers_upwind_mpe_N100_cfl1");
}

TEST(Run, StepCountAndSeriesShape) {
  RunConfig c;
  c.params.u1 = 2.0;
  c.params.u2 = 1e-13;
  const auto r = run(RunCase{c, "upwind", "mpe", 100, 1.0});
  // dt = dx / 2 = 0.01, T = 0.4
  EXPECT_NEAR(static_cast<double>(r.steps), 40.0, 2.0);
  EXPECT_EQ(r.series.size(), r.steps + 1);
  EXPECT_NEAR(r.series.back().time, 0.4, 1e-15);
  EXPECT_EQ(r.status, "ok");
  EXPECT_LE(r.cons_defect_max, 1e-12 * 102.0);
  EXPECT_LE(r.tvd_violation_max, 1e-12);
  EXPECT_GT(r.min_state, 0.0);
  EXPECT_TRUE(r.shock_error.has_value());
  EXPECT_FALSE(r.ttvrk_max.has_value());
  EXPECT_FALSE(r.weakform_discrete.has_value());
  EXPECT_EQ(r.clamped, 0u);
}

TEST(Run, StagesAndFieldsWhenRequested) {
  RunConfig c;
  c.keep_stages = true;
  c.keep_fields = true;
  c.dump_fields = true;
  c.dump_every = 10;
  const auto r = run(RunCase{c, "upwind", "mpdec2", 50, 1.0});
  ASSERT_TRUE(r.ttvrk_max.has_value());
  EXPECT_GE(*r.ttvrk_max, r.ttv_max);
  ASSERT_TRUE(r.weakform_discrete.has_value());
  EXPECT_LE(*r.weakform_discrete, 1e-9);
  EXPECT_FALSE(r.fields.empty());
  EXPECT_EQ(r.field_times.size(), r.fields.size());
  EXPECT_EQ(r.field_times.back(), r.final_time);
}

TEST(Run, ExplicitBlowUpIsReportedNotThrown) {
  RunConfig c;
  c.timestep = TimestepMode::Fixed;
  const auto r = run(RunCase{c, "upwind", "ee", 100, 10.0});
  EXPECT_GT(r.ttv_max, 20.0);
}

TEST(Run, BadIdsAreConfigErrors) {
  RunConfig c;
  EXPECT_THROW(run(RunCase{c, "roe", "mpe", 50, 1.0}), ConfigError);
  EXPECT_THROW(run(RunCase{c, "upwind", "rk4", 50, 1.0}), ConfigError);
  c.problem = "sw_dam_break";
  EXPECT_THROW(run(RunCase{c, "upwind", "mpe", 50, 1.0}), ConfigError);
}

TEST(Output, DeterministicFiles) {
  RunConfig c;
  c.dump_fields = true;
  c.dump_every = 5;
  const RunCase rc{c, "weno3", "mpssprk3", 40, 0.9};
  const auto dir = fs::temp_directory_path() / "patankar_test_output";
  fs::remove_all(dir);
  const auto a = emit_outputs(run(rc), dir / "a");
  const auto b = emit_outputs(run(rc), dir / "b");
  EXPECT_EQ(slurp(a / "series.csv"), slurp(b / "series.csv"));
  EXPECT_EQ(slurp(a / "field.csv"), slurp(b / "field.csv"));
  const auto sa = slurp(a / "summary.txt");
  EXPECT_EQ(without_wall_clock(sa), without_wall_clock(slurp(b / "summary.txt")));
  for (const char* key : {"run_id", "config_hash", "shock_location", "shock_error", "tvd_violation_max",
                          "ttvrk_max", "weakform_discrete", "weakform_continuous"}) {
    EXPECT_NE(sa.find(std::string(key) + " = "), std::string::npos) << key;
  }
  const auto series = slurp(a / "series.csv");
  EXPECT_EQ(series.substr(0, series.find('\n')), kSeriesHeader);
  const auto rec = run(rc);
  EXPECT_EQ(static_cast<std::size_t>(std::count(series.begin(), series.end(), '\n')), rec.steps + 2);
  fs::remove_all(dir);
}

TEST(Convergence, SlopeOfSyntheticData) {
  const std::vector<double> n{100, 200, 400, 800};
  std::vector<double> e;
  for (double v : n) { e.push_back(3.0 / v); }
  EXPECT_NEAR(*loglog_slope(n, e), -1.0, 1e-14);
  EXPECT_FALSE(loglog_slope({100}, {1.0}).has_value());
}

TEST(Convergence, StudyCollectsEveryMesh) {
  RunConfig c;
  c.cells = {50, 100, 200};
  c.cfl = {1.0};
  c.params.final_time = 0.3;
  std::vector<RunRecord> records;
  const auto tables = convergence_study(c, &records);
  ASSERT_EQ(tables.size(), 1u);
  EXPECT_EQ(tables[0].rows.size(), 3u);
  EXPECT_EQ(records.size(), 3u);
  ASSERT_TRUE(tables[0].slope.has_value());
  EXPECT_LT(*tables[0].slope, 0.0);
}
