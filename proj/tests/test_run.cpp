#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "espbench/run.hpp"
#include "test_support.hpp"

namespace espbench {
namespace {

run_config small_config(const std::filesystem::path& out, const std::string& run_id = "t1") {
  auto cfg = default_run_config();
  cfg.run_id = run_id;
  cfg.output_dir = out.string();
  cfg.clock = clock_mode::logical;
  cfg.input_rate = 500;
  cfg.duration_s = 2;
  cfg.gen.scale_factor = 1;
  cfg.gen.error_rate_mf01 = 0.02;
  cfg.q2_window_size = 100;
  cfg.sos.tolerance = 1e-12;
  return cfg;
}

std::map<std::string, std::string> tree_contents(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[std::filesystem::relative(e.path(), root).string()] = ss.str();
  }
  return out;
}

TEST(Config, RoundTripAndErrors) {
  auto cfg = default_run_config();
  apply_config_text(cfg, "# comment\nrun_id = abc\ninput_rate=250  # trailing\nqueries = 1, 3\nclock = logical\n"
                         "sos_perplexity = 12.5\ndowntime_fraction = 0.25\n");
  EXPECT_EQ(cfg.run_id, "abc");
  EXPECT_EQ(cfg.input_rate, 250);
  EXPECT_EQ(cfg.queries, (std::set<int>{1, 3}));
  EXPECT_EQ(cfg.clock, clock_mode::logical);
  EXPECT_DOUBLE_EQ(cfg.sos.perplexity, 12.5);
  auto back = parse_run_config(serialize_run_config(cfg));
  EXPECT_EQ(serialize_run_config(back), serialize_run_config(cfg));
  EXPECT_THROW(apply_config_text(cfg, "nonsense"), config_error);
  EXPECT_THROW(apply_config_text(cfg, "bogus = 1"), config_error);
  EXPECT_THROW(apply_config_text(cfg, "input_rate = fast"), config_error);
  EXPECT_THROW(apply_config_text(cfg, "clock = sundial"), config_error);
  cfg.run_id = "../x";
  EXPECT_THROW(cfg.validate(), config_error);
}

TEST(Config, EffectiveGenerator) {
  auto cfg = default_run_config();
  cfg.input_rate = 10;
  cfg.duration_s = 3;
  EXPECT_EQ(cfg.effective_gen().sensor_count, 30);
  EXPECT_EQ(cfg.effective_gen().event_rate, 10);
  cfg.gen.sensor_count = 7;
  EXPECT_EQ(cfg.effective_gen().sensor_count, 7);
}

TEST(Run, RequiresGeneratedData) {
  testing::temp_dir dir;
  auto cfg = small_config(dir.path());
  EXPECT_THROW(cmd_run(cfg), missing_input_error);
  EXPECT_THROW(cmd_validate(paths_for(cfg).root), missing_input_error);
  EXPECT_THROW(cmd_report(paths_for(cfg).root), missing_input_error);
}

TEST(Run, FullPipelinePassesAndRefusesToOverwrite) {
  testing::temp_dir dir;
  auto cfg = small_config(dir.path());
  std::ostringstream log;
  ASSERT_TRUE(cmd_all(cfg, false, log)) << log.str();
  auto paths = paths_for(cfg);
  for (const auto& p : {paths.config_snapshot(), paths.summary_json(), paths.summary_txt(), paths.final_lines(),
                        paths.anchors(1), paths.anchors(5), paths.db_snapshot() / "WORKPLACE.csv",
                        paths.topics() / (topic_name("esp", "t1", "q3-out") + ".log")}) {
    EXPECT_TRUE(std::filesystem::exists(p)) << p;
  }
  EXPECT_NE(log.str().find("overall: PASS"), std::string::npos);
  EXPECT_THROW(cmd_generate(cfg), run_exists_error);
  EXPECT_THROW(cmd_run(cfg), run_exists_error);
  EXPECT_THROW(cmd_validate(paths.root), run_exists_error);
  EXPECT_EQ(load_run_config(paths.root).input_rate, 500);

  // A tampered result entry must fail validation.
  auto catalog = topic_catalog::load(paths.topics());
  auto q3 = topic_name("esp", "t1", "q3-out");
  auto entries = catalog.get(q3).read_from(0);
  ASSERT_FALSE(entries.empty());
  topic_catalog tampered;
  for (const auto& name : catalog.names()) {
    auto& log_out = tampered.create_topic(name);
    for (auto e : catalog.get(name).read_from(0)) {
      if (name == q3 && e.offset == 0) e.payload[0] = e.payload[0] == '9' ? '8' : '9';
      log_out.restore(e.ingestion_ts, e.payload);
    }
  }
  tampered.persist(paths.topics());
  auto report = cmd_validate(paths.root, true);
  EXPECT_FALSE(report.queries.at(3).validation.pass);
  EXPECT_TRUE(report.queries.at(1).validation.pass);
  EXPECT_NE(cmd_report(paths.root).find("overall: FAIL"), std::string::npos);
}

TEST(Run, RepeatRunsAreByteIdentical) {
  testing::temp_dir a, b;
  std::ostringstream log;
  ASSERT_TRUE(cmd_all(small_config(a.path()), false, log));
  ASSERT_TRUE(cmd_all(small_config(b.path()), false, log));
  auto ta = tree_contents(a.path() / "t1");
  auto tb = tree_contents(b.path() / "t1");
  ta.erase("config.snapshot");  // records output_dir
  tb.erase("config.snapshot");
  ASSERT_EQ(ta.size(), tb.size());
  for (const auto& [path, content] : ta) EXPECT_TRUE(tb.at(path) == content) << path;
}

TEST(Run, ForceReplacesPreviousRun) {
  testing::temp_dir dir;
  auto cfg = small_config(dir.path());
  cfg.queries = {3};
  std::ostringstream log;
  ASSERT_TRUE(cmd_all(cfg, false, log));
  cfg.queries = {1, 5};
  ASSERT_TRUE(cmd_all(cfg, true, log));
  auto paths = paths_for(cfg);
  EXPECT_FALSE(std::filesystem::exists(paths.anchors(3)));
  EXPECT_TRUE(std::filesystem::exists(paths.anchors(5)));
}

}  // namespace
}  // namespace espbench
