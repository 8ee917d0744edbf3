#include <gtest/gtest.h>

#include "espbench/datagen.hpp"
#include "espbench/engine.hpp"
#include "espbench/validator.hpp"
#include "test_support.hpp"

namespace espbench {
namespace {

using testing::sensor;

class ValidatorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    params_.topics = engine_topics::named("v", "r");
    params_.mode = clock_mode::logical;
    const auto& t = params_.topics;
    for (const auto& name : {t.sensor1, t.sensor2, t.times}) catalog_.create_topic(name);
    for (const auto& name : t.results) catalog_.create_topic(name);
  }

  validation::validator_params vparams() const {
    validation::validator_params p;
    p.topics = params_.topics;
    p.sos = params_.sos;
    p.q2_window_size = params_.q2_window_size;
    p.mode = params_.mode;
    return p;
  }

  void feed(const std::string& topic, const std::vector<sensor_record>& records, std::int64_t start = 0,
            std::int64_t step = 1) {
    std::vector<std::string> payloads;
    for (const auto& r : records) payloads.push_back(serialize_sensor(r));
    testing::append_all(catalog_.get(topic), payloads, start, step);
  }

  /// Runs the engine on a copy of the snapshot and validates its output.
  validation::run_report engine_and_validate(const std::set<int>& queries) {
    final_ = std::make_unique<business_db>(snapshot_);
    auto summary = run_queries(queries, catalog_, *final_, params_, testing::finished());
    validation::validation_inputs in{&catalog_, &snapshot_, final_.get(), {}};
    for (const auto& [q, s] : summary.queries) in.anchors[q] = s.anchors;
    return validation::validate(queries, in, vparams());
  }

  engine_params params_;
  topic_catalog catalog_;
  business_db snapshot_ = testing::small_db();
  std::unique_ptr<business_db> final_;
};

TEST_F(ValidatorTest, Q3ExpectedRows) {
  std::vector<sensor_record> records;
  for (int i = 0; i < 10; ++i) records.push_back(sensor(i, i == 2 || i == 7 ? 14964 : 14963));
  feed(params_.topics.sensor1, records);
  auto ex = validation::recompute_expected(3, catalog_, snapshot_, vparams());
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].payload, serialize_sensor(records[2]));
  EXPECT_EQ(ex[0].anchor.offset, 2u);
  EXPECT_EQ(ex[1].anchor.offset, 7u);
}

TEST_F(ValidatorTest, EmptyInputsGiveEmptyExpectations) {
  for (int q = 1; q <= 5; ++q) EXPECT_TRUE(validation::recompute_expected(q, catalog_, snapshot_, vparams()).empty());
  EXPECT_THROW(validation::recompute_expected(6, catalog_, snapshot_, vparams()), config_error);
}

TEST(Compare, Verdicts) {
  std::vector<std::string> rows{"a", "b", "c"};
  auto ok = validation::compare(rows, rows, 3);
  EXPECT_TRUE(ok.pass);
  EXPECT_EQ(ok.matched_count, 3u);
  auto missing = validation::compare(rows, {"a", "b"}, 3);
  EXPECT_FALSE(missing.pass);
  ASSERT_EQ(missing.mismatches.size(), 1u);
  EXPECT_EQ(missing.mismatches[0].index, 2u);
  EXPECT_EQ(missing.mismatches[0].expected, "c");
  EXPECT_FALSE(missing.mismatches[0].actual);
  EXPECT_FALSE(validation::compare(rows, {"a", "c", "b"}, 3).pass);
  EXPECT_FALSE(validation::compare(rows, {"a", "b", "c", "d"}, 3).pass);
  EXPECT_TRUE(validation::compare({}, {}, 1).pass);
}

TEST(Compare, Q2ProbabilityIsComparedAtTwoDecimals) {
  EXPECT_TRUE(validation::compare({"1,2,0.4951"}, {"1,2,0.50"}, 2).pass);
  EXPECT_FALSE(validation::compare({"1,2,0.4949"}, {"1,2,0.50"}, 2).pass);
  EXPECT_FALSE(validation::compare({"1,3,0.50"}, {"1,2,0.50"}, 2).pass);
  EXPECT_FALSE(validation::compare({"1,2,0.4951"}, {"1,2,0.50"}, 3).pass);
}

TEST(Compare, ReportsAtMostTenMismatches) {
  std::vector<std::string> a(50, "x"), b(50, "y");
  auto v = validation::compare(a, b, 1);
  EXPECT_EQ(v.mismatches.size(), 10u);
  EXPECT_EQ(v.matched_count, 0u);
}

TEST(DenseSos, DecimalHelpers) {
  EXPECT_EQ(validation::detail::two_decimals(0.4951), "0.50");
  EXPECT_EQ(validation::detail::two_decimals(0.125), "0.13");
  EXPECT_EQ(validation::detail::two_decimals(1.0), "1.00");
  EXPECT_EQ(validation::detail::decimal(2, 3, 3), "0.667");
}

TEST_F(ValidatorTest, LatencyFromAnchors) {
  feed(params_.topics.sensor1, {sensor(0, 20000)}, 1000);
  manual_clock c(1040);
  catalog_.get(params_.topics.results[2]).append(serialize_sensor(sensor(0, 20000)), c);
  std::vector<output_anchor> anchors{{0, {params_.topics.sensor1, 0}, 1040}};
  auto samples = validation::compute_latencies(3, catalog_, anchors, snapshot_, params_.topics);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].latency_ms, 40);
  EXPECT_EQ(validation::seconds(samples[0].latency_ms), "0.040");
}

TEST_F(ValidatorTest, DanglingAnchors) {
  feed(params_.topics.sensor1, {sensor(0, 20000)}, 1000);
  manual_clock c(1040);
  catalog_.get(params_.topics.results[2]).append("x", c);
  std::vector<output_anchor> beyond{{0, {params_.topics.sensor1, 5}, 0}};
  EXPECT_THROW(validation::compute_latencies(3, catalog_, beyond, snapshot_, params_.topics), dangling_anchor_error);
  std::vector<output_anchor> wrong_topic{{0, {"nope", 0}, 0}};
  EXPECT_THROW(validation::compute_latencies(3, catalog_, wrong_topic, snapshot_, params_.topics), dangling_anchor_error);
  EXPECT_THROW(validation::compute_latencies(3, catalog_, {}, snapshot_, params_.topics), dangling_anchor_error);
}

TEST_F(ValidatorTest, EngineOutputValidatesForAllQueries) {
  params_.q2_window_size = 40;
  params_.sos.perplexity = 5;
  params_.sos.tolerance = 1e-12;
  rng r(21);
  std::vector<sensor_record> s1, s2;
  for (int i = 0; i < 2000; ++i) {
    auto wp = static_cast<std::uint32_t>(r.uniform(1, 3));
    s1.push_back(sensor(i * 7, static_cast<std::uint32_t>(r.uniform(8000, 15100)),
                        static_cast<std::uint32_t>(r.uniform(8000, 14963)),
                        static_cast<std::uint32_t>(r.uniform(7500, 12000)), wp));
    s2.push_back(sensor(i * 7 + 3, 9000, 9000, static_cast<std::uint32_t>(r.uniform(7500, 12000)), wp));
  }
  feed(params_.topics.sensor1, s1, 0, 1);
  feed(params_.topics.sensor2, s2, 0, 1);
  std::vector<std::string> times;
  for (std::uint32_t pol : {1u, 2u}) {
    times.push_back(serialize_production_time({7, 1, pol, false}));
    times.push_back(serialize_production_time({7, 1, pol, true}));
  }
  testing::append_all(catalog_.get(params_.topics.times), times, 100, 5);

  auto report = engine_and_validate({1, 2, 3, 4, 5});
  for (const auto& [q, qr] : report.queries) {
    EXPECT_TRUE(qr.validation.pass) << "q" << q;
    EXPECT_GT(qr.validation.expected_count, 0u) << "q" << q;
    ASSERT_TRUE(qr.latency) << "q" << q;
    EXPECT_EQ(qr.latency->count, qr.samples.size());
  }
  EXPECT_EQ(report.queries.at(5).validation.expected_count, 2u);
  EXPECT_TRUE(report.all_pass());

  testing::temp_dir dir;
  auto files = validation::emit_reports(report, dir.path());
  EXPECT_EQ(files.size(), 7u);
  auto json = nlohmann::json::parse(csv::read_text((dir.path() / "summary.json").string()));
  EXPECT_EQ(json["verdict"], "PASS");
  EXPECT_EQ(json["queries"]["q3"]["matched"], report.queries.at(3).validation.matched_count);
  auto lat = csv::read_lines((dir.path() / "latencies-q3.csv").string());
  EXPECT_EQ(lat.front(), "anchor_offset,input_ts_ms,result_ts_ms,latency_ms");
  EXPECT_EQ(lat.size(), report.queries.at(3).samples.size() + 1);
  EXPECT_NE(csv::read_text((dir.path() / "summary.txt").string()).find("overall: PASS"), std::string::npos);
}

TEST_F(ValidatorTest, NoOutputsReportNotApplicable) {
  feed(params_.topics.sensor1, {sensor(0, 1)});
  auto report = engine_and_validate({3});
  EXPECT_TRUE(report.queries.at(3).validation.pass);
  EXPECT_FALSE(report.queries.at(3).latency);
  EXPECT_EQ(validation::summary_json(report)["queries"]["q3"]["latency"], "n/a");
  EXPECT_NE(validation::summary_table(report).find("n/a"), std::string::npos);
}

TEST_F(ValidatorTest, TamperedOutputFails) {
  std::vector<sensor_record> records;
  for (int i = 0; i < 20; ++i) records.push_back(sensor(i, i % 3 ? 1 : 20000));
  feed(params_.topics.sensor1, records);
  final_ = std::make_unique<business_db>(snapshot_);
  run_queries({3}, catalog_, *final_, params_, testing::finished());
  auto expected = validation::payloads(validation::recompute_expected(3, catalog_, snapshot_, vparams()));
  std::vector<std::string> actual;
  for (const auto& e : catalog_.get(params_.topics.results[2]).read_from(0)) actual.push_back(e.payload);
  ASSERT_TRUE(validation::compare(expected, actual, 3).pass);
  auto dropped = actual;
  dropped.pop_back();
  EXPECT_FALSE(validation::compare(expected, dropped, 3).pass);
  auto swapped = actual;
  std::swap(swapped[0], swapped[1]);
  EXPECT_FALSE(validation::compare(expected, swapped, 3).pass);
  auto perturbed = actual;
  perturbed[3][0] = perturbed[3][0] == '9' ? '8' : '9';
  EXPECT_FALSE(validation::compare(expected, perturbed, 3).pass);
}

TEST_F(ValidatorTest, Q5RealClockAcceptsBoundedTimestamps) {
  testing::append_all(catalog_.get(params_.topics.times), {serialize_production_time({7, 1, 1, false})}, 500);
  auto expected = validation::recompute_expected(5, catalog_, snapshot_, vparams());
  ASSERT_EQ(expected.size(), 1u);
  EXPECT_EQ(expected[0].payload, "7,1,1,1,500,");
  business_db final_db(snapshot_);
  manual_clock c(530);
  final_db.set_production_time({7, 1, 1}, false, 520, c);
  EXPECT_EQ(validation::actual_q5(snapshot_, final_db, expected, clock_mode::real), std::vector<std::string>{"7,1,1,1,500,"});
  EXPECT_EQ(validation::actual_q5(snapshot_, final_db, expected, clock_mode::logical),
            std::vector<std::string>{"7,1,1,1,520,"});
  business_db early(snapshot_);
  manual_clock e(490);
  early.set_production_time({7, 1, 1}, false, 490, e);
  EXPECT_EQ(validation::actual_q5(snapshot_, early, expected, clock_mode::real), std::vector<std::string>{"7,1,1,1,490,"});
}

}  // namespace
}  // namespace espbench
