#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <thread>

#include "espbench/broker.hpp"
#include "test_support.hpp"

namespace espbench {
namespace {

TEST(TopicCatalog, CreateListsExactlyCreatedNames) {
  topic_catalog c;
  EXPECT_EQ(c.create_topic("esp-r1-sensor1").size(), 0u);
  c.create_topic("esp-r1-times");
  EXPECT_EQ(c.names(), (std::vector<std::string>{"esp-r1-sensor1", "esp-r1-times"}));
}

TEST(TopicCatalog, DuplicateTopic) {
  topic_catalog c;
  c.create_topic("t");
  EXPECT_THROW(c.create_topic("t"), duplicate_topic_error);
}

TEST(TopicCatalog, MissingTopic) {
  topic_catalog c;
  EXPECT_THROW(c.get("nope"), missing_topic_error);
}

TEST(TopicName, FollowsConvention) {
  EXPECT_EQ(topic_name("esp", "r1", "sensor1"), "esp-r1-sensor1");
  EXPECT_EQ(topic_name("esp", "r1", "q3-out"), "esp-r1-q3-out");
}

TEST(TopicLog, AppendReturnsContiguousOffsets) {
  topic_log log("t");
  manual_clock c(100);
  EXPECT_EQ(log.append("a", c), 0u);
  c.advance_to(105);
  EXPECT_EQ(log.append("b", c), 1u);
  auto all = log.read_from(0);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].ingestion_ts, 100);
  EXPECT_EQ(all[1].ingestion_ts, 105);
  EXPECT_EQ(all[1].payload, "b");
}

TEST(TopicLog, TenThousandAppendsScanContiguous) {
  topic_log log("t");
  manual_clock c(0);
  for (int i = 0; i < 10000; ++i) {
    c.advance_by(i % 3 == 0 ? 1 : 0);
    log.append(std::to_string(i), c);
  }
  auto all = log.read_from(0);
  ASSERT_EQ(all.size(), 10000u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    ASSERT_EQ(all[i].offset, i);
    ASSERT_EQ(all[i].payload, std::to_string(i));
    if (i) {
      ASSERT_LE(all[i - 1].ingestion_ts, all[i].ingestion_ts);
    }
  }
}

TEST(TopicLog, TimestampsNeverDecreaseEvenIfClockDoes) {
  topic_log log("t");
  manual_clock late(50), early(10);
  log.append("a", late);
  log.append("b", early);
  EXPECT_EQ(log.at(1).ingestion_ts, 50);
}

TEST(TopicLog, ReadFromBounds) {
  topic_log log("t");
  testing::append_all(log, {"a", "b", "c"});
  EXPECT_TRUE(log.read_from(3).empty());
  EXPECT_EQ(log.read_from(1, 1).size(), 1u);
  EXPECT_EQ(log.read_from(1, 1)[0].payload, "b");
  EXPECT_THROW(log.read_from(4), offset_out_of_range_error);
}

TEST(TopicLog, ConcurrentAppendersKeepPerProducerOrder) {
  topic_log log("t");
  system_clock c;
  constexpr int producers = 4, per_producer = 2000;
  {
    std::vector<std::jthread> threads;
    for (int p = 0; p < producers; ++p) {
      threads.emplace_back([&, p] {
        for (int i = 0; i < per_producer; ++i) log.append(std::to_string(p) + ":" + std::to_string(i), c);
      });
    }
  }
  // Single reader observes a total order consistent with each producer's program order.
  auto all = log.read_from(0);
  ASSERT_EQ(all.size(), static_cast<std::size_t>(producers * per_producer));
  std::map<int, int> next;
  for (std::size_t i = 0; i < all.size(); ++i) {
    ASSERT_EQ(all[i].offset, i);
    if (i) {
      ASSERT_LE(all[i - 1].ingestion_ts, all[i].ingestion_ts);
    }
    auto colon = all[i].payload.find(':');
    int p = std::stoi(all[i].payload.substr(0, colon));
    int seq = std::stoi(all[i].payload.substr(colon + 1));
    ASSERT_EQ(seq, next[p]++);
  }
}

TEST(TopicLog, ReaderSeesEntriesWhileProducerAppends) {
  topic_log log("t");
  std::jthread producer([&] {
    manual_clock c;
    for (int i = 0; i < 500; ++i) log.append(std::to_string(i), c);
  });
  std::uint64_t seen = 0;
  while (seen < 500) {
    if (!log.wait_for_entry(seen, std::chrono::milliseconds(100))) continue;
    for (const auto& e : log.read_from(seen)) {
      ASSERT_EQ(e.offset, seen);
      ASSERT_EQ(e.payload, std::to_string(seen));
      ++seen;
    }
  }
}

TEST(Persistence, EmptyCatalogRoundTrip) {
  testing::temp_dir dir;
  topic_catalog c;
  c.persist(dir.path() / "topics");
  EXPECT_TRUE(topic_catalog::load(dir.path() / "topics").names().empty());
}

TEST(Persistence, ThreeTopicsRoundTripEntryWise) {
  testing::temp_dir dir;
  topic_catalog c;
  rng r(11);
  for (const char* name : {"esp-r1-sensor1", "esp-r1-sensor2", "esp-r1-times"}) {
    auto& log = c.create_topic(name);
    manual_clock clk(1'600'000'000'000);
    for (int i = 0; i < 1000; ++i) {
      clk.advance_by(r.uniform(0, 3));
      std::string payload(static_cast<std::size_t>(r.uniform(0, 80)), 'x');
      for (auto& ch : payload) ch = static_cast<char>(r.uniform(0, 255));  // arbitrary bytes, including NUL and newline
      log.append(payload, clk);
    }
  }
  c.persist(dir.path() / "topics");
  auto loaded = topic_catalog::load(dir.path() / "topics");
  ASSERT_EQ(loaded.names(), c.names());
  for (const auto& name : c.names()) EXPECT_EQ(loaded.get(name).read_from(0), c.get(name).read_from(0)) << name;
}

TEST(Persistence, FrameLayoutIsLittleEndian) {
  testing::temp_dir dir;
  topic_catalog c;
  manual_clock clk(0x0102030405);
  c.create_topic("t").append("hi", clk);
  c.persist(dir.path());
  std::ifstream in(dir.path() / "t.log", std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  std::vector<unsigned char> expected{2, 0, 0, 0, 0x05, 0x04, 0x03, 0x02, 0x01, 0, 0, 0, 'h', 'i'};
  EXPECT_EQ(bytes, expected);
}

TEST(Persistence, MissingDirectoryIsStorageError) {
  EXPECT_THROW(topic_catalog::load("/nonexistent/espbench/topics"), storage_error);
}

TEST(Persistence, TruncatedFileIsStorageError) {
  testing::temp_dir dir;
  std::ofstream(dir.path() / "t.log", std::ios::binary) << std::string("\x05\x00\x00", 3);
  EXPECT_THROW(topic_catalog::load(dir.path()), storage_error);
}

}  // namespace
}  // namespace espbench
