#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "espbench/datagen.hpp"
#include "espbench/store.hpp"
#include "test_support.hpp"

namespace espbench {
namespace {

using testing::small_db;
using testing::workplaces;

TEST(Import, ValidWorkplaces) {
  business_db db;
  EXPECT_EQ(db.import_csv("WORKPLACE", workplaces), 3u);
}

TEST(Import, DuplicateKeyInsertsNothing) {
  business_db db;
  EXPECT_THROW(db.import_csv("WORKPLACE", {workplaces[0], "1,a,1,2", "2,b,1,2", "1,c,1,2"}), duplicate_key_error);
  EXPECT_EQ(db.get("WORKPLACE").size(), 0u);
  db.import_csv("WORKPLACE", {workplaces[0], "1,a,1,2"});
  EXPECT_THROW(db.import_csv("WORKPLACE", {workplaces[0], "5,e,1,2", "1,a,1,2"}), duplicate_key_error);
  EXPECT_EQ(db.get("WORKPLACE").size(), 1u);
}

TEST(Import, MissingWorkplaceIsReferentialError) {
  auto db = small_db();
  EXPECT_THROW(db.import_csv("PRODUCTION_ORDER_LINE",
                             {"pol_o_id,pol_ol_number,pol_number,pol_workplace_id,pol_start_ts,pol_end_ts", "7,1,3,99,,"}),
               referential_error);
  EXPECT_EQ(db.get("PRODUCTION_ORDER_LINE").size(), 2u);
}

TEST(Import, SchemaErrors) {
  business_db db;
  EXPECT_THROW(db.import_csv("WORKPLACE", {"id,name"}), schema_error);
  EXPECT_THROW(db.import_csv("WORKPLACE", {workplaces[0], "1,a,1"}), schema_error);
  EXPECT_THROW(db.import_csv("WORKPLACE", {workplaces[0], "x,a,1,2"}), schema_error);
  EXPECT_THROW(db.import_csv("WORKPLACE", {workplaces[0], "1,a,5,5"}), schema_error);
  EXPECT_THROW(db.import_csv("NOPE", {"a"}), unknown_table_error);
}

TEST(Downtime, Lookup) {
  auto db = small_db();
  EXPECT_EQ(db.lookup_downtime(1), (downtime{1000, 2000}));
  EXPECT_THROW(db.lookup_downtime(42), unknown_workplace_error);
}

TEST(Downtime, LookupIsReadOnly) {
  auto db = small_db();
  business_db before(db);
  db.lookup_downtime(2);
  EXPECT_TRUE(db == before);
}

TEST(ProductionTime, StartThenEnd) {
  auto db = small_db();
  manual_clock c(500);
  auto u1 = db.set_production_time({7, 1, 1}, false, 400, c);
  auto row = *db.production_line({7, 1, 1});
  EXPECT_EQ(row.start_ts, 400);
  EXPECT_FALSE(row.end_ts.has_value());
  EXPECT_EQ(row.update_ts, u1);
  EXPECT_EQ(u1, 500);

  c.advance_to(600);
  auto u2 = db.set_production_time({7, 1, 1}, true, 450, c);
  row = *db.production_line({7, 1, 1});
  EXPECT_EQ(row.end_ts, 450);
  EXPECT_EQ(row.start_ts, 400);
  EXPECT_GT(u2, u1);
}

TEST(ProductionTime, UpdateTsStrictlyIncreasesWithFrozenClock) {
  auto db = small_db();
  manual_clock c(10);
  auto a = db.set_production_time({7, 1, 1}, false, 1, c);
  auto b = db.set_production_time({7, 1, 1}, false, 2, c);  // last writer wins
  EXPECT_GT(b, a);
  EXPECT_EQ(db.production_line({7, 1, 1})->start_ts, 2);
}

TEST(ProductionTime, UnknownKeyLeavesDbUnchanged) {
  auto db = small_db();
  business_db before(db);
  manual_clock c(1);
  EXPECT_THROW(db.set_production_time({9, 9, 9}, false, 1, c), unknown_key_error);
  EXPECT_TRUE(db == before);
}

TEST(ScanUpdates, NoneSince) {
  auto db = small_db();
  EXPECT_TRUE(db.scan_updates("PRODUCTION_ORDER_LINE", 0).empty());
  EXPECT_THROW(db.scan_updates("NOPE", 0), unknown_table_error);
}

TEST(ScanUpdates, SortedAndInclusive) {
  business_db db;
  gen_config cfg;
  cfg.scale_factor = 1;
  auto files = generate_business(cfg);
  for (const auto& name : db.table_names()) db.import_csv(name, files.at(name));
  auto keys = db.production_line_keys();
  std::vector<std::int64_t> times{50, 10, 40, 20, 30};
  for (std::size_t i = 0; i < times.size(); ++i) {
    manual_clock at(times[i]);
    db.set_production_time(keys[i], false, times[i], at);
  }
  auto rows = db.scan_updates("PRODUCTION_ORDER_LINE", 0);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), [](const row& a, const row& b) { return *a.update_ts < *b.update_ts; }));
  EXPECT_EQ(db.scan_updates("PRODUCTION_ORDER_LINE", 30).size(), 3u);  // 30, 40, 50
}

TEST(Integrity, GeneratedDataPassesFullScan) {
  business_db db;
  gen_config cfg;
  auto files = generate_business(cfg);
  for (const auto& name : db.table_names()) db.import_csv(name, files.at(name));
  EXPECT_TRUE(db.check_integrity().empty());
}

TEST(ExportImport, RoundTripsUpToRowOrder) {
  auto db = small_db();
  for (const auto& name : db.table_names()) {
    auto exported = db.export_csv(name);
    auto lines = exported;
    std::reverse(lines.begin() + 1, lines.end());
    business_db fresh;
    // parents first so references resolve
    for (const auto& n : fresh.table_names()) {
      auto l = small_db().export_csv(n);
      if (n == name) l = lines;
      fresh.import_csv(n, l);
    }
    EXPECT_EQ(fresh.export_csv(name), exported) << name;
  }
}

TEST(ExportImport, UpdateTsColumnReloads) {
  auto db = small_db();
  manual_clock c(77);
  db.set_production_time({7, 1, 2}, true, 70, c);
  auto lines = db.export_csv("PRODUCTION_ORDER_LINE", true);
  EXPECT_EQ(lines[2], "7,1,2,2,,70,77");

  business_db reloaded;
  for (const auto& name : reloaded.table_names()) {
    reloaded.import_csv(name, name == "PRODUCTION_ORDER_LINE" ? lines : db.export_csv(name));
  }
  EXPECT_TRUE(reloaded == db);
}

TEST(Directory, MissingTableFileNamesTable) {
  testing::temp_dir dir;
  business_db db;
  try {
    import_directory(db, dir.path());
    FAIL();
  } catch (const storage_error& e) {
    EXPECT_NE(std::string(e.what()).find("CUSTOMER"), std::string::npos);
  }
}

TEST(Concurrency, ReadersSeeCommittedRowsWhileWriterUpdates) {
  auto db = small_db();
  std::atomic<bool> stop{false};
  std::jthread reader([&] {
    while (!stop) {
      auto row = db.production_line({7, 1, 1});
      ASSERT_TRUE(row.has_value());
      if (row->start_ts) {
        ASSERT_EQ(*row->start_ts + 1000, *row->update_ts);
      }
    }
  });
  for (int i = 0; i < 2000; ++i) {
    manual_clock c(i + 1000);
    db.set_production_time({7, 1, 1}, false, i, c);
  }
  stop = true;
}

}  // namespace
}  // namespace espbench
