#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "espbench/clock.hpp"
#include "espbench/csv.hpp"
#include "espbench/error.hpp"

namespace espbench {

enum class column_type { integer, optional_integer, text };

struct column_def {
  std::string name;
  column_type type;
};

struct foreign_key {
  std::vector<std::size_t> columns;  // indices into the child row
  std::string parent_table;          // references the parent's primary key, in order
};

struct table_schema {
  std::string name;
  std::vector<column_def> columns;
  std::size_t key_columns = 1;  // primary key = leading columns, all integer
  std::vector<foreign_key> references;

  std::string header() const {
    std::string h;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) h += ',';
      h += columns[i].name;
    }
    return h;
  }
};

using cell = std::variant<std::monostate, std::int64_t, std::string>;
using row_key = std::vector<std::int64_t>;

struct row {
  std::vector<cell> cells;
  std::optional<std::int64_t> update_ts;  // unset until the first mutation after import

  friend bool operator==(const row&, const row&) = default;
};

inline constexpr std::string_view table_customer = "CUSTOMER";
inline constexpr std::string_view table_item = "ITEM";
inline constexpr std::string_view table_order = "ORDER";
inline constexpr std::string_view table_order_line = "ORDER_LINE";
inline constexpr std::string_view table_production_order = "PRODUCTION_ORDER";
inline constexpr std::string_view table_production_order_line = "PRODUCTION_ORDER_LINE";
inline constexpr std::string_view table_workplace = "WORKPLACE";

/// Schemas in dependency order: every table appears after the tables it references.
inline std::vector<table_schema> business_schemas() {
  using ct = column_type;
  return {
      {"CUSTOMER", {{"c_id", ct::integer}, {"c_name", ct::text}}, 1, {}},
      {"ITEM", {{"i_id", ct::integer}, {"i_name", ct::text}, {"i_price", ct::integer}}, 1, {}},
      {"ORDER", {{"o_id", ct::integer}, {"o_c_id", ct::integer}, {"o_entry_ts", ct::integer}}, 1, {{{1}, "CUSTOMER"}}},
      {"ORDER_LINE",
       {{"ol_o_id", ct::integer}, {"ol_number", ct::integer}, {"ol_i_id", ct::integer}, {"ol_quantity", ct::integer}},
       2,
       {{{0}, "ORDER"}, {{2}, "ITEM"}}},
      {"WORKPLACE",
       {{"wp_id", ct::integer},
        {"wp_name", ct::text},
        {"wp_downtime_start", ct::integer},
        {"wp_downtime_end", ct::integer}},
       1,
       {}},
      {"PRODUCTION_ORDER",
       {{"po_o_id", ct::integer}, {"po_ol_number", ct::integer}, {"po_due_ts", ct::integer}},
       2,
       {{{0, 1}, "ORDER_LINE"}}},
      {"PRODUCTION_ORDER_LINE",
       {{"pol_o_id", ct::integer},
        {"pol_ol_number", ct::integer},
        {"pol_number", ct::integer},
        {"pol_workplace_id", ct::integer},
        {"pol_start_ts", ct::optional_integer},
        {"pol_end_ts", ct::optional_integer}},
       3,
       {{{0, 1}, "PRODUCTION_ORDER"}, {{3}, "WORKPLACE"}}},
  };
}

struct downtime {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  friend bool operator==(const downtime&, const downtime&) = default;
};

struct production_line_key {
  std::int64_t o_id = 0;
  std::int64_t ol_number = 0;
  std::int64_t pol_number = 0;

  auto operator<=>(const production_line_key&) const = default;
};

struct production_line_row {
  production_line_key key;
  std::int64_t workplace_id = 0;
  std::optional<std::int64_t> start_ts;
  std::optional<std::int64_t> end_ts;
  std::optional<std::int64_t> update_ts;

  friend bool operator==(const production_line_row&, const production_line_row&) = default;
};

class table {
 public:
  explicit table(table_schema schema) : schema_(std::move(schema)) {}

  table(const table& other) : schema_(other.schema_) {
    std::shared_lock lock(other.mutex_);
    rows_ = other.rows_;
  }

  table& operator=(const table&) = delete;

  const table_schema& schema() const noexcept { return schema_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return rows_.size();
  }

  std::map<row_key, row> rows() const {
    std::shared_lock lock(mutex_);
    return rows_;
  }

  std::optional<row> find(const row_key& key) const {
    std::shared_lock lock(mutex_);
    auto it = rows_.find(key);
    if (it == rows_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const row_key& key) const {
    std::shared_lock lock(mutex_);
    return rows_.count(key) != 0;
  }

  friend bool operator==(const table& a, const table& b) {
    if (&a == &b) return true;
    return a.schema_.name == b.schema_.name && a.rows() == b.rows();
  }

 private:
  friend class business_db;

  table_schema schema_;
  mutable std::shared_mutex mutex_;
  std::map<row_key, row> rows_;
};

/// Embedded relational store for the business data. Writers are serialized per
/// table; readers see only committed rows.
class business_db {
 public:
  business_db() {
    for (auto& s : business_schemas()) {
      auto name = s.name;
      tables_.emplace(name, std::make_unique<table>(std::move(s)));
    }
  }

  business_db(const business_db& other) {
    for (const auto& [name, t] : other.tables_) tables_.emplace(name, std::make_unique<table>(*t));
  }

  business_db& operator=(const business_db&) = delete;

  friend bool operator==(const business_db& a, const business_db& b) {
    if (a.tables_.size() != b.tables_.size()) return false;
    for (const auto& [name, t] : a.tables_) {
      auto it = b.tables_.find(name);
      if (it == b.tables_.end() || !(*t == *it->second)) return false;
    }
    return true;
  }

  const table& get(std::string_view name) const { return table_ref(name); }

  std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    for (const auto& s : business_schemas()) out.push_back(s.name);
    return out;
  }

  /// Imports CSV lines (header first) atomically: either every row is inserted or none.
  /// A trailing `update_ts` header column is accepted to reload a post-run state.
  std::size_t import_csv(std::string_view table_name, const std::vector<std::string>& lines) {
    auto& t = table_ref(table_name);
    const auto& schema = t.schema_;
    if (lines.empty()) throw schema_error(schema.name + ": missing header row");
    bool with_update_ts = false;
    if (lines.front() != schema.header()) {
      if (lines.front() == schema.header() + ",update_ts") {
        with_update_ts = true;
      } else {
        throw schema_error(schema.name + ": header '" + lines.front() + "' does not match '" + schema.header() + "'");
      }
    }

    std::map<row_key, row> staged;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      if (lines[li].empty()) continue;
      auto fields = csv::split(lines[li]);
      auto expected = schema.columns.size() + (with_update_ts ? 1 : 0);
      if (fields.size() != expected) {
        throw schema_error(schema.name + " line " + std::to_string(li + 1) + ": " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(expected));
      }
      row r;
      for (std::size_t c = 0; c < schema.columns.size(); ++c) r.cells.push_back(parse_cell(schema, c, fields[c]));
      if (with_update_ts && !fields.back().empty()) r.update_ts = parse_schema_int(schema, "update_ts", fields.back());
      validate_row(schema, r);
      auto key = key_of(schema, r);
      if (staged.count(key) || t.contains(key)) {
        throw duplicate_key_error(schema.name + ": duplicate key " + key_string(key));
      }
      staged.emplace(std::move(key), std::move(r));
    }

    for (const auto& [key, r] : staged) {
      for (const auto& fk : schema.references) {
        row_key parent_key;
        for (auto c : fk.columns) parent_key.push_back(std::get<std::int64_t>(r.cells[c]));
        const auto& parent = table_ref(fk.parent_table);
        bool self_ref = fk.parent_table == schema.name;
        if (!parent.contains(parent_key) && !(self_ref && staged.count(parent_key))) {
          throw referential_error(schema.name + " " + key_string(key) + " references missing " + fk.parent_table +
                                  " " + key_string(parent_key));
        }
      }
    }

    std::unique_lock lock(t.mutex_);
    for (auto& [key, r] : staged) t.rows_.emplace(key, std::move(r));
    return staged.size();
  }

  /// Header plus rows in key order; optional absents are empty fields.
  std::vector<std::string> export_csv(std::string_view table_name, bool with_update_ts = false) const {
    const auto& t = table_ref(table_name);
    std::vector<std::string> out{t.schema_.header() + (with_update_ts ? ",update_ts" : "")};
    for (const auto& [key, r] : t.rows()) {
      std::string line;
      for (std::size_t c = 0; c < r.cells.size(); ++c) {
        if (c) line += ',';
        if (auto* i = std::get_if<std::int64_t>(&r.cells[c])) {
          csv::append_int(line, *i);
        } else if (auto* s = std::get_if<std::string>(&r.cells[c])) {
          line += *s;
        }
      }
      if (with_update_ts) {
        line += ',';
        if (r.update_ts) csv::append_int(line, *r.update_ts);
      }
      out.push_back(std::move(line));
    }
    return out;
  }

  downtime lookup_downtime(std::int64_t workplace_id) const {
    auto r = table_ref(table_workplace).find({workplace_id});
    if (!r) throw unknown_workplace_error("workplace " + std::to_string(workplace_id));
    return {std::get<std::int64_t>(r->cells[2]), std::get<std::int64_t>(r->cells[3])};
  }

  /// Records a production start (is_end=false) or end time for one order line.
  /// Repeated events overwrite. update_ts strictly increases per row.
  std::int64_t set_production_time(const production_line_key& key, bool is_end, std::int64_t ts, clock& now) {
    auto& t = table_ref(table_production_order_line);
    row_key k{key.o_id, key.ol_number, key.pol_number};
    std::unique_lock lock(t.mutex_);
    auto it = t.rows_.find(k);
    if (it == t.rows_.end()) throw unknown_key_error("PRODUCTION_ORDER_LINE " + key_string(k));
    auto& r = it->second;
    r.cells[is_end ? 5 : 4] = ts;
    std::int64_t update_ts = now.now_ms();
    if (r.update_ts && update_ts <= *r.update_ts) update_ts = *r.update_ts + 1;
    r.update_ts = update_ts;
    return update_ts;
  }

  std::optional<production_line_row> production_line(const production_line_key& key) const {
    auto r = table_ref(table_production_order_line).find({key.o_id, key.ol_number, key.pol_number});
    if (!r) return std::nullopt;
    return to_production_line(*r);
  }

  std::vector<production_line_key> production_line_keys() const {
    std::vector<production_line_key> out;
    for (const auto& [k, _] : table_ref(table_production_order_line).rows()) out.push_back({k[0], k[1], k[2]});
    return out;
  }

  /// Rows mutated at or after `since_ts`, ordered by update_ts.
  std::vector<row> scan_updates(std::string_view table_name, std::int64_t since_ts) const {
    std::vector<row> out;
    for (auto& [_, r] : table_ref(table_name).rows()) {
      if (r.update_ts && *r.update_ts >= since_ts) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const row& a, const row& b) { return *a.update_ts < *b.update_ts; });
    return out;
  }

  /// Full-scan referential check. Returns one message per violation.
  std::vector<std::string> check_integrity() const {
    std::vector<std::string> problems;
    for (const auto& [name, t] : tables_) {
      for (const auto& [key, r] : t->rows()) {
        for (const auto& fk : t->schema_.references) {
          row_key parent_key;
          for (auto c : fk.columns) parent_key.push_back(std::get<std::int64_t>(r.cells[c]));
          if (!table_ref(fk.parent_table).contains(parent_key)) {
            problems.push_back(name + " " + key_string(key) + " -> " + fk.parent_table + " " + key_string(parent_key));
          }
        }
      }
    }
    return problems;
  }

  static production_line_row to_production_line(const row& r) {
    auto opt = [](const cell& c) -> std::optional<std::int64_t> {
      if (auto* i = std::get_if<std::int64_t>(&c)) return *i;
      return std::nullopt;
    };
    return {{std::get<std::int64_t>(r.cells[0]), std::get<std::int64_t>(r.cells[1]), std::get<std::int64_t>(r.cells[2])},
            std::get<std::int64_t>(r.cells[3]),
            opt(r.cells[4]),
            opt(r.cells[5]),
            r.update_ts};
  }

  static std::string key_string(const row_key& key) {
    std::string s = "(";
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(key[i]);
    }
    return s + ")";
  }

 private:
  table& table_ref(std::string_view name) const {
    auto it = tables_.find(std::string(name));
    if (it == tables_.end()) throw unknown_table_error(std::string(name));
    return *it->second;
  }

  static std::int64_t parse_schema_int(const table_schema& s, std::string_view col, std::string_view field) {
    auto v = csv::try_parse_int<std::int64_t>(field);
    if (!v) throw schema_error(s.name + "." + std::string(col) + ": not an integer: '" + std::string(field) + "'");
    return *v;
  }

  static cell parse_cell(const table_schema& s, std::size_t c, std::string_view field) {
    const auto& col = s.columns[c];
    switch (col.type) {
      case column_type::integer:
        return parse_schema_int(s, col.name, field);
      case column_type::optional_integer:
        if (field.empty()) return std::monostate{};
        return parse_schema_int(s, col.name, field);
      case column_type::text:
        return std::string(field);
    }
    return std::monostate{};
  }

  static void validate_row(const table_schema& s, const row& r) {
    if (s.name == table_workplace) {
      auto start = std::get<std::int64_t>(r.cells[2]);
      auto end = std::get<std::int64_t>(r.cells[3]);
      if (start >= end) throw schema_error("WORKPLACE: wp_downtime_start must be < wp_downtime_end");
    }
    if (s.name == table_production_order_line) {
      auto* start = std::get_if<std::int64_t>(&r.cells[4]);
      auto* end = std::get_if<std::int64_t>(&r.cells[5]);
      if (start && end && *start > *end) throw schema_error("PRODUCTION_ORDER_LINE: pol_start_ts > pol_end_ts");
    }
    for (std::size_t c = 0; c < s.key_columns; ++c) {
      if (std::get<std::int64_t>(r.cells[c]) <= 0) throw schema_error(s.name + ": key columns must be positive");
    }
  }

  static row_key key_of(const table_schema& s, const row& r) {
    row_key k;
    for (std::size_t c = 0; c < s.key_columns; ++c) k.push_back(std::get<std::int64_t>(r.cells[c]));
    return k;
  }

  std::map<std::string, std::unique_ptr<table>, std::less<>> tables_;
};

/// Imports every business table from `<directory>/<TABLE>.csv` in dependency order.
/// `overrides` maps a table name to an alternative file.
inline std::map<std::string, std::size_t> import_directory(
    business_db& db, const std::filesystem::path& directory,
    const std::map<std::string, std::filesystem::path>& overrides = {}) {
  std::map<std::string, std::size_t> counts;
  for (const auto& name : db.table_names()) {
    auto it = overrides.find(name);
    auto path = it != overrides.end() ? it->second : directory / (name + ".csv");
    if (!std::filesystem::exists(path)) throw storage_error("missing table file for " + name + ": " + path.string());
    counts[name] = db.import_csv(name, csv::read_lines(path.string()));
  }
  return counts;
}

inline void export_directory(const business_db& db, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw storage_error("cannot create " + directory.string());
  for (const auto& name : db.table_names()) csv::write_lines((directory / (name + ".csv")).string(), db.export_csv(name));
}

}  // namespace espbench
