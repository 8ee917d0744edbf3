#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace espbench {

enum class error_kind {
  field_count,
  type,
  duplicate_topic,
  missing_topic,
  offset_out_of_range,
  storage,
  schema,
  duplicate_key,
  referential,
  unknown_table,
  unknown_workplace,
  unknown_key,
  dangling_anchor,
  empty_samples,
  config,
  missing_input,
  run_exists,
  drain_incomplete,
};

constexpr std::string_view to_string(error_kind k) noexcept {
  switch (k) {
    case error_kind::field_count: return "FieldCountError";
    case error_kind::type: return "TypeError";
    case error_kind::duplicate_topic: return "DuplicateTopic";
    case error_kind::missing_topic: return "MissingTopic";
    case error_kind::offset_out_of_range: return "OffsetOutOfRange";
    case error_kind::storage: return "StorageError";
    case error_kind::schema: return "SchemaError";
    case error_kind::duplicate_key: return "DuplicateKey";
    case error_kind::referential: return "ReferentialError";
    case error_kind::unknown_table: return "UnknownTable";
    case error_kind::unknown_workplace: return "UnknownWorkplace";
    case error_kind::unknown_key: return "UnknownKey";
    case error_kind::dangling_anchor: return "DanglingAnchor";
    case error_kind::empty_samples: return "EmptySamples";
    case error_kind::config: return "ConfigError";
    case error_kind::missing_input: return "MissingInput";
    case error_kind::run_exists: return "RunExists";
    case error_kind::drain_incomplete: return "DrainIncomplete";
  }
  return "Error";
}

/// Base of every failure raised by the harness. `kind()` drives CLI exit codes.
class error : public std::runtime_error {
 public:
  error(error_kind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  error_kind kind() const noexcept { return kind_; }

 private:
  error_kind kind_;
};

template <error_kind K>
class error_of : public error {
 public:
  explicit error_of(const std::string& what) : error(K, what) {}
};

using field_count_error = error_of<error_kind::field_count>;
using type_error = error_of<error_kind::type>;
using duplicate_topic_error = error_of<error_kind::duplicate_topic>;
using missing_topic_error = error_of<error_kind::missing_topic>;
using offset_out_of_range_error = error_of<error_kind::offset_out_of_range>;
using storage_error = error_of<error_kind::storage>;
using schema_error = error_of<error_kind::schema>;
using duplicate_key_error = error_of<error_kind::duplicate_key>;
using referential_error = error_of<error_kind::referential>;
using unknown_table_error = error_of<error_kind::unknown_table>;
using unknown_workplace_error = error_of<error_kind::unknown_workplace>;
using unknown_key_error = error_of<error_kind::unknown_key>;
using dangling_anchor_error = error_of<error_kind::dangling_anchor>;
using empty_samples_error = error_of<error_kind::empty_samples>;
using config_error = error_of<error_kind::config>;
using missing_input_error = error_of<error_kind::missing_input>;
using run_exists_error = error_of<error_kind::run_exists>;
using drain_incomplete_error = error_of<error_kind::drain_incomplete>;

}  // namespace espbench
