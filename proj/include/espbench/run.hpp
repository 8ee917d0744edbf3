#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>

#include "espbench/broker.hpp"
#include "espbench/config.hpp"
#include "espbench/csv.hpp"
#include "espbench/datagen.hpp"
#include "espbench/engine.hpp"
#include "espbench/error.hpp"
#include "espbench/sampler.hpp"
#include "espbench/sender.hpp"
#include "espbench/store.hpp"
#include "espbench/validator.hpp"

// Benchmark process: generate -> create topics -> import business data ->
// snapshot -> start queries -> send streams -> drain -> validate -> report.

namespace espbench {

struct run_paths {
  std::filesystem::path root;

  std::filesystem::path config_snapshot() const { return root / "config.snapshot"; }
  std::filesystem::path business() const { return root / "business"; }
  std::filesystem::path streams() const { return root / "streams"; }
  std::filesystem::path topics() const { return root / "topics"; }
  std::filesystem::path db_snapshot() const { return root / "db-snapshot"; }
  std::filesystem::path results() const { return root / "results"; }
  std::filesystem::path sysload() const { return root / "sysload.csv"; }
  std::filesystem::path final_lines() const { return results() / "db-final" / "PRODUCTION_ORDER_LINE.csv"; }
  std::filesystem::path anchors(int q) const { return results() / ("anchors-q" + std::to_string(q) + ".csv"); }
  std::filesystem::path summary_json() const { return results() / "summary.json"; }
  std::filesystem::path summary_txt() const { return results() / "summary.txt"; }
};

inline run_paths paths_for(const run_config& cfg) { return {std::filesystem::path(cfg.output_dir) / cfg.run_id}; }

inline engine_params engine_params_for(const run_config& cfg) {
  engine_params p;
  p.topics = engine_topics::named(cfg.topic_prefix, cfg.run_id);
  p.sos = cfg.sos;
  p.q2_window_size = static_cast<std::size_t>(cfg.q2_window_size);
  p.mode = cfg.clock;
  return p;
}

inline validation::validator_params validator_params_for(const run_config& cfg) {
  validation::validator_params p;
  p.topics = engine_topics::named(cfg.topic_prefix, cfg.run_id);
  p.sos = cfg.sos;
  p.q2_window_size = static_cast<std::size_t>(cfg.q2_window_size);
  p.mode = cfg.clock;
  return p;
}

inline run_config load_run_config(const std::filesystem::path& run_dir) {
  auto path = run_dir / "config.snapshot";
  if (!std::filesystem::exists(path)) throw missing_input_error("no config.snapshot in " + run_dir.string());
  auto cfg = parse_run_config(csv::read_text(path.string()));
  cfg.validate();
  return cfg;
}

namespace detail {

inline void remove_all(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove_all(p, ec);
  if (ec) throw storage_error("cannot remove " + p.string() + ": " + ec.message());
}

inline void write_snapshot(const run_config& cfg, const run_paths& paths) {
  std::filesystem::create_directories(paths.root);
  csv::write_text(paths.config_snapshot().string(), serialize_run_config(cfg));
}

}  // namespace detail

/// Step 3: business tables and the three input streams.
inline void cmd_generate(const run_config& cfg, bool force = false) {
  cfg.validate();
  auto paths = paths_for(cfg);
  if (std::filesystem::exists(paths.business()) || std::filesystem::exists(paths.streams())) {
    if (!force) throw run_exists_error("run " + cfg.run_id + " already has generated data (use --force)");
    detail::remove_all(paths.business());
    detail::remove_all(paths.streams());
  }
  detail::write_snapshot(cfg, paths);
  generate_all(cfg.effective_gen(), paths.root);
}

struct run_outcome {
  send_summary send;
  engine_summary engine;
};

/// Steps 2 and 4-9: topics, import, snapshot, engine, sender, drain.
inline run_outcome cmd_run(const run_config& cfg, bool force = false) {
  cfg.validate();
  if (cfg.queries.empty()) throw config_error("run needs at least one query");
  auto paths = paths_for(cfg);
  if (!std::filesystem::is_directory(paths.business()) || !std::filesystem::is_directory(paths.streams())) {
    throw missing_input_error("run " + cfg.run_id + " has no generated data; run generate first");
  }
  if (std::filesystem::exists(paths.topics())) {
    if (!force) throw run_exists_error("run " + cfg.run_id + " was already executed (use --force)");
    for (const auto& p : {paths.topics(), paths.db_snapshot(), paths.results(), paths.sysload()}) detail::remove_all(p);
  }
  detail::write_snapshot(cfg, paths);

  auto params = engine_params_for(cfg);
  const auto& t = params.topics;
  topic_catalog catalog;
  for (const auto& name : {t.sensor1, t.sensor2, t.times}) catalog.create_topic(name);
  for (const auto& name : t.results) catalog.create_topic(name);

  business_db db;
  import_business(db, paths.business());
  export_directory(db, paths.db_snapshot());

  std::optional<resource_sampler> sampler;
  if (cfg.sampling) sampler.emplace(paths.sysload(), std::chrono::milliseconds(cfg.sampling_interval_ms));

  sender_config sc;
  sc.input_rate = cfg.input_rate;
  sc.duration_s = cfg.duration_s;
  sc.mode = cfg.clock;
  sc.logical_start_ms = cfg.gen.start_ts_ms;
  const auto& q = cfg.queries;
  if (q.count(1) || q.count(2) || q.count(3) || q.count(4)) sc.streams.push_back({"sensor1", paths.streams() / "sensor1.csv", t.sensor1});
  if (q.count(4)) sc.streams.push_back({"sensor2", paths.streams() / "sensor2.csv", t.sensor2});
  if (q.count(5)) sc.streams.push_back({"times", paths.streams() / "times.csv", t.times});
  for (const auto& s : sc.streams) {
    if (!std::filesystem::exists(s.file)) throw missing_input_error("missing stream file " + s.file.string());
  }

  run_outcome outcome;
  std::atomic<bool> inputs_done{false};
  streaming_engine engine(params);
  std::exception_ptr engine_failure;
  std::jthread engine_thread([&] {
    try {
      outcome.engine = engine.run(cfg.queries, catalog, db, inputs_done);
    } catch (...) {
      engine_failure = std::current_exception();
    }
  });
  try {
    outcome.send = stream(sc, catalog);
  } catch (...) {
    inputs_done.store(true, std::memory_order_release);
    engine_thread.join();
    throw;
  }
  inputs_done.store(true, std::memory_order_release);
  engine_thread.join();
  if (sampler) sampler->stop();
  if (engine_failure) std::rethrow_exception(engine_failure);

  for (const auto& [qid, s] : outcome.engine.queries) {
    for (const auto& [topic, consumed] : s.consumed) {
      if (consumed != catalog.get(topic).size()) {
        throw drain_incomplete_error("q" + std::to_string(qid) + " consumed " + std::to_string(consumed) + " of " +
                                     std::to_string(catalog.get(topic).size()) + " entries of " + topic);
      }
    }
  }

  catalog.persist(paths.topics());
  std::filesystem::create_directories(paths.final_lines().parent_path());
  csv::write_lines(paths.final_lines().string(), db.export_csv(table_production_order_line, true));
  csv::write_text((paths.results() / "engine-summary.json").string(), outcome.engine.to_json() + "\n");
  csv::write_text((paths.results() / "send-summary.json").string(), outcome.send.to_json() + "\n");
  for (const auto& [qid, s] : outcome.engine.queries) csv::write_lines(paths.anchors(qid).string(), anchors_to_csv(s.anchors));
  return outcome;
}

/// Step 10: everything is read back from the run directory.
inline validation::run_report cmd_validate(const std::filesystem::path& run_dir, bool force = false) {
  auto cfg = load_run_config(run_dir);
  run_paths paths{run_dir};
  if (!std::filesystem::is_directory(paths.topics())) throw missing_input_error("run has not been executed: " + run_dir.string());
  if (std::filesystem::exists(paths.summary_json()) && !force) {
    throw run_exists_error("run " + cfg.run_id + " was already validated (use --force)");
  }
  auto catalog = topic_catalog::load(paths.topics());
  business_db snapshot;
  import_directory(snapshot, paths.db_snapshot());
  business_db final_db;
  import_directory(final_db, paths.db_snapshot(), {{std::string(table_production_order_line), paths.final_lines()}});

  validation::validation_inputs in;
  in.catalog = &catalog;
  in.snapshot = &snapshot;
  in.final_db = &final_db;
  for (int q : cfg.queries) {
    if (!std::filesystem::exists(paths.anchors(q))) throw missing_input_error("missing " + paths.anchors(q).string());
    in.anchors[q] = anchors_from_csv(csv::read_lines(paths.anchors(q).string()));
  }
  auto report = validation::validate(cfg.queries, in, validator_params_for(cfg));
  validation::emit_reports(report, paths.results());
  return report;
}

inline std::string cmd_report(const std::filesystem::path& run_dir) {
  run_paths paths{run_dir};
  if (!std::filesystem::exists(paths.summary_txt())) throw missing_input_error("run has not been validated: " + run_dir.string());
  return csv::read_text(paths.summary_txt().string());
}

/// Full pipeline. Returns true iff every selected query validated.
inline bool cmd_all(const run_config& cfg, bool force, std::ostream& log) {
  cmd_generate(cfg, force);
  auto outcome = cmd_run(cfg, force);
  log << outcome.send.to_json() << "\n";
  auto report = cmd_validate(paths_for(cfg).root, force);
  log << cmd_report(paths_for(cfg).root);
  return report.all_pass();
}

}  // namespace espbench
