#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "espbench/config.hpp"
#include "espbench/csv.hpp"
#include "espbench/error.hpp"
#include "espbench/run.hpp"

namespace {

enum exit_code : int {
  ok = 0,
  validation_failed = 1,
  usage = 2,
  missing_input = 3,
  run_exists = 4,
  storage = 5,
  bad_data = 6,
  drain_incomplete = 7,
  internal = 10,
};

int exit_code_for(espbench::error_kind k) {
  using espbench::error_kind;
  switch (k) {
    case error_kind::config: return usage;
    case error_kind::missing_input: return missing_input;
    case error_kind::run_exists: return run_exists;
    case error_kind::storage: return storage;
    case error_kind::drain_incomplete: return drain_incomplete;
    default: return bad_data;
  }
}

struct overrides {
  std::optional<std::string> run_id, output_dir, clock, queries, topic_prefix;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> scale_factor, rate, duration;
  std::vector<std::string> settings;  // key=value
};

espbench::run_config resolve(const std::string& config_file, const overrides& o) {
  auto cfg = espbench::default_run_config();
  if (!config_file.empty()) espbench::apply_config_text(cfg, espbench::csv::read_text(config_file));
  for (const auto& kv : o.settings) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw espbench::config_error("--set expects key=value, got '" + kv + "'");
    espbench::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.run_id) cfg.run_id = *o.run_id;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.topic_prefix) cfg.topic_prefix = *o.topic_prefix;
  if (o.clock) espbench::set_config_value(cfg, "clock", *o.clock);
  if (o.queries) espbench::set_config_value(cfg, "queries", *o.queries);
  if (o.seed) cfg.gen.seed = *o.seed;
  if (o.scale_factor) cfg.gen.scale_factor = *o.scale_factor;
  if (o.rate) cfg.input_rate = *o.rate;
  if (o.duration) cfg.duration_s = *o.duration;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enterprise stream processing benchmark harness"};
  app.require_subcommand(1);

  std::string config_file;
  bool force = false;
  overrides o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_file, "Config file (key = value lines)")->check(CLI::ExistingFile);
    cmd->add_option("--run-id", o.run_id, "Run identifier");
    cmd->add_option("--out", o.output_dir, "Directory holding run directories");
    cmd->add_flag("--force", force, "Overwrite an existing run");
  };
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "Generator seed");
    cmd->add_option("--scale-factor", o.scale_factor, "Business data scale factor");
    cmd->add_option("--rate", o.rate, "Input rate, messages/second per stream");
    cmd->add_option("--duration", o.duration, "Send duration in seconds");
    cmd->add_option("--queries", o.queries, "Comma-separated subset of 1..5");
    cmd->add_option("--clock", o.clock, "real or logical");
    cmd->add_option("--topic-prefix", o.topic_prefix, "Topic name prefix");
    cmd->add_option("--set", o.settings, "Override any config key (key=value), repeatable");
  };

  auto* generate = app.add_subcommand("generate", "Generate business data and input streams");
  auto* run = app.add_subcommand("run", "Execute the queries against the generated streams");
  auto* validate = app.add_subcommand("validate", "Check results and compute latencies");
  auto* report = app.add_subcommand("report", "Print the validation summary");
  auto* all = app.add_subcommand("all", "generate, run, validate and report");
  for (auto* cmd : {generate, run, validate, report, all}) add_common(cmd);
  for (auto* cmd : {generate, run, all}) add_run_options(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = resolve(config_file, o);
    auto run_dir = espbench::paths_for(cfg).root;
    if (generate->parsed()) {
      espbench::cmd_generate(cfg, force);
      std::cout << "generated " << run_dir.string() << "\n";
    } else if (run->parsed()) {
      auto outcome = espbench::cmd_run(cfg, force);
      std::cout << outcome.send.to_json() << "\n";
    } else if (validate->parsed()) {
      auto result = espbench::cmd_validate(run_dir, force);
      std::cout << espbench::cmd_report(run_dir);
      return result.all_pass() ? ok : validation_failed;
    } else if (report->parsed()) {
      std::cout << espbench::cmd_report(run_dir);
    } else if (all->parsed()) {
      return espbench::cmd_all(cfg, force, std::cout) ? ok : validation_failed;
    }
  } catch (const espbench::error& e) {
    std::cerr << "espbench: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "espbench: " << e.what() << "\n";
    return internal;
  }
  return ok;
}
