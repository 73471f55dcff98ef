// mtdctl: train models, simulate scenarios, run the framework, summarize journals.
#include <csignal>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mtd/config.hpp"
#include "mtd/error.hpp"
#include "mtd/framework.hpp"
#include "mtd/journal.hpp"
#include "mtd/log.hpp"
#include "mtd/report.hpp"
#include "mtd/scenario.hpp"
#ifdef MTD_HAS_LIVE_BACKEND
#include "mtd/live_host.hpp"
#endif

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 2;
constexpr int kRuntimeFailure = 3;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mtd::ConfigError("cannot write '" + path + "'");
  out << text;
}

// Configuration problems map to 2, everything else to 3.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const mtd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const mtd::FormatError& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const mtd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

struct TrainArgs {
  std::string config;
  std::string algo;
  std::string out_model;
  std::string out_scaler;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  auto config = mtd::load_framework_config(a.config);
  if (a.seed) mtd::override_seed(config, *a.seed);
  auto train = config.train;
  if (!a.algo.empty()) train.algo = mtd::parse_algorithm(a.algo);

  mtd::TrainingResult result;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    result = mtd::run_training(train, config.seed);
  } catch (const mtd::ConfigError&) {
    throw;
  } catch (const mtd::Error& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!a.out_model.empty()) mtd::save_model(*result.model, a.out_model);
  if (!a.out_scaler.empty()) mtd::save_scaler(result.scaler, a.out_scaler);
  if (!train.report_path.empty()) write_text(train.report_path, result.report.to_json());

  std::cout << "algorithm: " << mtd::to_string(train.algo) << "\n";
  std::cout << "train/test vectors: " << result.train_size << "/" << result.test_size << "\n";
  std::cout << result.report.to_table();
  char line[64];
  std::snprintf(line, sizeof line, "macro F1: %.2f\n", result.report.macro_f1);
  std::cout << line;
  std::snprintf(line, sizeof line, "training time: %.2f s\n", secs);
  std::cout << line;
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

int cmd_simulate(const SimulateArgs& a) {
  auto config = mtd::load_framework_config(a.scenario);
  if (a.seed) mtd::override_seed(config, *a.seed);
  // Scenario journals are kept in memory.
  config.journal_path.clear();
  const auto report = mtd::run_scenario(config);
  const auto json = mtd::report_to_json(report);
  if (a.out == "-") {
    std::cout << json;
  } else {
    if (!a.out.empty()) write_text(a.out, json);
    std::cout << mtd::report_to_table(report);
  }
  if (a.strict && !report.all_checks_pass()) {
    std::cerr << "one or more scenario checks failed\n";
    return kRuntimeFailure;
  }
  return kOk;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool realtime = false;
};

int cmd_run(const RunArgs& a) {
  auto config = mtd::load_framework_config(a.config);
  if (a.seed) mtd::override_seed(config, *a.seed);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);

  mtd::RunControl control{&g_stop, a.realtime};
  std::unique_ptr<mtd::Host> live;
  std::unique_ptr<mtd::Framework> fw;
  if (config.backend == "live") {
#ifdef MTD_HAS_LIVE_BACKEND
    mtd::LiveHostOptions opts;
    opts.root = config.live.root;
    opts.whitelist = {config.live.whitelist.begin(), config.live.whitelist.end()};
    opts.network = config.environment.network;
    opts.seed = config.seed;
    live = mtd::make_live_host(opts);
    fw = std::make_unique<mtd::Framework>(config, *live);
    control.realtime = true;
#else
    throw mtd::ConfigError("this build has no live backend");
#endif
  } else {
    fw = std::make_unique<mtd::Framework>(config);
  }
  fw->run(control);
  const auto lines = fw->journal().lines();
  std::size_t alarms = 0, outcomes = 0;
  for (const auto& l : lines) {
    alarms += l.find("\"type\":\"alarm\"") != std::string::npos;
    outcomes += l.find("\"type\":\"outcome\"") != std::string::npos;
  }
  std::cout << "stopped at t=" << fw->last_step() << " s; " << alarms << " alarms, " << outcomes << " outcomes\n";
  if (config.journal_path.empty()) std::cout << fw->journal().text();
  return kOk;
}

int cmd_report(const std::string& journal, const std::string& format) {
  const auto contents = mtd::load_journal(journal);
  std::cout << (format == "json" ? mtd::journal_to_json(contents) : mtd::journal_to_table(contents));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving target defense framework for IoT devices"};
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log", log_level, "Log level (overrides MTD_LOG)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Generate a dataset, train and evaluate a classifier");
  t->add_option("--config", train.config, "Configuration file with a [train] table")->required();
  t->add_option("--algo", train.algo, "knn, tree or forest")->check(CLI::IsMember({"knn", "tree", "forest"}));
  t->add_option("--out-model", train.out_model, "Model output path");
  t->add_option("--out-scaler", train.out_scaler, "Scaler output path");
  t->add_option("--seed", train.seed, "Override the configured seed");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run a sandbox scenario and report per-phase results");
  s->add_option("--scenario", sim.scenario, "Scenario file")->required();
  s->add_option("--out", sim.out, "JSON report path ('-' prints JSON instead of the table)");
  s->add_option("--seed", sim.seed, "Override the configured seed");
  s->add_flag("--strict", sim.strict, "Exit 3 when a scenario check fails");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the framework loop until duration_s or SIGTERM");
  r->add_option("--config", run.config, "Framework configuration file")->required();
  r->add_option("--seed", run.seed, "Override the configured seed");
  r->add_flag("--realtime", run.realtime, "Pace steps to wall-clock time (always on for the live backend)");

  std::string journal, format = "table";
  auto* rep = app.add_subcommand("report", "Summarize a journal file");
  rep->add_option("--journal", journal, "Journal (JSON lines)")->required();
  rep->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }
  mtd::configure_logging(log_level.empty() ? std::nullopt : std::optional<std::string>(log_level));

  if (*t) return guarded([&] { return cmd_train(train); });
  if (*s) return guarded([&] { return cmd_simulate(sim); });
  if (*r) return guarded([&] { return cmd_run(run); });
  return guarded([&] { return cmd_report(journal, format); });
}
