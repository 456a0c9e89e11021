#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mumkit/config.hpp"
#include "mumkit/error.hpp"
#include "mumkit/pipeline.hpp"

namespace {

// Errors go to stderr as one JSON object so scripts can parse them.
int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mumkit: measure how far text can be modulated before evaluators stop detecting or understanding it"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::string> output_dir;
  mumkit::CommandOptions options;
  std::string evaluator;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the modulation seed");
    sub->add_option("--output-dir", output_dir, "Override the output directory");
    sub->add_flag("--offline", options.offline, "Refuse any non-mock evaluator");
    sub->add_flag("--force", options.force, "Accept artifacts produced under a different manifest");
  };

  auto* build = app.add_subcommand("build", "Validate, rank and modulate the corpus into the dataset");
  add_common(build);
  auto* run = app.add_subcommand("run", "Query evaluators on the dataset and store rate series");
  add_common(run);
  auto* fit = app.add_subcommand("fit", "Fit logistic curves, Spearman tests, IMUM/MUM and trade-offs");
  add_common(fit);
  auto* report = app.add_subcommand("report", "Render tables, figures and report.md");
  add_common(report);
  auto* replay = app.add_subcommand("replay", "Re-run from the cache only, verify, then fit and report");
  add_common(replay);
  auto* sweep = app.add_subcommand("sweep", "Simulate a mock reader population and sweep shared familiarity");
  add_common(sweep);

  for (auto* sub : {run, replay}) {
    sub->add_option("--evaluator", evaluator, "Only this evaluator id");
    sub->add_option("--task", options.task, "detect | understand | both")->check(CLI::IsMember({"detect", "understand", "both"}));
  }
  for (auto* sub : {fit, report, replay}) sub->add_option("--tau", tau, "Override the IMUM threshold")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(mumkit::ExitCode::kUsage);
  }
  if (!evaluator.empty()) options.evaluator = evaluator;

  try {
    auto config = mumkit::load_config(config_path);
    mumkit::apply_overrides(config, {seed, tau, output_dir});
    mumkit::ExitCode code = mumkit::ExitCode::kOk;
    if (*build) code = mumkit::cmd_build(config, options);
    else if (*run) code = mumkit::cmd_run(config, options);
    else if (*fit) code = mumkit::cmd_fit(config, options);
    else if (*report) code = mumkit::cmd_report(config, options);
    else if (*replay) code = mumkit::cmd_replay(config, options);
    else if (*sweep) code = mumkit::cmd_sweep(config, options);
    if (code == mumkit::ExitCode::kPartialFailure)
      report_error("partial_failure", "one or more evaluators failed; see messages above", static_cast<int>(code));
    return static_cast<int>(code);
  } catch (const mumkit::Error& e) {
    return report_error(std::string(mumkit::to_string(e.kind())), e.what(), static_cast<int>(mumkit::exit_code_for(e.kind())));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), static_cast<int>(mumkit::ExitCode::kUsage));
  }
}
