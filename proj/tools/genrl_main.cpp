#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "genrl/cli/commands.hpp"
#include "genrl/error.hpp"
#include "genrl/io/manifest.hpp"

namespace {

using genrl::cli::CommandArgs;
using genrl::io::RunManifest;

using CommandFn = std::function<RunManifest(const CommandArgs&)>;

void add_common(CLI::App* cmd, CommandArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file")->required();
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&args](std::uint64_t v) { args.seed = v; }, "override the config seed");
  cmd->add_option("--out", args.out_dir, "output directory (created if absent)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genrl: reproducible pipelines from motor demonstrations to latent-action policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", genrl::io::kVersion);

  CommandArgs args;
  CommandFn selected;
  const auto add_command = [&](const char* name, const char* help, CommandFn fn,
                               bool metrics_flag = false, bool jobs_flag = false) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, args);
    if (metrics_flag)
      cmd->add_option("--metrics", args.metrics, "metric subset: pr, dipr, dwpr, l3")
          ->delimiter(',');
    if (jobs_flag) cmd->add_option("--jobs", args.jobs, "concurrent grid trainings");
    cmd->callback([&selected, fn] { selected = fn; });
    return cmd;
  };

  add_command("gen-data", "generate a demonstration dataset", genrl::cli::run_gen_data);
  add_command("train-model", "train generative models on a dataset", genrl::cli::run_train_model,
              false, true);
  add_command("eval", "score models with the metric suite", genrl::cli::run_eval, true);
  add_command("train-policy", "run EM policy training against a model",
              genrl::cli::run_train_policy);
  add_command("correlate", "correlate metric reports with policy labels",
              genrl::cli::run_correlate);
  add_command("report", "summarize pipeline artifacts", genrl::cli::run_report);

  try {
    app.parse(argc, argv);
    const RunManifest manifest = selected(args);
    std::cout << manifest.command << ": wrote " << manifest.outputs.size() + 1
              << " files to " << args.out_dir << " (manifest " << manifest.manifest_id() << ")\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const genrl::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const genrl::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const genrl::SingularMatrixError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const genrl::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
