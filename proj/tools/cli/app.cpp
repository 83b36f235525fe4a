#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

namespace notamkit::cli {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"NOTAM extraction, retrieval and iterative refinement", "notamkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions opts;
  std::string config, out_dir;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "run configuration (key = value)");
  auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--no-kg", opts.no_kg, "skip retrieval; the generator sees no knowledge");
  app.add_flag("--no-multiview", opts.no_multiview, "single view (N = 1)");

  std::string input;
  auto* parse = app.add_subcommand("parse", "parse notices and dump their fields");
  parse->add_option("input", input, "notices (.txt blocks or .jsonl)")->required();
  auto* retrieve = app.add_subcommand("retrieve", "show the knowledge retrieved for each notice");
  retrieve->add_option("input", input)->required();
  auto* baseline = app.add_subcommand("baseline", "keyword rule baseline, no knowledge, single view");
  baseline->add_option("input", input)->required();
  auto* infer = app.add_subcommand("infer", "parse, retrieve, multiview inference");
  infer->add_option("input", input)->required();
  auto* evolve = app.add_subcommand("evolve", "run the refinement loop with the toy policy");
  evolve->add_flag("--fresh", opts.fresh, "discard an existing run in the output directory");
  int stop_after = -1;
  evolve->add_option("--stop-after", stop_after, "stop after this many iterations (resumable)");
  std::vector<std::string> runs;
  auto* report = app.add_subcommand("report", "accuracy and complexity tables for run directories");
  report->add_option("runs", runs, "run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  if (!config.empty()) opts.config = config;
  if (!out_dir.empty()) opts.out = out_dir;
  if (*seed_opt) opts.seed = seed;
  if (stop_after >= 0) opts.stop_after = stop_after;

  try {
    if (*parse) return cmd_parse(opts, input, out, err);
    if (*retrieve) return cmd_retrieve(opts, input, out, err);
    if (*baseline) return cmd_baseline(opts, input, out, err);
    if (*infer) return cmd_infer(opts, input, out, err);
    if (*evolve) return cmd_evolve(opts, out, err);
    std::vector<fs::path> dirs(runs.begin(), runs.end());
    return cmd_report(opts, dirs, out, err);
  } catch (const MultiviewDegraded& e) {
    err << "error: " << e.what() << "\n";
    return kDegraded;
  } catch (const GatewayError& e) {
    err << "error: " << e.what() << "\n";
    return kDegraded;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const SchemaMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace notamkit::cli
