// Command-line entry point: renewal <dual|evolve|oracle|doeblin|converge|verify> [flags]

#include <iostream>

#include "CLI11.hpp"
#include "renewal/harness.hpp"

int main(int argc, char** argv) {
  renewal::CommandOptions opt;
  CLI::App app{"Measure solutions of the conservative renewal equation"};
  app.require_subcommand(1);

  auto* dual = app.add_subcommand("dual", "Evolve a test function with the dual semigroup");
  dual->add_option("--rate", opt.rate_path, "Rate config (JSON)")->required();
  dual->add_option("--f0", opt.f0, "Test function expression in a")->required();
  dual->add_option("--t", opt.t, "Time")->required();
  dual->add_option("--out", opt.out, "Output CSV (age,value)");

  auto* evolve = app.add_subcommand("evolve", "Evolve an initial measure");
  evolve->add_option("--rate", opt.rate_path, "Rate config (JSON)")->required();
  evolve->add_option("--init", opt.init_path, "Initial measure config (JSON)")->required();
  evolve->add_option("--t", opt.t, "Time")->required();
  evolve->add_option("--snapshots", opt.snapshots, "Write snapshots every given time step");
  evolve->add_option("--out", opt.out, "Output CSV (kind,age,value)");

  auto* oracle = app.add_subcommand("oracle", "Monte Carlo simulation of the age process");
  oracle->add_option("--rate", opt.rate_path, "Rate config (JSON)")->required();
  oracle->add_option("--init", opt.init_path, "Initial probability measure config (JSON)")->required();
  oracle->add_option("--t", opt.t, "Time")->required();
  oracle->add_option("--n", opt.n, "Number of paths");
  oracle->add_option("--seed", opt.seed, "Random seed");
  oracle->add_option("--out", opt.out, "Output CSV (one final age per row)");

  auto* doeblin = app.add_subcommand("doeblin", "Print the Doeblin certificate of a rate");
  doeblin->add_option("--rate", opt.rate_path, "Rate config (JSON)")->required();
  auto* eta = doeblin->add_option("--eta", opt.eta, "Width of the minorizing window");
  doeblin->add_flag("--optimize", opt.optimize, "Maximise the contraction rate over eta")->excludes(eta);
  doeblin->add_option("--out", opt.out, "Output CSV");

  auto* converge = app.add_subcommand("converge", "Total-variation decay between two measures");
  converge->add_option("--rate", opt.rate_path, "Rate config (JSON)")->required();
  converge->add_option("--mu1", opt.mu1_path, "First measure config (JSON)")->required();
  converge->add_option("--mu2", opt.mu2_path, "Second measure config (JSON)")->required();
  converge->add_option("--times", opt.times, "Comma-separated times")->required()->delimiter(',');
  converge->add_option("--eta", opt.eta, "Certificate window (default: optimised)");
  converge->add_option("--out", opt.out, "Output CSV (t,tv,bound)");

  auto* verify = app.add_subcommand("verify", "Run the invariant suite on a scenario");
  verify->add_option("--config", opt.config_path, "Scenario config (JSON)")->required();
  verify->add_option("--t", opt.t, "Time for the per-function checks");
  verify->add_option("--out", opt.out, "Output CSV (check,value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), renewal::kConfigError);
  }
  opt.command = app.get_subcommands().front()->get_name();
  return renewal::run(opt);
}
