#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ppsctx/ppsctx.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pre/post-selection paradoxes and noncontextuality proofs"};
  app.require_subcommand(1, 1);

  std::string builtin;
  std::string file;
  std::string pvm;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  int depth = 3;
  std::string out;

  auto add_input = [&](CLI::App* sub) {
    auto* b = sub->add_option("--builtin", builtin, "builtin scenario: three-box or clifton-rays");
    auto* f = sub->add_option("--file", file, "scenario document (JSON)");
    b->excludes(f);
    sub->add_option("--depth", depth, "closure depth for paradox detection")->check(CLI::NonNegativeNumber);
  };

  auto* abl = app.add_subcommand("abl", "ABL probability table");
  auto* detect = app.add_subcommand("detect", "detect a logical PPS paradox (exit 0 = paradox, 2 = none)");
  auto* prove = app.add_subcommand("prove", "build the constraint system and solve it (exit 0 = UNSAT)");
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo frequencies of one intermediate PVM");
  auto* graph = app.add_subcommand("graph", "orthogonality graph in DOT format");
  for (auto* sub : {abl, detect, prove, simulate, graph}) add_input(sub);
  simulate->add_option("--pvm", pvm, "PVM name")->required();
  simulate->add_option("--samples", samples, "number of runs")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "RNG seed");
  graph->add_option("--out", out, "write the DOT document here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const ppsctx::CommandResult r = ppsctx::guarded([&]() -> ppsctx::CommandResult {
    if (builtin.empty() && file.empty()) {
      throw ppsctx::Error(ppsctx::ErrorCode::InvalidArgument, "one of --builtin or --file is required");
    }
    const ppsctx::LoadedInput in =
        builtin.empty() ? ppsctx::LoadedInput{file, ppsctx::load_scenario_file(file), std::nullopt}
                        : ppsctx::load_builtin(builtin);
    if (abl->parsed()) return ppsctx::cmd_abl(in);
    if (detect->parsed()) return ppsctx::cmd_detect(in, depth);
    if (prove->parsed()) return ppsctx::cmd_prove(in, depth);
    if (simulate->parsed()) return ppsctx::cmd_simulate(in, pvm, samples, seed);
    return ppsctx::cmd_graph(in, out.empty() ? std::nullopt : std::optional<std::string>(out), depth);
  });
  std::cout << r.out;
  std::cerr << r.err;
  return r.exit_code;
}
