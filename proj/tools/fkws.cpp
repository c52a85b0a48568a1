// fkws: synth | features | train-domain | train-kws | score | evaluate

#include <fkws/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  CLI::App app{"Far-field keyword spotting pipeline"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::optional<std::filesystem::path> config;
  fkws::RunFlags flags;
  std::uint64_t seed = 0;
  std::string variant, strategy, out;
  double lambda = 0.0;

  app.add_option("--config", config, "INI experiment config")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override run.seed");
  auto* variant_opt =
      app.add_option("--variant", variant, "baseline | emb1 | emb2 | mtl")
          ->check(CLI::IsMember({"baseline", "emb1", "emb2", "mtl"}));
  auto* strategy_opt =
      app.add_option("--strategy", strategy, "CORAL strategy s1..s5")->check(CLI::IsMember({"s1", "s2", "s3", "s4", "s5"}));
  auto* lambda_opt = app.add_option("--lambda", lambda, "Loss weight")->check(CLI::NonNegativeNumber);
  auto* out_opt = app.add_option("--out", out, "Run directory (paths.root)");
  app.add_flag("--dump-scores", flags.dump_scores, "Write per-clip frame,h CSVs");

  const std::map<std::string, std::string> about{
      {"synth", "Generate the synthetic corpus and manifests"},
      {"features", "Compute log-mel features for both splits"},
      {"train-domain", "Train the frozen LSTM domain classifier"},
      {"train-kws", "Train the keyword CNN"},
      {"score", "Score the test split into confidence traces"},
      {"evaluate", "DET sweep per domain and FR at the target FA/h"}};
  for (const std::string& name : fkws::subcommands()) app.add_subcommand(name, about.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return fkws::exit_code_for("usage");
  }

  if (*seed_opt) flags.seed = seed;
  if (*variant_opt) flags.variant = variant;
  if (*strategy_opt) flags.strategy = strategy;
  if (*lambda_opt) flags.lambda = lambda;
  if (*out_opt) flags.out = out;
  return fkws::run_cli(app.get_subcommands().front()->get_name(), config, flags, std::cout, std::cerr);
}
