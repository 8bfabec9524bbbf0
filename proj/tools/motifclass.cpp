// Command-line front end: stage runs, ablation sweeps and the demo generator.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "motifclass.hpp"

namespace mc = motifclass;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> ablation;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "pipeline config (JSON)")->required();
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--workers", o.workers, "worker threads");
  cmd->add_option("--ablation", o.ablation,
                  "full | no-higher-order | no-specificity | retrieval-only-x | "
                  "retrieval-only-2x | generation-only-x | generation-only-2x");
}

mc::PipelineConfig load(const Overrides& o) {
  auto cfg = mc::PipelineConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.ablation) cfg.ablation = mc::parse_ablation(*o.ablation);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metadata-aware weakly supervised text classification"};
  app.require_subcommand(1);

  Overrides o;
  std::string stage_name;
  for (auto s : {mc::Stage::Ingest, mc::Stage::Embed, mc::Stage::Select, mc::Stage::Pseudo,
                 mc::Stage::Train, mc::Stage::Eval, mc::Stage::All}) {
    auto* cmd = app.add_subcommand(
        mc::to_string(s), s == mc::Stage::All ? std::string("run every stage in order")
                                              : "run the " + mc::to_string(s) + " stage");
    add_common(cmd, o);
    cmd->callback([&stage_name, s] { stage_name = mc::to_string(s); });
  }

  auto* sweep = app.add_subcommand("sweep", "run every ablation variant and tabulate F1");
  add_common(sweep, o);

  std::string out_dir;
  std::uint64_t synth_seed = 1;
  int docs_per_category = 400;
  auto* synth = app.add_subcommand("synth", "write the planted demo corpus and a config");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--docs-per-category", docs_per_category, "documents per category")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      mc::synthetic::AcademicOptions opts;
      opts.docs_per_category = docs_per_category;
      auto path = mc::write_demo(out_dir, synth_seed, opts);
      std::cout << "wrote " << path.string() << '\n';
      return 0;
    }
    auto cfg = load(o);
    if (sweep->parsed()) {
      auto rows = mc::run_ablation_sweep(cfg);
      std::filesystem::create_directories(cfg.workdir);
      const auto path = cfg.workdir / "sweep.md";
      std::ofstream out(path);
      mc::write_sweep_markdown(rows, cfg.pseudo, out);
      mc::write_sweep_markdown(rows, cfg.pseudo, std::cout);
      return 0;
    }
    mc::Pipeline pipeline(cfg);
    pipeline.run(mc::parse_stage(stage_name));
    return 0;
  } catch (const mc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const mc::MissingArtifactError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
