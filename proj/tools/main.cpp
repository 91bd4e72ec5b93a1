#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mine3d/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "mine3d: mines amodal 3D cuboid labels from 2D instance masks, LiDAR "
      "sweeps, and HD-map priors; evaluates them with detection metrics; "
      "generates synthetic benchmark datasets"};
  app.require_subcommand(1);

  mine3d::cli::MineOptions mine;
  std::string mine_orientation;
  int mine_jobs = 0;
  CLI::App* cmd_mine = app.add_subcommand("mine", "mine labels from a dataset");
  cmd_mine->add_option("--dataset", mine.dataset_dir, "dataset directory")
      ->required();
  cmd_mine->add_option("--config", mine.config_path, "run config JSON");
  cmd_mine->add_option("--out", mine.out_dir, "output directory")->required();
  cmd_mine->add_option("--jobs", mine_jobs, "worker threads (default: config)");
  cmd_mine->add_option("--orientation-mode", mine_orientation,
                       "force orientation mode for all classes")
      ->check(CLI::IsMember({"map", "calipers"}));

  mine3d::cli::EvalOptions eval;
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "evaluate predictions against ground truth");
  cmd_eval->add_option("--pred", eval.pred_dir, "prediction label directory")
      ->required();
  cmd_eval->add_option("--gt", eval.gt_dir, "ground-truth label directory")
      ->required();
  cmd_eval->add_option("--config", eval.config_path, "run config JSON");
  cmd_eval->add_option("--out", eval.out_dir, "report output directory")
      ->required();
  cmd_eval->add_option("--dataset", eval.dataset_dir,
                       "dataset directory supplying per-frame ego poses");

  mine3d::cli::SynthOptions synth;
  uint64_t synth_seed = 0;
  CLI::App* cmd_synth =
      app.add_subcommand("synth", "generate a synthetic dataset");
  cmd_synth->add_option("--spec", synth.spec_path, "scene spec JSON");
  cmd_synth->add_option("--out", synth.out_dir, "dataset output directory")
      ->required();
  CLI::Option* seed_opt =
      cmd_synth->add_option("--seed", synth_seed, "override the spec seed");

  CLI11_PARSE(app, argc, argv);

  if (cmd_mine->parsed()) {
    if (mine_jobs > 0) mine.jobs = mine_jobs;
    if (!mine_orientation.empty())
      mine.orientation = mine3d::orientation_mode_from_name(mine_orientation);
    return mine3d::cli::cmd_mine(mine);
  }
  if (cmd_eval->parsed()) return mine3d::cli::cmd_eval(eval);
  if (cmd_synth->parsed()) {
    if (seed_opt->count() > 0) synth.seed = synth_seed;
    return mine3d::cli::cmd_synth(synth);
  }
  return mine3d::cli::kExitInputError;
}
