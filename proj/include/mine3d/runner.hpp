#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mine3d/config.hpp"

namespace mine3d::cli {

namespace fs = std::filesystem;

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

struct MineOptions {
  fs::path dataset_dir;
  fs::path config_path;  // empty: built-in defaults
  fs::path out_dir;
  std::optional<int> jobs;
  std::optional<OrientationMode> orientation;
};

struct EvalOptions {
  fs::path pred_dir;
  fs::path gt_dir;
  fs::path config_path;  // empty: built-in defaults
  fs::path out_dir;
  fs::path dataset_dir;  // optional; supplies per-frame ego poses
};

struct SynthOptions {
  fs::path spec_path;  // empty: built-in default spec
  fs::path out_dir;
  std::optional<uint64_t> seed;
};

// Mines every frame of a dataset into out_dir/<frame>.jsonl plus a
// manifest.json with the resolved config, its hash, and label counts.
// Reruns overwrite; output bytes do not depend on the worker count.
int cmd_mine(const MineOptions& opts);

// Evaluates prediction labels against ground-truth labels; writes
// report.json and report.csv under out_dir and prints the aggregate line.
int cmd_eval(const EvalOptions& opts);

// Generates a synthetic dataset (map, frames, ground-truth labels).
int cmd_synth(const SynthOptions& opts);

}  // namespace mine3d::cli
