#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace reinitlab {

struct RoundMetrics {
  int round = 0;
  int kept_block = -1;  // -1 for methods without a kept block
  int steps = 0;
  double train_acc = 0.0;
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double test_acc = 0.0;
  /// threshold -> number of updates after which training accuracy first
  /// reached it within this round; absent when never reached.
  std::map<double, int> steps_to;
};

/// One training run: configuration identity, per-round metrics, and final
/// evaluations. The unit of persistence and of all downstream analysis.
struct RunRecord {
  std::string run_id;
  std::string method;
  std::string dataset;  // descriptor, e.g. "synth_a1.00"
  std::string arch;
  uint64_t seed = 0;      // nominal seed, as listed in the config
  uint64_t rng_seed = 0;  // derived master seed actually feeding the streams
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double penalty = 0.0;
  int budget = 0;  // steps per round
  double dropout = 0.0;
  std::string initializer = "he_normal";

  /// Enough of the data recipe to regenerate the exact datasets.
  std::string data_kind = "synthetic";
  int data_dim = 128;
  int data_n_train = 256;
  int data_n_test = 2048;
  int data_hw = 16;
  int data_channels = 3;
  int data_patch = 4;

  std::string status = "ok";
  std::string error;

  double train_acc = std::numeric_limits<double>::quiet_NaN();
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  long total_steps = 0;
  double wall_ms = 0.0;

  std::vector<RoundMetrics> rounds;

  /// Final flat parameter vector and the scalar-normalizer states, kept so
  /// the model can be rebuilt for post-hoc measurements.
  std::vector<double> final_params;
  std::vector<std::tuple<size_t, double, double>> lambda_states;

  bool ok() const noexcept { return status == "ok"; }

  std::string to_json() const;
  static RunRecord from_json(const std::string& text);
};

/// results.csv column order (fixed schema).
extern const char* const kResultsCsvHeader;

std::string results_csv_row(const RunRecord& r);

}  // namespace reinitlab
