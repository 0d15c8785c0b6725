#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reinitlab/records.hpp"
#include "reinitlab/reinit.hpp"
#include "reinitlab/synthetic.hpp"

namespace reinitlab {

struct DataSpec {
  std::string kind = "synthetic";  // synthetic | synthetic_images
  int n_train = 256;
  int n_test = 2048;
  int dim = 128;
  int hw = 16;
  int channels = 3;
  int patch = 4;
};

struct MatrixSpec {
  std::vector<std::string> methods;
  std::vector<double> alphas{1.0};
  std::vector<double> penalties{0.0};
  std::vector<uint64_t> seeds;
  uint64_t master_seed = 1;
};

struct OutputSpec {
  bool save_params = true;
};

/// Parsed experiment configuration: one JSON document with sections
/// {arch, data, train, plan, matrix, output}.
struct MatrixConfig {
  ArchPreset arch;
  DataSpec data;
  TrainConfig train;
  ReinitPlan plan;  // method comes from matrix.methods; steps from plan/budgets
  MatrixSpec matrix;
  OutputSpec output;
};

/// Parses and validates; throws ConfigError with field diagnostics.
MatrixConfig parse_matrix_config(const std::string& json_text);
MatrixConfig load_matrix_config(const std::string& path);

/// Default worker count: REINITLAB_WORKERS, else hardware concurrency.
int default_workers();

/// Executes methods x alphas x penalties x seeds, workers in parallel, one
/// deterministic record per run (failures captured in the record, the matrix
/// continues). Records come back sorted by run_id.
std::vector<RunRecord> run_matrix(const MatrixConfig& config, int workers,
                                  const std::function<void(const RunRecord&)>& on_done = {});

/// run_matrix at each steps-per-round budget, concatenated.
std::vector<RunRecord> compute_sweep(const MatrixConfig& config, const std::vector<int>& budgets,
                                     int workers,
                                     const std::function<void(const RunRecord&)>& on_done = {});

/// Writes out_dir/results.csv and out_dir/runs/<run_id>.json.
void persist_records(const std::string& out_dir, const std::vector<RunRecord>& records);
/// Loads every record from out_dir/runs/.
std::vector<RunRecord> load_records(const std::string& out_dir);

/// Regenerates the run's datasets from its recorded recipe.
std::pair<Dataset, Dataset> rebuild_data(const RunRecord& rec);
/// Rebuilds the trained network from a record carrying final parameters.
Network rebuild_network(const RunRecord& rec);

}  // namespace reinitlab
