#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reinitlab/decision_tree.hpp"
#include "reinitlab/records.hpp"
#include "reinitlab/stats.hpp"

namespace reinitlab {

/// One results.csv row; accuracy fields are absent for failed runs.
struct ResultRow {
  std::string run_id;
  std::string method;
  std::string dataset;
  std::string arch;
  uint64_t seed = 0;
  double penalty = 0.0;
  int budget = 0;
  double dropout = 0.0;
  std::string initializer;
  std::optional<double> train_acc;
  std::optional<double> val_acc;
  std::optional<double> test_acc;
  long total_steps = 0;
  double wall_ms = 0.0;
};

/// Strict reader; throws ConfigError when the header does not match the
/// published schema or the file is empty.
std::vector<ResultRow> read_results_csv(const std::string& path);

/// Settings (mean test accuracy per method over seeds) from raw rows. Rows
/// lacking a test accuracy are skipped.
OutcomeGrid grid_from_results(const std::vector<ResultRow>& rows);
OutcomeGrid grid_from_records(const std::vector<RunRecord>& records);

struct TreeInputs {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<TreeFeature> features;
  std::vector<std::string> label_names;
};

/// Feature matrix + best-method labels for the decision-tree study. Ties on
/// the best method break by the fixed method order.
TreeInputs tree_inputs_from_grid(const OutcomeGrid& grid);

/// kind: table1 | table3 | significance | tree | margins | flatness |
/// weightsize | speed. Tables print to out; artifact kinds also write their
/// CSV/text files into dir.
void report(const std::string& dir, const std::string& kind, std::ostream& out);

/// significance + tree in one pass.
void analyze(const std::string& dir, std::ostream& out);

}  // namespace reinitlab
