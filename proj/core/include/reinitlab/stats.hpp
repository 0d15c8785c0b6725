#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace reinitlab {

/// One-sided exact sign test: p = sum_{k=wins..trials} C(trials, k) / 2^trials,
/// computed in exact integer arithmetic (128-bit) for trials <= 128 and in
/// long-double log space beyond. trials must be >= 1.
double exact_binomial_test(int wins, int trials);

/// Step-down multiple-comparison correction: sort p ascending, reject while
/// p_(i) <= alpha / (m - i + 1) (1-based), stop at the first failure. Flags
/// are returned in the original order.
std::vector<bool> holm_stepdown(std::span<const double> p_values, double alpha = 0.05);

/// One experimental setting: descriptive features plus mean test accuracy per
/// method. Feature fields unused by a given study keep their defaults.
struct SettingRow {
  std::string dataset;
  std::string arch;
  double dropout = 0.0;
  bool augment = false;
  std::string initializer;
  double train_size = 0.0;
  double n_classes = 0.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double penalty = 0.0;
  double budget = 0.0;
  std::map<std::string, double> acc;  // method -> test accuracy in [0, 1]
};

struct OutcomeGrid {
  std::vector<SettingRow> rows;
  std::vector<std::string> methods;
};

/// One ordered comparison: does the column method beat the row method?
struct PairCell {
  std::string row;
  std::string col;
  std::string arch;
  int wins = 0;    // settings where col strictly beats row
  int losses = 0;  // settings where row strictly beats col
  int ties = 0;
  double p = std::numeric_limits<double>::quiet_NaN();
  bool star = false;         // significant at raw alpha
  bool circle = false;       // still significant after the step-down correction
  bool no_evidence = false;  // every shared setting tied, test undefined
};

struct SignificanceTable {
  std::vector<PairCell> cells;
  double alpha = 0.05;
};

/// Sign tests for every ordered method pair, ties dropped. The correction
/// family is the set of defined pairs within one architecture's table.
SignificanceTable pairwise_significance(const OutcomeGrid& grid, double alpha = 0.05);

std::string significance_csv(const SignificanceTable& table);

}  // namespace reinitlab
