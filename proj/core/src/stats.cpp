#include "reinitlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "reinitlab/errors.hpp"

namespace reinitlab {

double exact_binomial_test(int wins, int trials) {
  if (trials < 1) {
    throw ConfigError("exact_binomial_test: trials must be >= 1");
  }
  if (wins < 0 || wins > trials) {
    throw ConfigError("exact_binomial_test: wins out of range");
  }
  if (trials <= 128) {
    // Pascal row in 128-bit integers; C(128, 64) still fits comfortably.
    std::vector<unsigned __int128> row(static_cast<size_t>(trials) + 1, 0);
    row[0] = 1;
    for (int n = 1; n <= trials; ++n) {
      for (int k = n; k >= 1; --k) {
        row[static_cast<size_t>(k)] += row[static_cast<size_t>(k) - 1];
      }
    }
    unsigned __int128 tail = 0;
    for (int k = wins; k <= trials; ++k) {
      tail += row[static_cast<size_t>(k)];
    }
    const auto hi = static_cast<uint64_t>(tail >> 64);
    const auto lo = static_cast<uint64_t>(tail);
    const long double num =
        std::ldexp(static_cast<long double>(hi), 64) + static_cast<long double>(lo);
    return static_cast<double>(num * std::exp2(-static_cast<long double>(trials)));
  }
  // log-space fallback for very large families
  long double log_half = -static_cast<long double>(trials) * std::log(2.0L);
  long double acc = 0.0L;
  for (int k = wins; k <= trials; ++k) {
    const long double logc = std::lgammal(trials + 1.0L) - std::lgammal(k + 1.0L) -
                             std::lgammal(trials - k + 1.0L);
    acc += std::expl(logc + log_half);
  }
  return static_cast<double>(std::min(acc, 1.0L));
}

std::vector<bool> holm_stepdown(std::span<const double> p_values, double alpha) {
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("holm_stepdown: p-values must lie in [0, 1]");
    }
  }
  const size_t m = p_values.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return p_values[a] < p_values[b]; });
  std::vector<bool> reject(m, false);
  for (size_t i = 0; i < m; ++i) {
    const double threshold = alpha / static_cast<double>(m - i);
    if (p_values[order[i]] <= threshold) {
      reject[order[i]] = true;
    } else {
      break;
    }
  }
  return reject;
}

SignificanceTable pairwise_significance(const OutcomeGrid& grid, double alpha) {
  SignificanceTable table;
  table.alpha = alpha;

  std::set<std::string> archs;
  for (const auto& row : grid.rows) {
    archs.insert(row.arch);
  }
  for (const std::string& arch : archs) {
    std::vector<PairCell> cells;
    for (const std::string& row_m : grid.methods) {
      for (const std::string& col_m : grid.methods) {
        if (row_m == col_m) continue;
        PairCell cell;
        cell.row = row_m;
        cell.col = col_m;
        cell.arch = arch;
        for (const auto& setting : grid.rows) {
          if (setting.arch != arch) continue;
          const auto ri = setting.acc.find(row_m);
          const auto ci = setting.acc.find(col_m);
          if (ri == setting.acc.end() || ci == setting.acc.end()) continue;
          if (ci->second > ri->second) {
            ++cell.wins;
          } else if (ci->second < ri->second) {
            ++cell.losses;
          } else {
            ++cell.ties;
          }
        }
        const int trials = cell.wins + cell.losses;
        if (trials == 0) {
          cell.no_evidence = true;
        } else {
          cell.p = exact_binomial_test(cell.wins, trials);
          cell.star = cell.p <= alpha;
        }
        cells.push_back(std::move(cell));
      }
    }
    // correction family: the defined pairs of this architecture's table
    std::vector<double> ps;
    std::vector<size_t> defined;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (!cells[i].no_evidence) {
        defined.push_back(i);
        ps.push_back(cells[i].p);
      }
    }
    const auto rejected = holm_stepdown(ps, alpha);
    for (size_t i = 0; i < defined.size(); ++i) {
      cells[defined[i]].circle = rejected[i];
    }
    for (auto& c : cells) {
      table.cells.push_back(std::move(c));
    }
  }
  return table;
}

std::string significance_csv(const SignificanceTable& table) {
  std::ostringstream os;
  os << "pair,arch,wins,losses,ties,trials,p,star,circle\n";
  for (const auto& c : table.cells) {
    // "A>B": evidence that column method A outperforms row method B
    os << c.col << '>' << c.row << ',' << c.arch << ',' << c.wins << ',' << c.losses << ','
       << c.ties << ',' << c.wins + c.losses << ',';
    if (c.no_evidence) {
      os << "";
    } else {
      os << c.p;
    }
    os << ',' << (c.star ? 1 : 0) << ',' << (c.circle ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace reinitlab
