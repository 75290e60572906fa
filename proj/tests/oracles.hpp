#pragma once

// Independent reference implementations used only by the tests. They share
// no code paths with the library beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "semscan/scan.hpp"

namespace semscan::oracle {

struct ScanRow {
  int center, n, w, topic;
  double count, baseline, score;
};

inline double ebp(double c, double b) { return c > b ? c * std::log(c / b) + b - c : 0.0; }

/// Quadruple loop over (center, n, W, topic); aggregates are summed location
/// by location, days oldest first. Sorted by score desc, then W, n, center,
/// topic ascending.
inline std::vector<ScanRow> brute_force_scan(const CountCube& c, const BaselineCube& b, const NeighborOrder& order,
                                             int n_max, int w_max, double floor, int t) {
  std::vector<ScanRow> rows;
  for (int center = 0; center < static_cast<int>(order.size()); ++center)
    for (int n = 1; n <= n_max; ++n)
      for (int w = 1; w <= w_max; ++w)
        for (int k = 0; k < static_cast<int>(c.topics()); ++k) {
          double cs = 0.0, bs = 0.0;
          for (int j = 0; j <= n; ++j) {
            const auto loc = static_cast<std::size_t>(order.row(static_cast<std::size_t>(center))[static_cast<std::size_t>(j)]);
            double cl = 0.0, bl = 0.0;
            for (int d = t - w + 1; d <= t; ++d) {
              cl += c.at(loc, static_cast<std::size_t>(k), d);
              bl += b.at(loc, static_cast<std::size_t>(k), d);
            }
            cs += cl;
            bs += bl;
          }
          rows.push_back({center, n, w, k, cs, bs, ebp(cs, std::max(bs, floor))});
        }
  std::sort(rows.begin(), rows.end(), [](const ScanRow& x, const ScanRow& y) {
    return std::make_tuple(-x.score, x.w, x.n, x.center, x.topic) <
           std::make_tuple(-y.score, y.w, y.n, y.center, y.topic);
  });
  return rows;
}

}  // namespace semscan::oracle
