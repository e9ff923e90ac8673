#include "hazmatch/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hazmatch {

namespace {

struct Entry {
  double value;
  int index;
};

// Sorted-by-(value, index) pool of one arm. Lookup returns the nearest
// entry, breaking distance ties to the lowest index; with duplicated
// values the first entry of the run already has the lowest index.
class ScalarPool {
 public:
  explicit ScalarPool(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
      if (a.value != b.value) return a.value < b.value;
      return a.index < b.index;
    });
  }

  int nearest(double v) const {
    const auto cmp = [](const Entry& e, double x) { return e.value < x; };
    const auto lo = std::lower_bound(entries_.begin(), entries_.end(), v, cmp);

    const Entry* right = lo == entries_.end() ? nullptr : &*lo;
    const Entry* left = lo == entries_.begin() ? nullptr : &*(lo - 1);
    double dl = left ? v - left->value : std::numeric_limits<double>::infinity();
    double dr = right ? right->value - v : std::numeric_limits<double>::infinity();

    if (dl < dr) return run_start(left->value);
    if (dr < dl) return run_start(right->value);
    // equal distance from two candidate values: lowest index wins
    return std::min(run_start(left->value), run_start(right->value));
  }

 private:
  int run_start(double value) const {
    const auto cmp = [](const Entry& e, double x) { return e.value < x; };
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), value, cmp);
    return it->index;
  }

  std::vector<Entry> entries_;
};

void check_arms(const std::vector<int>& w) {
  int n1 = 0;
  for (int v : w) {
    if (v != 0 && v != 1) throw std::invalid_argument("matching: treatment must be 0/1");
    n1 += v;
  }
  if (n1 == 0 || n1 == static_cast<int>(w.size())) {
    throw std::invalid_argument("matching: both arms must be non-empty");
  }
}

MatchResult tally(std::vector<int> match_index) {
  MatchResult mr;
  const std::size_t n = match_index.size();
  mr.k.assign(n, 0);
  mr.weight.assign(n, 1.0);
  for (int j : match_index) ++mr.k[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < n; ++i) mr.weight[i] += mr.k[i];
  mr.match_index = std::move(match_index);
  return mr;
}

}  // namespace

MatchResult match_on_scalar(const std::vector<double>& values, const std::vector<int>& w) {
  if (values.size() != w.size()) throw std::invalid_argument("matching: size mismatch");
  check_arms(w);
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("matching: values must be finite");
  }

  std::vector<Entry> arm0, arm1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    (w[i] == 0 ? arm0 : arm1).push_back({values[i], static_cast<int>(i)});
  }
  const ScalarPool pool0(std::move(arm0));
  const ScalarPool pool1(std::move(arm1));

  std::vector<int> match_index(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    match_index[i] = (w[i] == 1 ? pool0 : pool1).nearest(values[i]);
  }
  return tally(std::move(match_index));
}

MatchResult match_on_covariates(const Dataset& ds) {
  const int n = ds.size();
  std::vector<int> match_index(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Subject& si = ds[i];
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j < n; ++j) {
      if (ds[j].w == si.w) continue;
      double d2 = 0;
      for (std::size_t c = 0; c < si.x.size(); ++c) {
        const double diff = ds[j].x[c] - si.x[c];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    match_index[static_cast<std::size_t>(i)] = best_j;
  }
  return tally(std::move(match_index));
}

KImputation impute_k(const MatchResult& mr, const std::vector<double>& scores,
                     const std::vector<int>& w, RngStream& rng) {
  const std::size_t n = scores.size();
  if (w.size() != n || mr.k.size() != n) throw std::invalid_argument("impute_k: size mismatch");
  check_arms(w);

  // rank-based quintiles over the whole sample, score ties broken by index
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
      return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  KImputation imp;
  imp.quintile.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    imp.quintile[static_cast<std::size_t>(order[r])] = static_cast<int>(r * 5 / n) + 1;
  }

  // per (quintile, arm) pools of observed match counts
  std::vector<std::vector<int>> pool(10);
  for (std::size_t i = 0; i < n; ++i) {
    pool[static_cast<std::size_t>((imp.quintile[i] - 1) * 2 + w[i])].push_back(mr.k[i]);
  }

  const auto draw_from = [&](int quintile, int arm) {
    // widen to adjacent quintiles when the bin has no opposite-arm member
    for (int width = 0; width < 5; ++width) {
      std::vector<int> merged;
      for (int q = quintile - width; q <= quintile + width; ++q) {
        if (q < 1 || q > 5) continue;
        const auto& bin = pool[static_cast<std::size_t>((q - 1) * 2 + arm)];
        merged.insert(merged.end(), bin.begin(), bin.end());
      }
      if (!merged.empty()) {
        return merged[static_cast<std::size_t>(rng.uniform_index(merged.size()))];
      }
    }
    throw std::logic_error("impute_k: no donors in any quintile");  // unreachable: arm non-empty
  };

  imp.k0.resize(n);
  imp.k1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0) {
      imp.k0[i] = mr.k[i];
      imp.k1[i] = draw_from(imp.quintile[i], 1);
    } else {
      imp.k1[i] = mr.k[i];
      imp.k0[i] = draw_from(imp.quintile[i], 0);
    }
  }
  return imp;
}

std::vector<ImputedRow> imputed_dataset_view(const Dataset& ds, const MatchResult& mr) {
  if (static_cast<int>(mr.match_index.size()) != ds.size()) {
    throw std::invalid_argument("imputed_dataset_view: match result not aligned");
  }
  std::vector<ImputedRow> rows;
  rows.reserve(static_cast<std::size_t>(2 * ds.size()));
  for (int i = 0; i < ds.size(); ++i) {
    for (int omega = 0; omega <= 1; ++omega) {
      const int src = ds[i].w == omega ? i : mr.match_index[static_cast<std::size_t>(i)];
      rows.push_back({i, omega, src, ds[src].u, ds[src].delta});
    }
  }
  return rows;
}

}  // namespace hazmatch
