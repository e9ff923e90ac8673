#pragma once

#include <vector>

#include "hazmatch/dataset.hpp"
#include "hazmatch/rng.hpp"

namespace hazmatch {

// Nearest-neighbor matching with replacement, one match per subject.
// match_index[i] is the closest opposite-arm subject; k[i] counts how often
// i itself serves as a match; weight[i] = 1 + k[i].
struct MatchResult {
  std::vector<int> match_index;
  std::vector<int> k;
  std::vector<double> weight;
};

// Matches each subject to the opposite-arm subject with the closest value.
// Distance ties break to the lowest subject index. O(n log n).
MatchResult match_on_scalar(const std::vector<double>& values, const std::vector<int>& w);

// Secondary matching on the full covariate vector (Euclidean distance),
// same tie rule. Brute force; the simulation designs keep d small.
MatchResult match_on_covariates(const Dataset& ds);

// Match counts under both treatment roles. Own-arm counts are observed;
// opposite-arm counts are drawn from the empirical distribution of counts
// in the same propensity-score quintile of the opposite arm.
struct KImputation {
  std::vector<int> k0;        // khat_i(0)
  std::vector<int> k1;        // khat_i(1)
  std::vector<int> quintile;  // 1..5 by score rank
};

KImputation impute_k(const MatchResult& mr, const std::vector<double>& scores,
                     const std::vector<int>& w, RngStream& rng);

// One row of the fully imputed dataset: subject `index` under treatment
// role `omega`, with the outcome taken from `source` (== index when
// omega is the observed arm).
struct ImputedRow {
  int index;
  int omega;
  int source;
  double u;
  int delta;
};

// The 2n-row imputed dataset; aggregating it with weight one is identical
// to aggregating the observed data with weights 1 + k_i.
std::vector<ImputedRow> imputed_dataset_view(const Dataset& ds, const MatchResult& mr);

}  // namespace hazmatch
