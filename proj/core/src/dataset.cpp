#include "hazmatch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hazmatch {

Dataset::Dataset(std::vector<Subject> subjects, std::optional<double> tau)
    : subjects_(std::move(subjects)) {
  if (subjects_.size() < 2) {
    throw std::invalid_argument("dataset needs at least 2 subjects");
  }
  dim_ = static_cast<int>(subjects_.front().x.size());
  double max_u = 0;
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    const Subject& s = subjects_[i];
    const std::string at = " (subject index " + std::to_string(i) + ")";
    if (static_cast<int>(s.x.size()) != dim_) {
      throw std::invalid_argument("covariate length differs across subjects" + at);
    }
    for (double v : s.x) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite covariate" + at);
    }
    if (s.w != 0 && s.w != 1) throw std::invalid_argument("treatment not binary" + at);
    if (!(s.u > 0) || !std::isfinite(s.u)) {
      throw std::invalid_argument("follow-up time must be positive" + at);
    }
    if (s.delta != 0 && s.delta != 1) {
      throw std::invalid_argument("event indicator not in {0,1}" + at);
    }
    n_treated_ += s.w;
    max_u = std::max(max_u, s.u);
  }
  if (n_treated_ == 0 || n_treated_ == size()) {
    throw std::invalid_argument("both treatment arms must be non-empty");
  }
  tau_ = tau.value_or(max_u);
  if (tau_ < max_u && !tau.has_value()) {
    throw std::logic_error("tau default below max follow-up");
  }
  if (!(tau_ > 0)) throw std::invalid_argument("tau must be positive");
}

int Dataset::risk_set_size(double t, std::optional<int> arm) const {
  if (t < 0) throw std::invalid_argument("risk_set_size: t must be >= 0");
  int count = 0;
  for (const Subject& s : subjects_) {
    if (s.u >= t && (!arm.has_value() || s.w == *arm)) ++count;
  }
  return count;
}

std::vector<double> Dataset::times() const {
  std::vector<double> out(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) out[i] = subjects_[i].u;
  return out;
}

std::vector<int> Dataset::events() const {
  std::vector<int> out(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) out[i] = subjects_[i].delta;
  return out;
}

std::vector<int> Dataset::treatments() const {
  std::vector<int> out(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) out[i] = subjects_[i].w;
  return out;
}

std::vector<double> Dataset::covariate_column(int j) const {
  if (j < 0 || j >= dim_) throw std::out_of_range("covariate_column: bad index");
  std::vector<double> out(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    out[i] = subjects_[i].x[static_cast<std::size_t>(j)];
  }
  return out;
}

std::pair<Dataset, TrimReport> trim(const Dataset& ds, const std::vector<double>& scores,
                                    double low, double high) {
  if (!(0 <= low && low < high && high <= 1)) {
    throw std::invalid_argument("trim: need 0 <= low < high <= 1");
  }
  if (static_cast<int>(scores.size()) != ds.size()) {
    throw std::invalid_argument("trim: scores not aligned with subjects");
  }
  TrimReport report;
  report.threshold_low = low;
  report.threshold_high = high;
  std::vector<Subject> kept;
  kept.reserve(scores.size());
  for (int i = 0; i < ds.size(); ++i) {
    if (scores[static_cast<std::size_t>(i)] >= low && scores[static_cast<std::size_t>(i)] <= high) {
      kept.push_back(ds[i]);
      report.kept_ids.push_back(ds[i].id);
    } else {
      report.dropped_ids.push_back(ds[i].id);
    }
  }
  int n1 = 0;
  for (const Subject& s : kept) n1 += s.w;
  if (kept.size() < 2 || n1 == 0 || n1 == static_cast<int>(kept.size())) {
    throw std::runtime_error(
        "trim: a treatment arm was emptied; widen the trimming bounds");
  }
  return {Dataset(std::move(kept)), std::move(report)};
}

}  // namespace hazmatch
