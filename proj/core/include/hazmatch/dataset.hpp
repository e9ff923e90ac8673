#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hazmatch {

// One observational record: covariates, binary treatment, follow-up time,
// event indicator. Follow-up u = min(event time, censoring time).
struct Subject {
  int id = 0;
  std::vector<double> x;
  int w = 0;      // treatment, 0/1
  double u = 0;   // follow-up time, > 0
  int delta = 0;  // 1 = event, 0 = censored
};

// Immutable after construction; safe to share read-only across workers.
class Dataset {
 public:
  // Validates every subject; tau defaults to max observed follow-up time.
  explicit Dataset(std::vector<Subject> subjects, std::optional<double> tau = std::nullopt);

  int size() const { return static_cast<int>(subjects_.size()); }
  int dim() const { return dim_; }
  double tau() const { return tau_; }

  const Subject& operator[](int i) const { return subjects_[static_cast<std::size_t>(i)]; }
  const std::vector<Subject>& subjects() const { return subjects_; }

  int n_treated() const { return n_treated_; }
  int n_control() const { return size() - n_treated_; }

  // Observed-data counting process N_i(t) and at-risk process Y_i(t).
  int counting(int i, double t) const {
    const Subject& s = (*this)[i];
    return (s.u <= t && s.delta == 1) ? 1 : 0;
  }
  int at_risk(int i, double t) const { return (*this)[i].u >= t ? 1 : 0; }

  // Number of subjects with u_i >= t, optionally within one arm.
  int risk_set_size(double t, std::optional<int> arm = std::nullopt) const;

  // Column views (copies; datasets are small).
  std::vector<double> times() const;
  std::vector<int> events() const;
  std::vector<int> treatments() const;
  std::vector<double> covariate_column(int j) const;

 private:
  std::vector<Subject> subjects_;
  int dim_ = 0;
  int n_treated_ = 0;
  double tau_ = 0;
};

struct TrimReport {
  std::vector<int> kept_ids;
  std::vector<int> dropped_ids;
  double threshold_low = 0;
  double threshold_high = 1;
};

// Keeps subjects with low <= scores[i] <= high. Errors if an arm empties.
std::pair<Dataset, TrimReport> trim(const Dataset& ds, const std::vector<double>& scores,
                                    double low = 0.1, double high = 0.9);

// CSV ingestion. Column names resolved against the header row; covariate
// list empty means "every column not claimed by w/time/event, in header
// order". Missing or non-numeric cells are hard errors with the row number.
struct CsvSchema {
  std::string col_w = "w";
  std::string col_time = "u";
  std::string col_event = "delta";
  std::vector<std::string> covariates;  // empty = all remaining columns
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
void save_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema = {});

}  // namespace hazmatch
