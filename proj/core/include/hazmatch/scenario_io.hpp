#pragma once

#include <array>
#include <string>
#include <vector>

#include "hazmatch/simulation.hpp"

namespace hazmatch {

// Scenario grids expand over confounding level, beta0 and PS specification.
struct PlanCell {
  std::string confounding;  // weak, medium, strong, or custom
  ScenarioConfig cfg;
};

// theta triplet for a named confounding level
std::array<double, 3> confounding_theta(const std::string& level);

// Reads a scenario description. Two formats, chosen by extension:
// *.json (object with the keys below) or flat "key = value" lines where
// lists are written [a, b, c] and '#' starts a comment.
//
//   n, reps, B, seed, threads    integers
//   beta0                        number or list
//   confounding                  weak|medium|strong or list
//   theta                        explicit [t0, t1, t2] (excludes confounding)
//   ps_spec                      correct|sqrt or list
//   alpha, lambda0, c_max        numbers
//   eta, lambda_cov              [a, b]
//   censor_target                [low, high]
std::vector<PlanCell> load_scenario_file(const std::string& path);

// Table-2-shaped CSV: per-estimator rows, Bias/Var/VE/CR column group per
// cell, cells labelled by confounding level.
std::string metrics_to_csv(const std::vector<PlanCell>& plan,
                           const std::vector<ScenarioResult>& results);

// Full machine-readable log: resolved config, per-cell rows, per-replicate
// diagnostics, failure counts.
std::string results_to_json(const std::vector<PlanCell>& plan,
                            const std::vector<ScenarioResult>& results,
                            const std::string& version);

}  // namespace hazmatch
