#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hazmatch/dataset.hpp"
#include "hazmatch/rng.hpp"

using namespace hazmatch;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = std::string("/tmp/hazmatch_test_") + name;
  std::ofstream out(path);
  out << content;
  return path;
}

Subject subj(int id, double x, int w, double u, int delta) {
  return Subject{id, {x}, w, u, delta};
}

}  // namespace

TEST_CASE("load_csv parses a 4-row file") {
  const auto path = write_temp("basic.csv",
                               "x1,w,u,delta\n"
                               "0.5,1,2.0,1\n"
                               "-0.25,0,1.5,0\n"
                               "1.0,1,0.75,1\n"
                               "2.5,0,3.0,1\n");
  const Dataset ds = load_csv(path);
  CHECK(ds.size() == 4);
  CHECK(ds.dim() == 1);
  CHECK(ds[1].x[0] == -0.25);
  CHECK(ds[1].w == 0);
  CHECK(ds[2].u == 0.75);
  CHECK(ds.tau() == 3.0);
}

TEST_CASE("load_csv rejects u <= 0, naming the row") {
  const auto path = write_temp("badu.csv",
                               "x1,w,u,delta\n"
                               "0.5,1,2.0,1\n"
                               "0.2,0,1.0,0\n"
                               "1.0,1,0,1\n");
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 3"), std::invalid_argument);
}

TEST_CASE("load_csv rejects non-binary treatment") {
  const auto path = write_temp("badw.csv",
                               "x1,w,u,delta\n"
                               "0.5,2,2.0,1\n"
                               "0.2,0,1.0,0\n");
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("treatment not binary"),
                       std::invalid_argument);
}

TEST_CASE("load_csv reports missing columns and missing cells") {
  const auto p1 = write_temp("missingcol.csv", "x1,w,u\n0.5,1,2.0\n");
  CHECK_THROWS_WITH_AS(load_csv(p1), doctest::Contains("missing column 'delta'"),
                       std::invalid_argument);
  const auto p2 = write_temp("missingcell.csv", "x1,w,u,delta\n0.5,1,,1\n0.2,0,1,0\n");
  CHECK_THROWS_WITH_AS(load_csv(p2), doctest::Contains("missing value"), std::invalid_argument);
}

TEST_CASE("trim applies closed-interval thresholds") {
  const Dataset ds({subj(0, 0.0, 1, 1.0, 1), subj(1, 0.1, 0, 2.0, 1), subj(2, 0.2, 1, 3.0, 0),
                    subj(3, 0.3, 0, 4.0, 1)});
  const std::vector<double> scores = {0.05, 0.5, 0.55, 0.95};
  const auto [kept, report] = trim(ds, scores, 0.1, 0.9);
  CHECK(report.kept_ids == std::vector<int>{1, 2});
  CHECK(report.dropped_ids == std::vector<int>{0, 3});
  CHECK(kept.size() == 2);

  // emptying an arm is an error
  const Dataset three({subj(0, 0.0, 1, 1.0, 1), subj(1, 0.1, 0, 2.0, 1),
                       subj(2, 0.2, 1, 3.0, 0)});
  CHECK_THROWS_WITH_AS(trim(three, {0.05, 0.5, 0.95}, 0.1, 0.9),
                       doctest::Contains("widen"), std::runtime_error);
}

TEST_CASE("trim with bounds (0,1) is the identity") {
  const Dataset ds({subj(0, 0.0, 1, 1.0, 1), subj(1, 0.1, 0, 2.0, 1)});
  const auto [kept, report] = trim(ds, {0.3, 0.6}, 0.0, 1.0);
  CHECK(kept.size() == 2);
  CHECK(report.dropped_ids.empty());
}

TEST_CASE("trim matches a brute-force filter on random scores") {
  RngStream rng(42);
  std::vector<Subject> subjects;
  std::vector<double> scores;
  for (int i = 0; i < 50; ++i) {
    subjects.push_back(subj(i, rng.uniform(-1, 1), i % 2, 0.5 + rng.uniform01(), i % 3 == 0));
    scores.push_back(rng.uniform01());
  }
  const Dataset ds(subjects);
  const auto [kept, report] = trim(ds, scores, 0.1, 0.9);

  std::vector<int> expected;
  for (int i = 0; i < 50; ++i) {
    if (scores[static_cast<std::size_t>(i)] >= 0.1 && scores[static_cast<std::size_t>(i)] <= 0.9) {
      expected.push_back(i);
    }
  }
  CHECK(report.kept_ids == expected);

  // idempotence: trimming the kept set again with aligned scores drops nothing
  std::vector<double> kept_scores;
  for (int id : report.kept_ids) kept_scores.push_back(scores[static_cast<std::size_t>(id)]);
  const auto [again, report2] = trim(kept, kept_scores, 0.1, 0.9);
  CHECK(report2.dropped_ids.empty());
  CHECK(again.size() == kept.size());
}

TEST_CASE("risk_set_size counts Y_i(t)") {
  const Dataset ds({subj(0, 0, 1, 1.0, 1), subj(1, 0, 0, 2.0, 0), subj(2, 0, 1, 3.0, 1),
                    subj(3, 0, 0, 4.0, 1), subj(4, 0, 1, 5.0, 0)});
  CHECK(ds.risk_set_size(0.0) == 5);
  CHECK(ds.risk_set_size(6.0) == 0);
  CHECK(ds.risk_set_size(3.0) == 3);       // u >= 3: subjects 2, 3, 4
  CHECK(ds.risk_set_size(3.0, 1) == 2);    // treated among them
  CHECK(ds.risk_set_size(2.0, 0) == 2);
  CHECK_THROWS_AS(ds.risk_set_size(-1.0), std::invalid_argument);
}

TEST_CASE("counting process is a single unit jump consistent with at-risk") {
  RngStream rng(9);
  std::vector<Subject> subjects;
  for (int i = 0; i < 30; ++i) {
    subjects.push_back(subj(i, 0, i % 2, 0.1 + rng.uniform01(), rng.bernoulli(0.7)));
  }
  const Dataset ds(subjects);
  for (int i = 0; i < ds.size(); ++i) {
    int prev = 0;
    for (double t = 0.0; t <= 1.6; t += 0.01) {
      const int now = ds.counting(i, t);
      CHECK(now >= prev);  // non-decreasing
      prev = now;
    }
    CHECK(prev == ds[i].delta);  // at most one jump, and only for events
    // the jump happens exactly at u_i, while the subject is still at risk
    const double u = ds[i].u;
    CHECK(ds.counting(i, u - 1e-9) == 0);
    CHECK(ds.counting(i, u) == ds[i].delta);
    CHECK(ds.at_risk(i, u) == 1);
  }
}

TEST_CASE("save then load round-trips datasets") {
  RngStream rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Subject> subjects;
    for (int i = 0; i < 20; ++i) {
      Subject s;
      s.id = i;
      s.x = {rng.uniform(-3, 3), rng.exponential(1.0)};
      s.w = i % 2;
      s.u = rng.uniform01_open() * 7;
      s.delta = rng.bernoulli(0.5);
      subjects.push_back(s);
    }
    const Dataset ds(subjects);
    const auto path = write_temp("roundtrip.csv", "");
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.size() == ds.size());
    REQUIRE(back.dim() == ds.dim());
    for (int i = 0; i < ds.size(); ++i) {
      CHECK(back[i].w == ds[i].w);
      CHECK(back[i].delta == ds[i].delta);
      CHECK(back[i].u == ds[i].u);  // exact: max_digits10 serialization
      for (int j = 0; j < ds.dim(); ++j) {
        CHECK(back[i].x[static_cast<std::size_t>(j)] == ds[i].x[static_cast<std::size_t>(j)]);
      }
    }
  }
}

TEST_CASE("dataset validation rejects bad subjects") {
  CHECK_THROWS_AS(Dataset({subj(0, 0, 1, 1.0, 1)}), std::invalid_argument);  // too small
  CHECK_THROWS_AS(Dataset({subj(0, 0, 1, 1.0, 1), subj(1, 0, 1, 2.0, 0)}),
                  std::invalid_argument);  // one arm
  CHECK_THROWS_AS(Dataset({subj(0, 0, 1, -1.0, 1), subj(1, 0, 0, 2.0, 0)}),
                  std::invalid_argument);  // u <= 0
  std::vector<Subject> mixed = {subj(0, 0, 1, 1.0, 1), {1, {0.0, 1.0}, 0, 2.0, 0}};
  CHECK_THROWS_AS((Dataset{mixed}), std::invalid_argument);  // ragged covariates
}
