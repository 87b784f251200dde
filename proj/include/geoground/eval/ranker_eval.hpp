#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "geoground/eval/grounding_bench.hpp"
#include "geoground/ranker.hpp"

namespace geoground::eval {

struct RankerRow {
  std::string method;
  double p_at_1 = 0.0;
  double r_at_1 = 0.0;
  double p_at_3 = 0.0;
  double r_at_3 = 0.0;
};

struct RankerQueryLog {
  std::size_t query = 0;
  std::string method;
  std::vector<std::string> top3;
  std::size_t relevant = 0;
  std::size_t hits_at_1 = 0;
  std::size_t hits_at_3 = 0;
};

struct RankerReport {
  std::size_t train_n = 0;
  std::size_t test_n = 0;
  std::uint64_t seed = 0;
  std::vector<RankerRow> rows;  // ranker, distance, similarity
  std::vector<RankerQueryLog> log;

  const RankerRow& row(const std::string& method) const {
    for (const auto& r : rows)
      if (r.method == method) return r;
    fail(ErrorCode::InvalidArgument, "no row for method " + method);
  }
};

// External reference figures, shown for orientation only.
inline std::vector<RankerRow> ranker_reference_rows() {
  return {{"boosted ranker (reference)", 0.804, 0.725, 0.362, 0.928},
          {"distance (reference)", 0.761, 0.692, 0.304, 0.775},
          {"similarity (reference)", 0.652, 0.583, 0.254, 0.681}};
}

inline RankerReport run_ranker_eval(std::size_t train_n = 500, std::size_t test_n = 50, std::uint64_t seed = 7,
                                    const GroundingBenchParams& bench = {}, const BoostParams& params = {}) {
  if (train_n == 0 || test_n == 0) fail(ErrorCode::EmptyDataset, "train and test sizes must be positive");
  RankerReport rep{train_n, test_n, seed, {}, {}};
  const auto train = generate_grounding_queries(train_n, seed, bench);
  const auto test = generate_grounding_queries(test_n, seed ^ 0x5bd1e995ULL, bench);
  const auto model = train_ranker(to_training_set(train), params);

  struct Method {
    std::string name;
    std::function<std::vector<RankedCandidate>(const GroundingQuery&)> rank;
  };
  const std::vector<Method> methods = {
      {"boosted ranker", [&](const GroundingQuery& q) { return rank_candidates(model, q.observation, q.rank_input()); }},
      {"distance", [](const GroundingQuery& q) { return baseline_rank(BaselineMode::Distance, q.observation, q.rank_input()); }},
      {"similarity", [](const GroundingQuery& q) { return baseline_rank(BaselineMode::Similarity, q.observation, q.rank_input()); }}};

  for (const auto& m : methods) {
    RankerRow row{m.name};
    for (std::size_t qi = 0; qi < test.size(); ++qi) {
      const auto ranked = m.rank(test[qi]);
      std::vector<std::string> ids;
      for (const auto& r : ranked) ids.push_back(r.poi_id);
      const auto at1 = precision_recall_at_k(ids, test[qi].relevant, 1);
      const auto at3 = precision_recall_at_k(ids, test[qi].relevant, 3);
      row.p_at_1 += at1.precision;
      row.r_at_1 += at1.recall;
      row.p_at_3 += at3.precision;
      row.r_at_3 += at3.recall;
      std::vector<std::string> top(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, ids.size())));
      rep.log.push_back({qi, m.name, std::move(top), test[qi].relevant.size(), at1.hits, at3.hits});
    }
    const double n = static_cast<double>(test.size());
    row.p_at_1 /= n;
    row.r_at_1 /= n;
    row.p_at_3 /= n;
    row.r_at_3 /= n;
    rep.rows.push_back(row);
  }
  return rep;
}

inline std::string ranker_markdown(const RankerReport& rep) {
  std::string out = "| ranker | P@1 | R@1 | P@3 | R@3 |\n|---|---|---|---|---|\n";
  char buf[160];
  auto line = [&](const RankerRow& r) {
    std::snprintf(buf, sizeof(buf), "| %s | %.1f%% | %.1f%% | %.1f%% | %.1f%% |\n", r.method.c_str(), 100 * r.p_at_1,
                  100 * r.r_at_1, 100 * r.p_at_3, 100 * r.r_at_3);
    out += buf;
  };
  for (const auto& r : rep.rows) line(r);
  for (const auto& r : ranker_reference_rows()) line(r);
  std::snprintf(buf, sizeof(buf), "\ntrain %zu, test %zu, seed %llu. Reference rows are external figures, not produced here.\n",
                rep.train_n, rep.test_n, static_cast<unsigned long long>(rep.seed));
  out += buf;
  return out;
}

inline std::string ranker_csv(const RankerReport& rep) {
  std::string out = "query,method,top1,top2,top3,relevant,hits_at_1,hits_at_3\n";
  for (const auto& l : rep.log) {
    out += std::to_string(l.query) + "," + l.method;
    for (std::size_t i = 0; i < 3; ++i) out += "," + (i < l.top3.size() ? l.top3[i] : std::string());
    out += "," + std::to_string(l.relevant) + "," + std::to_string(l.hits_at_1) + "," + std::to_string(l.hits_at_3) + "\n";
  }
  return out;
}

}  // namespace geoground::eval
