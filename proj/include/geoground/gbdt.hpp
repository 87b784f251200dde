#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/error.hpp"

namespace geoground {

struct BoostParams {
  int trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  double l2 = 1.0;
  int min_samples_leaf = 1;
  double subsample = 1.0;
  std::uint64_t seed = 0;
  int max_bins = 256;

  friend bool operator==(const BoostParams&, const BoostParams&) = default;
};

inline void to_json(nlohmann::json& j, const BoostParams& p) {
  j = {{"trees", p.trees},       {"max_depth", p.max_depth}, {"learning_rate", p.learning_rate},
       {"l2", p.l2},             {"min_samples_leaf", p.min_samples_leaf},
       {"subsample", p.subsample}, {"seed", p.seed},        {"max_bins", p.max_bins}};
}

inline void from_json(const nlohmann::json& j, BoostParams& p) {
  p.trees = j.value("trees", p.trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.l2 = j.value("l2", p.l2);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.subsample = j.value("subsample", p.subsample);
  p.seed = j.value("seed", p.seed);
  p.max_bins = j.value("max_bins", p.max_bins);
}

// Row-major dense feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t cols = 0) : cols_(cols) {}

  void add_row(std::span<const double> row) {
    if (row.size() != cols_) fail(ErrorCode::DimensionMismatch, "feature row has wrong width");
    data_.insert(data_.end(), row.begin(), row.end());
  }

  std::size_t rows() const { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t cols_;
  std::vector<double> data_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x < threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

// Least-squares gradient boosting with histogram split search. Training is
// a pure function of (rows in order, labels, params).
class BoostedTrees {
 public:
  std::size_t feature_count = 0;
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const {
    if (x.size() != feature_count) fail(ErrorCode::DimensionMismatch, "feature vector has wrong width");
    double s = base_score;
    for (const auto& t : trees) s += t.predict(x);
    return s;
  }

  static BoostedTrees fit(const FeatureMatrix& X, std::span<const double> y, const BoostParams& params) {
    if (X.rows() == 0) fail(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
    if (X.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "label count differs from row count");
    if (params.trees < 0 || params.max_depth < 1 || !(params.learning_rate > 0.0) || params.max_bins < 2 ||
        !(params.subsample > 0.0 && params.subsample <= 1.0) || params.min_samples_leaf < 1 || !(params.l2 >= 0.0))
      fail(ErrorCode::InvalidArgument, "invalid boosting parameters");

    BoostedTrees model;
    model.feature_count = X.cols();
    model.learning_rate = params.learning_rate;
    double sum = 0.0;
    for (double v : y) sum += v;
    model.base_score = sum / static_cast<double>(y.size());

    Binner binner(X, params.max_bins);
    std::vector<double> pred(y.size(), model.base_score);
    std::vector<double> residual(y.size());
    std::mt19937_64 rng(params.seed);
    for (int t = 0; t < params.trees; ++t) {
      for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - pred[i];
      std::vector<std::uint32_t> rows;
      rows.reserve(y.size());
      for (std::uint32_t i = 0; i < y.size(); ++i) {
        if (params.subsample >= 1.0 || static_cast<double>(rng() >> 11) * 0x1.0p-53 < params.subsample)
          rows.push_back(i);
      }
      if (rows.empty()) continue;
      RegressionTree tree;
      grow(tree, binner, residual, rows, 0, params);
      bool trivial = tree.nodes.size() == 1 && tree.nodes[0].value == 0.0;
      if (trivial) break;  // residuals are already fit
      for (std::size_t i = 0; i < y.size(); ++i) pred[i] += tree.predict(X.row(i));
      model.trees.push_back(std::move(tree));
    }
    return model;
  }

  friend bool operator==(const BoostedTrees&, const BoostedTrees&) = default;

 private:
  struct Binner {
    std::vector<std::vector<double>> cuts;  // per feature, strictly increasing
    std::vector<std::vector<std::uint16_t>> bins;  // per feature, per row

    Binner(const FeatureMatrix& X, int max_bins) : cuts(X.cols()), bins(X.cols()) {
      for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> values(X.rows());
        for (std::size_t r = 0; r < X.rows(); ++r) values[r] = X.at(r, f);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        auto& c = cuts[f];
        const std::size_t u = values.size();
        const auto limit = static_cast<std::size_t>(max_bins);
        if (u <= limit) {
          for (std::size_t i = 1; i < u; ++i) c.push_back(midpoint(values[i - 1], values[i]));
        } else {
          for (std::size_t k = 1; k < limit; ++k) {
            const std::size_t i = k * u / limit;
            const double cut = midpoint(values[i - 1], values[i]);
            if (c.empty() || cut > c.back()) c.push_back(cut);
          }
        }
        auto& b = bins[f];
        b.resize(X.rows());
        for (std::size_t r = 0; r < X.rows(); ++r)
          b[r] = static_cast<std::uint16_t>(std::upper_bound(c.begin(), c.end(), X.at(r, f)) - c.begin());
      }
    }

    static double midpoint(double a, double b) {
      double m = a + (b - a) / 2.0;
      // keep a < m <= b so that a goes left and b goes right
      if (!(m > a)) m = b;
      return m;
    }
  };

  static int grow(RegressionTree& tree, const Binner& binner, const std::vector<double>& residual,
                  const std::vector<std::uint32_t>& rows, int depth, const BoostParams& params) {
    double g = 0.0;
    for (auto r : rows) g += residual[r];
    const double n = static_cast<double>(rows.size());
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    const double leaf = params.learning_rate * g / (n + params.l2);

    int best_feature = -1;
    std::size_t best_cut = 0;
    double best_gain = 1e-12;
    if (depth < params.max_depth && rows.size() >= 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
      const double parent = g * g / (n + params.l2);
      for (std::size_t f = 0; f < binner.cuts.size(); ++f) {
        const auto& cuts = binner.cuts[f];
        if (cuts.empty()) continue;
        std::vector<double> hist_g(cuts.size() + 1, 0.0);
        std::vector<std::uint32_t> hist_n(cuts.size() + 1, 0);
        for (auto r : rows) {
          const auto b = binner.bins[f][r];
          hist_g[b] += residual[r];
          ++hist_n[b];
        }
        double gl = 0.0;
        std::uint32_t nl = 0;
        for (std::size_t c = 0; c < cuts.size(); ++c) {
          gl += hist_g[c];
          nl += hist_n[c];
          const auto nr = static_cast<std::uint32_t>(rows.size()) - nl;
          if (nl < static_cast<std::uint32_t>(params.min_samples_leaf) ||
              nr < static_cast<std::uint32_t>(params.min_samples_leaf))
            continue;
          const double gr = g - gl;
          const double gain = gl * gl / (nl + params.l2) + gr * gr / (nr + params.l2) - parent;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_cut = c;
          }
        }
      }
    }

    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(index)].value = leaf;
      return index;
    }
    std::vector<std::uint32_t> left, right;
    const auto f = static_cast<std::size_t>(best_feature);
    for (auto r : rows) (binner.bins[f][r] <= best_cut ? left : right).push_back(r);
    const double threshold = binner.cuts[f][best_cut];
    const int l = grow(tree, binner, residual, left, depth + 1, params);
    const int rgt = grow(tree, binner, residual, right, depth + 1, params);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = threshold;
    node.left = l;
    node.right = rgt;
    return index;
  }
};

inline void to_json(nlohmann::json& j, const BoostedTrees& m) {
  auto trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) nodes.push_back({{"leaf", n.value}});
      else nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j = {{"feature_count", m.feature_count},
       {"base_score", m.base_score},
       {"learning_rate", m.learning_rate},
       {"trees", std::move(trees)}};
}

inline void from_json(const nlohmann::json& j, BoostedTrees& m) {
  try {
    m.feature_count = j.at("feature_count").get<std::size_t>();
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.trees.clear();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        if (n.contains("leaf")) {
          node.value = n.at("leaf").get<double>();
        } else {
          node.feature = n.at("feature").get<int>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        }
        tree.nodes.push_back(node);
      }
      const auto count = static_cast<int>(tree.nodes.size());
      if (count == 0) fail(ErrorCode::MalformedModel, "tree without nodes");
      for (int i = 0; i < count; ++i) {
        const auto& node = tree.nodes[static_cast<std::size_t>(i)];
        if (node.is_leaf()) continue;
        // children always follow their parent, which rules out cycles
        if (node.feature >= static_cast<int>(m.feature_count) || node.left <= i || node.right <= i ||
            node.left >= count || node.right >= count)
          fail(ErrorCode::MalformedModel, "tree node references an invalid feature or child");
      }
      m.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedModel, std::string("malformed tree dump: ") + e.what());
  }
}

}  // namespace geoground
