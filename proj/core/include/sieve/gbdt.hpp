#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sieve/features.hpp"

namespace sieve {

struct TreeParams {
  std::uint32_t trees = 50;
  std::uint32_t max_depth = 8;
  std::uint32_t max_leaves = 32;
  double learning_rate = 0.2;
  std::uint32_t min_samples_leaf = 2;
  std::uint64_t seed = 0;
  /// L2 regularisation on leaf values.
  double lambda = 1.0;
  /// Fraction of rows drawn (with the seeded generator) for each tree.
  double subsample = 1.0;
  /// Start from the logit of the positive rate instead of 0.
  bool boost_from_average = true;

  void validate() const;
};

/// Internal node when `feature >= 0` (go right iff v[feature] >= value),
/// otherwise a leaf carrying an additive logit in `value`.
struct TreeNode {
  std::int32_t feature = -1;
  double value = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;

  bool leaf() const noexcept { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const SparseVector& v) const noexcept;
  std::uint32_t depth() const noexcept;
  std::uint32_t leaves() const noexcept;
};

/// How the vectors scored by a model are built; stored in the model file so
/// clients featurize consistently.
struct ModelInfo {
  FeatureConfig features;
  std::optional<PairMode> pair_mode;  // set for parental models

  std::uint32_t input_dimension() const noexcept {
    return pair_mode ? pair_dimension(features, *pair_mode) : features.dimension();
  }
  friend bool operator==(const ModelInfo&, const ModelInfo&) = default;
};

class TreeModel {
 public:
  double base_score = 0.0;
  std::uint32_t dimension = 0;
  ModelInfo info;
  std::vector<Tree> trees;

  double margin(const SparseVector& v) const noexcept;
  /// sigmoid(margin), kept strictly inside (0,1).
  double score(const SparseVector& v) const noexcept;
};

double sigmoid(double x) noexcept;

struct LabeledVector {
  bool positive = false;
  SparseVector vector;
  std::string problem;
};

struct TrainReport {
  /// Mean logistic loss on the training set before round 1 and after each round.
  std::vector<double> loss;
};

/// Greedy stage-wise boosting on logistic loss with exact split search and
/// Newton leaf values. Deterministic for fixed data and params. Throws
/// std::invalid_argument on empty data or mixed dimensions.
TreeModel train(std::span<const LabeledVector> data, const TreeParams& params, ModelInfo info = {},
                TrainReport* report = nullptr);

double logistic_loss(const TreeModel& model, std::span<const LabeledVector> data);

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { Truncated, BadMagic, Version, Corrupt };
  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kModelVersion = 1;

std::string save_model(const TreeModel& model);
TreeModel load_model(std::string_view bytes);
void save_model_file(const TreeModel& model, const std::string& path);
TreeModel load_model_file(const std::string& path);
std::string dump_model_text(const TreeModel& model);

}  // namespace sieve
