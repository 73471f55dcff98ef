#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mtd/telemetry.hpp"

namespace mtd {

struct TreeParams {
  unsigned max_depth = 16;
  std::size_t min_samples_leaf = 2;
  /// Features examined per split; 0 examines all of them.
  std::size_t max_features = 0;
  /// Only used to draw feature subsets when max_features is set.
  std::uint64_t seed = 0;
};

struct ForestParams {
  std::size_t n_trees = 100;
  TreeParams tree{};
  bool bootstrap = true;
  /// 0 selects floor(sqrt(feature count)).
  std::size_t features_per_split = 0;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

/// Internal nodes have feature >= 0 and route `x[feature] <= threshold` to
/// `left`. Leaves have feature == -1 and a per-class histogram.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::vector<std::uint32_t> histogram;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Prediction {
  std::string label;
  std::size_t class_index = 0;
  double confidence = 0.0;
};

struct DecisionTreeModel {
  std::vector<TreeNode> nodes;
  std::vector<std::string> classes;
  std::size_t n_features = 0;
  TreeParams params{};

  const TreeNode& leaf_for(std::span<const double> x) const;
  unsigned depth() const;
  Prediction predict(std::span<const double> x) const;
};

struct RandomForestModel {
  std::vector<DecisionTreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;
  std::size_t features_per_split = 0;
  std::vector<std::string> classes;
  std::size_t n_features = 0;

  Prediction predict(std::span<const double> x) const;
};

struct KnnModel {
  std::size_t k = 5;
  std::vector<double> points;  // row-major, n_points x n_features
  std::vector<std::uint32_t> labels;
  std::vector<std::string> classes;
  std::size_t n_features = 0;

  Prediction predict(std::span<const double> x) const;
};

enum class ModelKind : std::uint8_t { Tree = 1, Forest = 2, Knn = 3 };
std::string_view to_string(ModelKind kind);

/// Immutable trained classifier of any supported kind.
class Model {
 public:
  using Variant = std::variant<DecisionTreeModel, RandomForestModel, KnnModel>;

  Model(DecisionTreeModel m) : impl_(std::move(m)) {}
  Model(RandomForestModel m) : impl_(std::move(m)) {}
  Model(KnnModel m) : impl_(std::move(m)) {}

  ModelKind kind() const;
  const std::vector<std::string>& classes() const;
  std::size_t n_features() const;
  /// Throws ShapeError when x has the wrong length.
  Prediction predict(std::span<const double> x) const;
  const Variant& variant() const { return impl_; }

 private:
  Variant impl_;
};

/// Throws TrainError on an empty or invalid training set.
DecisionTreeModel train_tree(const Dataset& train, const TreeParams& params = {});
RandomForestModel train_forest(const Dataset& train, const ForestParams& params, std::uint64_t seed);
KnnModel train_knn(const Dataset& train, std::size_t k = 5);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<std::string> classes;
  /// confusion[true][predicted] counts.
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double accuracy = 0.0;

  /// Row-normalized percentage of class `truth` predicted as `predicted`.
  double row_percent(std::size_t truth, std::size_t predicted) const;
  std::string to_json() const;
  std::string to_table() const;
};

EvalReport evaluate_predictions(const std::vector<std::string>& classes, std::span<const std::size_t> truth,
                                std::span<const std::size_t> predicted);
/// Throws ConfigError on an empty test set or labels unknown to the model.
EvalReport evaluate(const Model& model, const Dataset& test);

// Binary model file: see docs/model_format.md.
inline constexpr std::uint16_t kModelFormatVersion = 1;
std::string serialize_model(const Model& model);
/// Throws FormatError with the byte offset of the first problem.
Model deserialize_model(std::string_view bytes);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mtd
