#include <cstdio>
#include <map>

#include <json.hpp>

#include "mtd/classifier.hpp"
#include "mtd/error.hpp"

namespace mtd {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Tree: return "tree";
    case ModelKind::Forest: return "forest";
    case ModelKind::Knn: return "knn";
  }
  return "unknown";
}

ModelKind Model::kind() const {
  switch (impl_.index()) {
    case 0: return ModelKind::Tree;
    case 1: return ModelKind::Forest;
    default: return ModelKind::Knn;
  }
}

const std::vector<std::string>& Model::classes() const {
  return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.classes; }, impl_);
}

std::size_t Model::n_features() const {
  return std::visit([](const auto& m) { return m.n_features; }, impl_);
}

Prediction Model::predict(std::span<const double> x) const {
  if (x.size() != n_features())
    throw ShapeError("model expects " + std::to_string(n_features()) + " features, got " + std::to_string(x.size()));
  return std::visit([&](const auto& m) { return m.predict(x); }, impl_);
}

double EvalReport::row_percent(std::size_t truth, std::size_t predicted) const {
  std::size_t total = 0;
  for (auto c : confusion.at(truth)) total += c;
  return total ? 100.0 * static_cast<double>(confusion[truth].at(predicted)) / static_cast<double>(total) : 0.0;
}

EvalReport evaluate_predictions(const std::vector<std::string>& classes, std::span<const std::size_t> truth,
                                std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and prediction counts differ");
  if (truth.empty()) throw ConfigError("cannot evaluate an empty test set");
  const auto n = classes.size();
  EvalReport r;
  r.classes = classes;
  r.confusion.assign(n, std::vector<std::size_t>(n, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n || predicted[i] >= n) throw ConfigError("class index out of range");
    ++r.confusion[truth[i]][predicted[i]];
    correct += truth[i] == predicted[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  double f1_sum = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t tp = r.confusion[c][c], row = 0, col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += r.confusion[c][k];
      col += r.confusion[k][c];
    }
    ClassMetrics m;
    m.support = row;
    m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    f1_sum += m.f1;
    r.per_class.push_back(m);
  }
  r.macro_f1 = n ? f1_sum / static_cast<double>(n) : 0.0;
  return r;
}

EvalReport evaluate(const Model& model, const Dataset& test) {
  if (test.vectors.empty()) throw ConfigError("cannot evaluate an empty test set");
  const auto& classes = model.classes();
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index.emplace(classes[c], c);
  std::vector<std::size_t> truth, predicted;
  truth.reserve(test.vectors.size());
  predicted.reserve(test.vectors.size());
  for (const auto& v : test.vectors) {
    if (!v.label) throw ConfigError("test vector is unlabeled");
    auto it = index.find(*v.label);
    if (it == index.end()) throw ConfigError("test label '" + *v.label + "' is unknown to the model");
    truth.push_back(it->second);
    predicted.push_back(model.predict(v.features).class_index);
  }
  return evaluate_predictions(classes, truth, predicted);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["classes"] = classes;
  doc["accuracy"] = accuracy;
  doc["macro_f1"] = macro_f1;
  auto& per = doc["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < classes.size(); ++c)
    per.push_back({{"class", classes[c]},
                   {"precision", per_class[c].precision},
                   {"recall", per_class[c].recall},
                   {"f1", per_class[c].f1},
                   {"support", per_class[c].support}});
  doc["confusion"] = confusion;
  auto& pct = doc["confusion_percent"] = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < classes.size(); ++t) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < classes.size(); ++p) row.push_back(row_percent(t, p));
    pct.push_back(row);
  }
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1", "support");
  out += line;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::snprintf(line, sizeof line, "%-18s %9.4f %9.4f %9.4f %8zu\n", classes[c].c_str(), per_class[c].precision,
                  per_class[c].recall, per_class[c].f1, per_class[c].support);
    out += line;
  }
  std::snprintf(line, sizeof line, "macro F1 %.4f  accuracy %.4f\n\nconfusion (row %%, rows = true class)\n", macro_f1,
                accuracy);
  out += line;
  for (std::size_t t = 0; t < classes.size(); ++t) {
    std::snprintf(line, sizeof line, "%-18s", classes[t].c_str());
    out += line;
    for (std::size_t p = 0; p < classes.size(); ++p) {
      std::snprintf(line, sizeof line, " %6.1f", row_percent(t, p));
      out += line;
    }
    out += '\n';
  }
  return out;
}

}  // namespace mtd
