#include "mtd/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mtd/error.hpp"
#include "mtd/labels.hpp"

namespace mtd {
namespace {

struct FeatureFamily {
  const char* prefix;
  std::size_t count;
};

// 12 + 12 + 14 + 10 + 12 + 10 + 10 = 80
constexpr FeatureFamily kFamilies[] = {
    {"net", 12}, {"mem", 12}, {"fs", 14}, {"cpu", 10}, {"sched", 12}, {"drv", 10}, {"rnd", 10},
};

// Offsets of each family inside the 80-wide vector.
constexpr std::size_t kNet = 0, kMem = 12, kFs = 24, kCpu = 38, kSched = 48, kDrv = 60, kRnd = 70;

std::vector<std::size_t> span_of(std::initializer_list<std::pair<std::size_t, std::size_t>> ranges) {
  std::vector<std::size_t> out;
  for (auto [begin, len] : ranges)
    for (std::size_t i = 0; i < len; ++i) out.push_back(begin + i);
  return out;
}

}  // namespace

const std::vector<std::string>& default_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& fam : kFamilies) {
      for (std::size_t i = 0; i < fam.count; ++i) {
        std::string idx = std::to_string(i);
        if (idx.size() < 2) idx.insert(0, "0");
        out.push_back(std::string(fam.prefix) + "_" + idx);
      }
    }
    return out;
  }();
  return names;
}

std::vector<BehaviorProfile> default_profiles(const ProfileOptions& options) {
  const std::size_t n = kDefaultFeatureCount;
  std::vector<double> base_mean(n), base_disp(n);
  for (std::size_t j = 0; j < n; ++j) {
    base_mean[j] = 10.0 + static_cast<double>((j * 37) % 50);
    base_disp[j] = 0.1 * base_mean[j] + 1.0;
  }

  // Signature features per malicious class. Pairs inside a family share a
  // block so the classes overlap on part of the vector.
  const std::map<std::string_view, std::vector<std::size_t>> signatures = {
      {labels::kRootkitBeurk, span_of({{kSched, 4}, {kDrv, 4}, {kMem, 2}})},
      {labels::kRootkitBdvl, span_of({{kSched, 4}, {kDrv + 4, 4}, {kMem + 2, 2}})},
      {labels::kBotnetBashlite, span_of({{kNet, 6}, {kCpu + 5, 2}, {kSched + 10, 2}})},
      {labels::kRansomwarePoc, span_of({{kFs, 8}, {kCpu, 5}, {kRnd, 4}})},
      {labels::kBackdoorHttp, span_of({{kNet + 6, 4}, {kMem + 4, 3}, {kFs + 8, 2}})},
      {labels::kBackdoorPython, span_of({{kNet + 6, 4}, {kMem + 7, 3}, {kCpu + 7, 2}})},
      {labels::kDataLeakTheTick, span_of({{kNet + 10, 2}, {kFs + 10, 4}, {kRnd + 4, 3}})},
  };

  std::vector<BehaviorProfile> out;
  for (const auto& name : default_class_names()) {
    BehaviorProfile p{name, base_mean, base_disp, {}, 0.0};
    if (auto it = signatures.find(name); it != signatures.end()) {
      for (auto j : it->second) p.mean[j] += options.separation_sigma * base_disp[j];
    }
    if (options.confusable_pair && name == labels::kDataLeakTheTick) {
      p.mimic_label = std::string(labels::kNormal);
      p.mimic_probability = options.mimic_probability;
    }
    out.push_back(std::move(p));
  }
  return out;
}

FeatureVector sample_profile(const BehaviorProfile& profile, std::span<const BehaviorProfile> all, Rng& rng,
                             double duration_s) {
  const BehaviorProfile* source = &profile;
  if (profile.mimic_probability > 0.0 && rng.bernoulli(profile.mimic_probability)) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& p) { return p.label == profile.mimic_label; });
    if (it == all.end()) throw ConfigError("profile '" + profile.label + "' mimics unknown profile '" + profile.mimic_label + "'");
    source = &*it;
  }
  const double scale = duration_s / kWindowSeconds;
  const double sd_scale = std::sqrt(scale);
  FeatureVector v;
  v.features.resize(source->mean.size());
  for (std::size_t j = 0; j < v.features.size(); ++j) {
    const double mean = source->mean[j] * scale;
    const double sd = source->dispersion[j] * sd_scale;
    const double draw = sd > 0.0 ? rng.normal(mean, sd) : mean;
    v.features[j] = std::max(0.0, draw);
  }
  return v;
}

// --- SyntheticSource ---------------------------------------------------------

SyntheticSource::SyntheticSource(std::vector<BehaviorProfile> profiles, std::uint64_t seed, double start_time,
                                 std::optional<std::size_t> max_windows)
    : profiles_(std::move(profiles)), rng_(seed), next_start_(start_time), remaining_(max_windows) {
  if (profiles_.empty()) throw ConfigError("synthetic source needs at least one profile");
  auto normal = std::find_if(profiles_.begin(), profiles_.end(),
                             [](const auto& p) { return p.label == labels::kNormal; });
  current_ = normal == profiles_.end() ? 0 : static_cast<std::size_t>(normal - profiles_.begin());
}

void SyntheticSource::set_behavior(const std::string& label) {
  auto it = std::find_if(profiles_.begin(), profiles_.end(), [&](const auto& p) { return p.label == label; });
  if (it == profiles_.end()) throw ConfigError("no telemetry profile for behavior '" + label + "'");
  current_ = static_cast<std::size_t>(it - profiles_.begin());
}

FeatureVector SyntheticSource::collect_window(double duration_s) {
  if (!(duration_s > 0.0)) throw ConfigError("window duration must be positive");
  if (remaining_) {
    if (*remaining_ == 0) throw EndOfStream("synthetic source exhausted");
    --*remaining_;
  }
  auto v = sample_profile(profiles_[current_], profiles_, rng_, duration_s);
  v.window_start = next_start_;
  next_start_ += duration_s;
  return v;
}

std::size_t SyntheticSource::feature_count() const { return profiles_.front().mean.size(); }

// --- Dataset -----------------------------------------------------------------

std::size_t Dataset::class_index(const std::string& label) const {
  return static_cast<std::size_t>(std::find(classes.begin(), classes.end(), label) - classes.begin());
}

void Dataset::validate() const {
  const auto width = feature_count();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (!v.label) throw ConfigError("vector " + std::to_string(i) + " is unlabeled");
    if (class_index(*v.label) == classes.size()) throw ConfigError("vector " + std::to_string(i) + " has unknown label '" + *v.label + "'");
    if (v.features.size() != width) throw ConfigError("vector " + std::to_string(i) + " has " + std::to_string(v.features.size()) + " features, expected " + std::to_string(width));
    for (double x : v.features)
      if (!std::isfinite(x)) throw ConfigError("vector " + std::to_string(i) + " has a non-finite feature");
  }
}

Dataset generate_dataset(const std::vector<BehaviorProfile>& profiles, std::size_t n_per_class, std::uint64_t seed) {
  if (profiles.empty()) throw ConfigError("generate_dataset: no profiles");
  if (n_per_class == 0) throw ConfigError("generate_dataset: n_per_class must be at least 1");
  std::set<std::string> seen;
  for (const auto& p : profiles) {
    if (!seen.insert(p.label).second) throw ConfigError("duplicate profile label '" + p.label + "'");
    if (p.mean.size() != profiles.front().mean.size() || p.dispersion.size() != p.mean.size())
      throw ConfigError("profile '" + p.label + "' does not define every feature");
  }

  Dataset ds;
  ds.provenance = "synthetic:seed=" + std::to_string(seed);
  ds.vectors.reserve(profiles.size() * n_per_class);
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    ds.classes.push_back(profiles[c].label);
    Rng rng(mix_seed(seed, c));
    for (std::size_t i = 0; i < n_per_class; ++i) {
      auto v = sample_profile(profiles[c], profiles, rng);
      v.window_start = static_cast<double>(i) * kWindowSeconds;
      v.label = profiles[c].label;
      ds.vectors.push_back(std::move(v));
    }
  }
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be within (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(dataset.classes.size());
  for (std::size_t i = 0; i < dataset.vectors.size(); ++i) {
    const auto& label = dataset.vectors[i].label;
    if (!label) throw ConfigError("split: vector " + std::to_string(i) + " is unlabeled");
    auto c = dataset.class_index(*label);
    if (c == dataset.classes.size()) throw ConfigError("split: unknown label '" + *label + "'");
    by_class[c].push_back(i);
  }

  Dataset train{{}, dataset.classes, dataset.provenance + ":train"};
  Dataset test{{}, dataset.classes, dataset.provenance + ":test"};
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2)
      throw StratifyError("class '" + dataset.classes[c] + "' has " + std::to_string(idx.size()) + " member(s); at least 2 required");
    Rng rng(mix_seed(seed, c));
    rng.shuffle(idx.begin(), idx.end());
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? train : test).vectors.push_back(dataset.vectors[idx[k]]);
  }
  return {std::move(train), std::move(test)};
}

// --- Scaler ------------------------------------------------------------------

Scaler minmax_fit(const Dataset& train) {
  if (train.vectors.empty()) throw ConfigError("minmax_fit: empty training set");
  const auto width = train.feature_count();
  Scaler s{train.vectors.front().features, train.vectors.front().features};
  for (const auto& v : train.vectors) {
    if (v.features.size() != width) throw ShapeError("minmax_fit: ragged feature vectors");
    for (std::size_t j = 0; j < width; ++j) {
      s.min[j] = std::min(s.min[j], v.features[j]);
      s.max[j] = std::max(s.max[j], v.features[j]);
    }
  }
  return s;
}

std::vector<double> minmax_apply(const Scaler& scaler, std::span<const double> features) {
  if (features.size() != scaler.feature_count())
    throw ShapeError("scaler expects " + std::to_string(scaler.feature_count()) + " features, got " + std::to_string(features.size()));
  std::vector<double> out(features.size());
  for (std::size_t j = 0; j < features.size(); ++j) {
    const double range = scaler.max[j] - scaler.min[j];
    out[j] = range > 0.0 ? (features[j] - scaler.min[j]) / range : 0.0;
  }
  return out;
}

FeatureVector minmax_apply(const Scaler& scaler, const FeatureVector& vector) {
  return FeatureVector{minmax_apply(scaler, std::span<const double>(vector.features)), vector.window_start, vector.label};
}

Dataset minmax_apply(const Scaler& scaler, const Dataset& dataset) {
  Dataset out{{}, dataset.classes, dataset.provenance + ":scaled"};
  out.vectors.reserve(dataset.vectors.size());
  for (const auto& v : dataset.vectors) out.vectors.push_back(minmax_apply(scaler, v));
  return out;
}

}  // namespace mtd
