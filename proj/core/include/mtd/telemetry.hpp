#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtd/rng.hpp"

namespace mtd {

inline constexpr std::size_t kDefaultFeatureCount = 80;
inline constexpr double kWindowSeconds = 5.0;

/// Family-prefixed names for the 80 default features: net_00.., mem_00..,
/// fs_00.., cpu_00.., sched_00.., drv_00.., rnd_00...
const std::vector<std::string>& default_feature_names();

/// One observation window of kernel-event counts.
struct FeatureVector {
  std::vector<double> features;
  double window_start = 0.0;
  std::optional<std::string> label;
};

/// Per-feature Gaussian parameters for one behavior. A profile may "mimic"
/// another: with `mimic_probability` a window is drawn from the mimicked
/// profile instead (idle phases indistinguishable from that behavior).
struct BehaviorProfile {
  std::string label;
  std::vector<double> mean;
  std::vector<double> dispersion;
  std::string mimic_label;
  double mimic_probability = 0.0;
};

struct ProfileOptions {
  /// Signature features are shifted by this many standard deviations.
  double separation_sigma = 5.0;
  /// Enables the DataLeak/Normal confusable pair.
  bool confusable_pair = true;
  double mimic_probability = 0.25;
};

/// Profiles for the eight default classes, in default_class_names() order.
std::vector<BehaviorProfile> default_profiles(const ProfileOptions& options = {});

/// Draws one window of `duration_s` seconds. Counts scale linearly with the
/// duration relative to the nominal 5 s window; negatives clamp to zero.
FeatureVector sample_profile(const BehaviorProfile& profile, std::span<const BehaviorProfile> all, Rng& rng,
                             double duration_s = kWindowSeconds);

class TelemetrySource {
 public:
  virtual ~TelemetrySource() = default;
  /// Collects the window [t, t + duration_s). Throws EndOfStream when the
  /// source is exhausted.
  virtual FeatureVector collect_window(double duration_s) = 0;
  virtual std::size_t feature_count() const = 0;
};

/// Default telemetry source: emits vectors from the profile of the behavior
/// currently exhibited by the host.
class SyntheticSource final : public TelemetrySource {
 public:
  SyntheticSource(std::vector<BehaviorProfile> profiles, std::uint64_t seed, double start_time = 0.0,
                  std::optional<std::size_t> max_windows = std::nullopt);

  /// Throws ConfigError for a label without a profile.
  void set_behavior(const std::string& label);
  const std::string& behavior() const { return profiles_[current_].label; }
  double next_window_start() const { return next_start_; }

  FeatureVector collect_window(double duration_s) override;
  std::size_t feature_count() const override;

 private:
  std::vector<BehaviorProfile> profiles_;
  std::size_t current_ = 0;
  Rng rng_;
  double next_start_;
  std::optional<std::size_t> remaining_;
};

struct Dataset {
  std::vector<FeatureVector> vectors;
  std::vector<std::string> classes;
  std::string provenance;

  std::size_t feature_count() const { return vectors.empty() ? 0 : vectors.front().features.size(); }
  /// Index of `label` in `classes`, or classes.size() when absent.
  std::size_t class_index(const std::string& label) const;
  /// Throws ConfigError on unlabeled vectors, unknown labels, ragged or
  /// non-finite features.
  void validate() const;
};

/// n_per_class vectors per profile, grouped by class in profile order.
/// Throws ConfigError on duplicate labels, empty profiles or n_per_class == 0.
Dataset generate_dataset(const std::vector<BehaviorProfile>& profiles, std::size_t n_per_class, std::uint64_t seed);

/// Stratified per class. Throws StratifyError when a class has fewer than two
/// members and ConfigError when the fraction is outside (0, 1).
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

struct Scaler {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t feature_count() const { return min.size(); }
  bool operator==(const Scaler&) const = default;
};

Scaler minmax_fit(const Dataset& train);
/// (x - min) / (max - min); constant features map to 0. No clamping.
std::vector<double> minmax_apply(const Scaler& scaler, std::span<const double> features);
FeatureVector minmax_apply(const Scaler& scaler, const FeatureVector& vector);
Dataset minmax_apply(const Scaler& scaler, const Dataset& dataset);

// CSV: header `label,f000,...`, one vector per line, LF endings.
void write_dataset_csv(const Dataset& dataset, std::ostream& out);
Dataset read_dataset_csv(std::istream& in, const std::string& provenance = "csv");
void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);

// Scaler file: JSON document with per-feature min/max.
std::string scaler_to_json(const Scaler& scaler);
Scaler scaler_from_json(const std::string& text);
void save_scaler(const Scaler& scaler, const std::filesystem::path& path);
Scaler load_scaler(const std::filesystem::path& path);

}  // namespace mtd
