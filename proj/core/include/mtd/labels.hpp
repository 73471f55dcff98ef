#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mtd {

/// Coarse behavior family; enforcement policies match on these.
enum class Family { Normal, Botnet, Ransomware, Rootkit, Backdoor, Other };

std::string_view to_string(Family f);
/// Case-insensitive. "DataLeak" is a backdoor behavior.
std::optional<Family> parse_family(std::string_view text);

/// Fine-grained class label as used by datasets and models, e.g.
/// "rootkit_beurk". The family is derived from the prefix before '_'.
struct BehaviorLabel {
  std::string name;
  Family family = Family::Other;

  static BehaviorLabel from_name(std::string_view name);
  bool is_normal() const { return family == Family::Normal; }
  bool operator==(const BehaviorLabel&) const = default;
};

namespace labels {
inline constexpr std::string_view kNormal = "normal";
inline constexpr std::string_view kRootkitBeurk = "rootkit_beurk";
inline constexpr std::string_view kRootkitBdvl = "rootkit_bdvl";
inline constexpr std::string_view kBotnetBashlite = "botnet_bashlite";
inline constexpr std::string_view kRansomwarePoc = "ransomware_poc";
inline constexpr std::string_view kBackdoorHttp = "backdoor_http";
inline constexpr std::string_view kBackdoorPython = "backdoor_python";
inline constexpr std::string_view kDataLeakTheTick = "dataleak_thetick";
}  // namespace labels

/// The eight monitored behaviors: normal operation plus seven malware samples.
std::vector<std::string> default_class_names();

}  // namespace mtd
