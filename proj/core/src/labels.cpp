#include "mtd/labels.hpp"

#include <algorithm>
#include <cctype>

namespace mtd {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Normal: return "Normal";
    case Family::Botnet: return "Botnet";
    case Family::Ransomware: return "Ransomware";
    case Family::Rootkit: return "Rootkit";
    case Family::Backdoor: return "Backdoor";
    case Family::Other: return "Other";
  }
  return "Other";
}

std::optional<Family> parse_family(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "normal") return Family::Normal;
  if (lower == "botnet") return Family::Botnet;
  if (lower == "ransomware") return Family::Ransomware;
  if (lower == "rootkit") return Family::Rootkit;
  if (lower == "backdoor" || lower == "dataleak") return Family::Backdoor;
  return std::nullopt;
}

BehaviorLabel BehaviorLabel::from_name(std::string_view name) {
  auto prefix = name.substr(0, name.find('_'));
  return BehaviorLabel{std::string(name), parse_family(prefix).value_or(Family::Other)};
}

std::vector<std::string> default_class_names() {
  return {std::string(labels::kNormal),          std::string(labels::kRootkitBeurk),
          std::string(labels::kRootkitBdvl),     std::string(labels::kBotnetBashlite),
          std::string(labels::kRansomwarePoc),   std::string(labels::kBackdoorHttp),
          std::string(labels::kBackdoorPython),  std::string(labels::kDataLeakTheTick)};
}

}  // namespace mtd
