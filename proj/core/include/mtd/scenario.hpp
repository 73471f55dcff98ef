#pragma once

#include <filesystem>
#include <optional>

#include "mtd/config.hpp"
#include "mtd/framework.hpp"
#include "mtd/report.hpp"

namespace mtd {

/// Runs a sandbox scenario to completion (plus the undefended baseline when
/// requested) and derives the per-phase report, metrics and checks.
/// `model` skips inline training when given.
ScenarioReport run_scenario(const FrameworkConfig& config, std::optional<TrainingResult> model = std::nullopt);

/// Convenience: load, optionally override the seed, run.
ScenarioReport run_scenario_file(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt);

/// Sets the run seed and the environment seed.
void override_seed(FrameworkConfig& config, std::uint64_t seed);

}  // namespace mtd
