#pragma once

// Internal helpers over toml++; not installed.

#include <toml.hpp>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtd/environment.hpp"
#include "mtd/error.hpp"

namespace mtd::detail {

inline std::string where(const toml::node& node) {
  const auto& src = node.source();
  if (!src.begin) return {};
  return " (line " + std::to_string(src.begin.line) + ")";
}

inline void reject_unknown_keys(const toml::table& tbl, std::string_view section,
                                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : tbl) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) throw ConfigError("unknown key '" + std::string(key.str()) + "' in [" + std::string(section) + "]" + where(node));
  }
}

inline const toml::table* table_at(const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) throw ConfigError("'" + std::string(key) + "' must be a table" + where(*node));
  return t;
}

inline std::optional<std::string> opt_string(const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (!node) return std::nullopt;
  auto v = node->value<std::string>();
  if (!v || !node->is_string()) throw ConfigError("'" + std::string(key) + "' must be a string" + where(*node));
  return v;
}

inline std::string get_string(const toml::table& tbl, std::string_view key, std::string fallback) {
  return opt_string(tbl, key).value_or(std::move(fallback));
}

inline std::string require_string(const toml::table& tbl, std::string_view key, std::string_view section) {
  auto v = opt_string(tbl, key);
  if (!v) throw ConfigError("missing '" + std::string(key) + "' in [" + std::string(section) + "]");
  return *v;
}

inline std::optional<double> opt_double(const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (!node) return std::nullopt;
  if (auto i = node->as_integer()) return static_cast<double>(i->get());
  if (auto f = node->as_floating_point()) return f->get();
  throw ConfigError("'" + std::string(key) + "' must be a number" + where(*node));
}

inline double get_double(const toml::table& tbl, std::string_view key, double fallback) {
  return opt_double(tbl, key).value_or(fallback);
}

inline std::optional<std::int64_t> opt_int(const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (!node) return std::nullopt;
  if (auto i = node->as_integer()) return i->get();
  throw ConfigError("'" + std::string(key) + "' must be an integer" + where(*node));
}

inline std::int64_t get_int(const toml::table& tbl, std::string_view key, std::int64_t fallback) {
  return opt_int(tbl, key).value_or(fallback);
}

inline std::uint64_t get_count(const toml::table& tbl, std::string_view key, std::uint64_t fallback) {
  auto v = opt_int(tbl, key);
  if (!v) return fallback;
  if (*v < 0) throw ConfigError("'" + std::string(key) + "' must be non-negative" + where(*tbl.get(key)));
  return static_cast<std::uint64_t>(*v);
}

inline bool get_bool(const toml::table& tbl, std::string_view key, bool fallback) {
  const auto* node = tbl.get(key);
  if (!node) return fallback;
  if (auto b = node->as_boolean()) return b->get();
  throw ConfigError("'" + std::string(key) + "' must be a boolean" + where(*node));
}

inline std::optional<std::vector<std::string>> opt_strings(const toml::table& tbl, std::string_view key) {
  const auto* node = tbl.get(key);
  if (!node) return std::nullopt;
  const auto* arr = node->as_array();
  if (!arr) throw ConfigError("'" + std::string(key) + "' must be an array of strings" + where(*node));
  std::vector<std::string> out;
  for (const auto& el : *arr) {
    auto s = el.value<std::string>();
    if (!s || !el.is_string()) throw ConfigError("'" + std::string(key) + "' must contain only strings" + where(el));
    out.push_back(*s);
  }
  return out;
}

inline std::vector<std::string> get_strings(const toml::table& tbl, std::string_view key,
                                            std::vector<std::string> fallback = {}) {
  return opt_strings(tbl, key).value_or(std::move(fallback));
}

/// Elements of an array-of-tables (`[[key]]`), or an empty list.
inline std::vector<const toml::table*> tables_at(const toml::table& tbl, std::string_view key) {
  std::vector<const toml::table*> out;
  const auto* node = tbl.get(key);
  if (!node) return out;
  const auto* arr = node->as_array();
  if (!arr) throw ConfigError("'" + std::string(key) + "' must be an array of tables" + where(*node));
  for (const auto& el : *arr) {
    const auto* t = el.as_table();
    if (!t) throw ConfigError("'" + std::string(key) + "' must contain only tables" + where(el));
    out.push_back(t);
  }
  return out;
}

inline toml::table parse_toml(std::string_view text, std::string_view source_name) {
  try {
    return toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    const auto& src = e.source();
    throw ConfigError(std::string(source_name) + ":" + std::to_string(src.begin.line) + ":" +
                      std::to_string(src.begin.column) + ": " + std::string(e.description()));
  }
}

std::string read_text_file(const std::string& path);

EnvironmentSpec environment_spec_from_toml(const toml::table& tbl, std::uint64_t default_seed = 0);

}  // namespace mtd::detail
