#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mtd/error.hpp"
#include "mtd/telemetry.hpp"

namespace mtd {
namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  out.append(buf, end);
}

std::string column_name(std::size_t j) {
  std::string idx = std::to_string(j);
  if (idx.size() < 3) idx.insert(0, 3 - idx.size(), '0');
  return "f" + idx;
}

}  // namespace

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  const auto width = dataset.feature_count();
  std::string line = "label";
  for (std::size_t j = 0; j < width; ++j) line += "," + column_name(j);
  line += '\n';
  out << line;
  for (const auto& v : dataset.vectors) {
    if (!v.label) throw ConfigError("cannot export unlabeled vector");
    if (v.label->find_first_of(",\n\r") != std::string::npos) throw ConfigError("label '" + *v.label + "' contains a CSV delimiter");
    line = *v.label;
    for (double x : v.features) {
      line += ',';
      append_double(line, x);
    }
    line += '\n';
    out << line;
  }
}

Dataset read_dataset_csv(std::istream& in, const std::string& provenance) {
  Dataset ds;
  ds.provenance = provenance;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("dataset CSV is empty", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::size_t width = 0;
  {
    std::istringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "label") throw FormatError("dataset CSV header must start with 'label'", line_no);
    while (std::getline(header, cell, ',')) {
      if (cell != column_name(width)) throw FormatError("unexpected header column '" + cell + "', expected " + column_name(width), line_no);
      ++width;
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    FeatureVector v;
    auto comma = line.find(',');
    v.label = line.substr(0, comma);
    if (v.label->empty()) throw FormatError("empty label", line_no);
    v.features.reserve(width);
    const char* p = comma == std::string::npos ? line.data() + line.size() : line.data() + comma;
    const char* end = line.data() + line.size();
    while (p != end) {
      ++p;  // skip ','
      double x = 0.0;
      auto [next, ec] = std::from_chars(p, end, x);
      if (ec != std::errc{} || (next != end && *next != ','))
        throw FormatError("malformed number in column " + std::to_string(v.features.size() + 1), line_no);
      v.features.push_back(x);
      p = next;
    }
    if (v.features.size() != width)
      throw FormatError("row has " + std::to_string(v.features.size()) + " features, header declares " + std::to_string(width), line_no);
    if (ds.class_index(*v.label) == ds.classes.size()) ds.classes.push_back(*v.label);
    v.window_start = static_cast<double>(ds.vectors.size()) * kWindowSeconds;
    ds.vectors.push_back(std::move(v));
  }
  return ds;
}

void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write dataset to '" + path.string() + "'");
  write_dataset_csv(dataset, out);
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  return read_dataset_csv(in, "csv:" + path.string());
}

// --- scaler ------------------------------------------------------------------

std::string scaler_to_json(const Scaler& scaler) {
  nlohmann::ordered_json doc;
  doc["format"] = "mtd-minmax-scaler";
  doc["version"] = 1;
  doc["feature_count"] = scaler.feature_count();
  auto& features = doc["features"] = nlohmann::ordered_json::array();
  for (std::size_t j = 0; j < scaler.feature_count(); ++j)
    features.push_back({{"index", j}, {"min", scaler.min[j]}, {"max", scaler.max[j]}});
  return doc.dump(2) + "\n";
}

Scaler scaler_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("scaler file is not valid JSON: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("format") != "mtd-minmax-scaler") throw FormatError("not a scaler file", 0);
    if (doc.at("version") != 1)
      throw FormatError("scaler version mismatch: expected 1, found " + doc.at("version").dump(), 0);
    const auto n = doc.at("feature_count").get<std::size_t>();
    const auto& features = doc.at("features");
    if (features.size() != n) throw FormatError("scaler feature_count does not match entries", 0);
    Scaler s;
    for (std::size_t j = 0; j < n; ++j) {
      if (features[j].at("index").get<std::size_t>() != j) throw FormatError("scaler entries out of order", j);
      s.min.push_back(features[j].at("min").get<double>());
      s.max.push_back(features[j].at("max").get<double>());
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scaler file: ") + e.what(), 0);
  }
}

void save_scaler(const Scaler& scaler, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write scaler to '" + path.string() + "'");
  out << scaler_to_json(scaler);
}

Scaler load_scaler(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scaler '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scaler_from_json(ss.str());
}

}  // namespace mtd
