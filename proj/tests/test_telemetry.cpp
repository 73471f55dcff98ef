#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtd/error.hpp"
#include "mtd/labels.hpp"
#include "mtd/telemetry.hpp"

using namespace mtd;

namespace {

Dataset column(std::vector<double> values) {
  Dataset d;
  d.classes = {"a"};
  for (double v : values) d.vectors.push_back({{v}, 0.0, "a"});
  return d;
}

}  // namespace

TEST_CASE("normal windows stay within six dispersions") {
  auto profiles = default_profiles();
  REQUIRE(profiles.front().label == labels::kNormal);
  SyntheticSource src(profiles, 77);
  const auto& p = profiles.front();
  for (int i = 0; i < 1000; ++i) {
    auto v = src.collect_window(kWindowSeconds);
    REQUIRE(v.features.size() == kDefaultFeatureCount);
    for (std::size_t f = 0; f < v.features.size(); ++f) {
      CHECK(v.features[f] <= p.mean[f] + 6 * p.dispersion[f]);
      CHECK(v.features[f] >= std::max(0.0, p.mean[f] - 6 * p.dispersion[f]));
    }
  }
}

TEST_CASE("constant-zero profile") {
  BehaviorProfile zero{"zero", std::vector<double>(8, 0.0), std::vector<double>(8, 0.0), "", 0.0};
  SyntheticSource src({zero}, 1);
  auto v = src.collect_window(5.0);
  CHECK(std::all_of(v.features.begin(), v.features.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("consecutive windows are 5 s apart") {
  SyntheticSource src(default_profiles(), 3, 10.0);
  auto a = src.collect_window(5.0);
  auto b = src.collect_window(5.0);
  CHECK(b.window_start - a.window_start == doctest::Approx(5.0));
}

TEST_CASE("source exhaustion and unknown behaviors") {
  SyntheticSource src(default_profiles(), 3, 0.0, 1);
  src.collect_window(5.0);
  CHECK_THROWS_AS(src.collect_window(5.0), EndOfStream);
  CHECK_THROWS_AS(src.set_behavior("no_such_behavior"), ConfigError);
}

TEST_CASE("dataset generation sizes") {
  CHECK(generate_dataset(default_profiles(), 2160, 1).vectors.size() == 17280);
  auto one = generate_dataset({default_profiles().front()}, 1, 1);
  REQUIRE(one.vectors.size() == 1);
  CHECK(one.vectors[0].label == std::string(labels::kNormal));
  auto a = generate_dataset(default_profiles(), 20, 5);
  auto b = generate_dataset(default_profiles(), 20, 5);
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i) CHECK(a.vectors[i].features == b.vectors[i].features);
}

TEST_CASE("min-max scaling") {
  auto s = minmax_fit(column({2, 4, 6}));
  const double xs[] = {2, 4, 6};
  for (int i = 0; i < 3; ++i) CHECK(minmax_apply(s, std::span<const double>(&xs[i], 1))[0] == doctest::Approx(i * 0.5));
  auto c = minmax_fit(column({5, 5}));
  const double five = 5;
  CHECK(minmax_apply(c, std::span<const double>(&five, 1))[0] == 0.0);
  const double big = 10;
  CHECK(minmax_apply(s, std::span<const double>(&big, 1))[0] > 1.0);
}

TEST_CASE("stratified split") {
  auto data = generate_dataset(default_profiles(), 100, 2);
  auto [train, test] = split(data, 0.8, 9);
  for (const auto& cls : data.classes) {
    auto count = [&](const Dataset& d) {
      return std::count_if(d.vectors.begin(), d.vectors.end(), [&](const auto& v) { return v.label == cls; });
    };
    CHECK(count(train) == 80);
    CHECK(count(test) == 20);
  }
  // Union of the partitions is the original multiset.
  std::vector<std::vector<double>> all, parts;
  for (const auto& v : data.vectors) all.push_back(v.features);
  for (const auto& v : train.vectors) parts.push_back(v.features);
  for (const auto& v : test.vectors) parts.push_back(v.features);
  std::sort(all.begin(), all.end());
  std::sort(parts.begin(), parts.end());
  CHECK(all == parts);

  auto two = generate_dataset(default_profiles(), 2, 2);
  auto [tr, te] = split(two, 0.5, 1);
  CHECK(tr.vectors.size() == two.classes.size());
  CHECK(te.vectors.size() == two.classes.size());
  CHECK_THROWS_AS(split(generate_dataset(default_profiles(), 1, 2), 0.8, 1), StratifyError);
}

TEST_CASE("csv and scaler export-import is lossless") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto data = generate_dataset(default_profiles(), 5, seed);
    std::stringstream ss;
    write_dataset_csv(data, ss);
    auto back = read_dataset_csv(ss);
    REQUIRE(back.vectors.size() == data.vectors.size());
    for (std::size_t i = 0; i < data.vectors.size(); ++i) {
      CHECK(back.vectors[i].features == data.vectors[i].features);
      CHECK(back.vectors[i].label == data.vectors[i].label);
    }
    auto s = minmax_fit(data);
    CHECK(scaler_from_json(scaler_to_json(s)) == s);
  }
}

TEST_CASE("malformed csv is rejected") {
  std::stringstream ss("label,f000\nnormal,abc\n");
  CHECK_THROWS(read_dataset_csv(ss));
}
