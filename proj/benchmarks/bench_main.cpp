#include <benchmark/benchmark.h>

#include "mtd/adversary.hpp"
#include "mtd/classifier.hpp"
#include "mtd/file_format.hpp"
#include "mtd/framework.hpp"
#include "mtd/ip_shuffle.hpp"
#include "mtd/log.hpp"
#include "mtd/telemetry.hpp"

using namespace mtd;

namespace {

struct Fixture {
  Dataset scaled;
  Model tree;
  Model forest;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    auto data = generate_dataset(default_profiles(), 200, 1);
    auto scaled = minmax_apply(minmax_fit(data), data);
    ForestParams fp;
    fp.n_trees = 100;
    return Fixture{scaled, Model(train_tree(scaled)), Model(train_forest(scaled, fp, 2))};
  }();
  return f;
}

void predict(benchmark::State& state, const Model& model) {
  const auto& v = fixture().scaled.vectors;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(v[i++ % v.size()].features));
  }
}

void BM_TreePredict(benchmark::State& state) { predict(state, fixture().tree); }
void BM_ForestPredict(benchmark::State& state) { predict(state, fixture().forest); }

void BM_TrainTree(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(fixture().scaled));
}

void BM_ShuffleRestore(benchmark::State& state) {
  EnvironmentSpec spec;
  spec.files.push_back({"/data", static_cast<std::uint64_t>(state.range(0)), 1'000'000, {".pdf", ".txt"}, 3, 2});
  auto env = SandboxEnvironment::create(spec);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto map = shuffle_extensions(env, "/data", {".pdf"}, ++seed);
    restore_extensions(env, map);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Migrate(benchmark::State& state) {
  EnvironmentSpec spec;
  spec.network.cidr = "10.0.0.0/" + std::to_string(state.range(0));
  auto env = SandboxEnvironment::create(spec);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(migrate(env, rng));
}

void BM_ScenarioStep(benchmark::State& state) {
  configure_logging("off");
  FrameworkConfig c;
  c.duration_s = 1e9;
  c.environment.linker.enabled = true;
  c.environment.files.push_back({"/home", 500, 50'000'000, {".pdf"}, 2, 3});
  c.proactive.push_back({"sweep", 60.0, std::nullopt, {"libraries"}});
  AdversarySpec enc;
  enc.kind = "encryptor";
  enc.label = "ransomware_poc";
  enc.encryptor.rate_files_per_s = 1;
  enc.encryptor.max_runtime_s = 1e9;
  c.adversaries.push_back(enc);
  Framework fw(c);
  double t = 0;
  for (auto _ : state) fw.step(t += 1.0);
}

}  // namespace

BENCHMARK(BM_TreePredict);
BENCHMARK(BM_ForestPredict);
BENCHMARK(BM_TrainTree)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShuffleRestore)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Migrate)->Arg(24)->Arg(20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScenarioStep)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
