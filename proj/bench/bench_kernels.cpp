#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mgl/groups.hpp"
#include "mgl/kernels.hpp"
#include "mgl/learners.hpp"
#include "mgl/risk.hpp"

namespace {

struct Fixture {
  mgl::Dataset data;
  std::shared_ptr<const mgl::GroupTree> tree;
  mgl::PredictorPtr predictor;
  std::vector<uint32_t> rows;
  std::vector<double> values;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    mgl::PlantedModel model;
    model.attributes = {"a", "b", "c"};
    model.dim = 8;
    model.noise = 0.05;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          mgl::PlantedLeaf leaf;
          leaf.groups = {{"a", "a" + std::to_string(a)}, {"b", "b" + std::to_string(b)}, {"c", "c" + std::to_string(c)}};
          leaf.count = 6000;
          leaf.rule.kind = mgl::LeafRule::Kind::kLinear;
          leaf.rule.weights.assign(model.dim, (a + b + c) % 2 ? 1.0 : -1.0);
          model.leaves.push_back(leaf);
        }
      }
    }
    Fixture out;
    out.data = mgl::make_synthetic(model, 1).data;
    const std::vector<std::string> order = {"a", "b", "c"};
    out.tree = std::make_shared<const mgl::GroupTree>(mgl::build_hierarchy(out.data, order));
    mgl::LearnerSpec spec;
    spec.kind = mgl::LearnerKind::kTree;
    spec.max_depth = 4;
    out.predictor = mgl::erm(spec, out.data);
    out.rows.resize(out.data.size());
    for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i] = static_cast<uint32_t>(i);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    out.values.resize(out.data.size());
    for (auto& v : out.values) v = u(rng);
    return out;
  }();
  return f;
}

template <bool Parallel>
void BM_Sum(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? mgl::kernels::parallel::sum(f.values) : mgl::kernels::serial::sum(f.values));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.values.size()));
}

template <bool Parallel>
void BM_Membership(benchmark::State& state) {
  const auto& f = fixture();
  const auto& pred = f.tree->predicate(f.tree->size() - 1);
  for (auto _ : state) {
    auto mask = Parallel ? mgl::kernels::parallel::membership_mask(pred, f.data)
                         : mgl::kernels::serial::membership_mask(pred, f.data);
    benchmark::DoNotOptimize(mask.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.data.size()));
}

template <bool Parallel>
void BM_Route(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto nodes = Parallel ? mgl::kernels::parallel::route_rows(*f.tree, f.data)
                          : mgl::kernels::serial::route_rows(*f.tree, f.data);
    benchmark::DoNotOptimize(nodes.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.data.size()));
}

template <bool Parallel>
void BM_LossSum(benchmark::State& state) {
  const auto& f = fixture();
  const mgl::Loss loss{mgl::LossKind::kClippedLogistic};
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? mgl::kernels::parallel::loss_sum(*f.predictor, f.data, f.rows, loss)
                                      : mgl::kernels::serial::loss_sum(*f.predictor, f.data, f.rows, loss));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.rows.size()));
}

BENCHMARK(BM_Sum<false>)->Name("sum/serial");
BENCHMARK(BM_Sum<true>)->Name("sum/parallel");
BENCHMARK(BM_Membership<false>)->Name("membership/serial");
BENCHMARK(BM_Membership<true>)->Name("membership/parallel");
BENCHMARK(BM_Route<false>)->Name("route/serial");
BENCHMARK(BM_Route<true>)->Name("route/parallel");
BENCHMARK(BM_LossSum<false>)->Name("loss_sum/serial");
BENCHMARK(BM_LossSum<true>)->Name("loss_sum/parallel");

}  // namespace

BENCHMARK_MAIN();
