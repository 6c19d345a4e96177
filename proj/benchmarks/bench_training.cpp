#include <benchmark/benchmark.h>

#include "cseal/autodiff.hpp"
#include "cseal/data.hpp"
#include "cseal/losses.hpp"
#include "cseal/model.hpp"
#include "cseal/trainer.hpp"

namespace {

using namespace cseal;

struct Batch {
  model::ClassifierSpec spec;
  model::ModelState net1;
  model::ModelState net2;
  losses::TwoViewBatch views;
};

Batch make_batch() {
  data::SyntheticSpec ds_spec;
  ds_spec.n_train_pool = 576;
  ds_spec.n_test = 64;
  const data::Dataset ds = data::generate(ds_spec);
  Batch b;
  b.spec.input_dim = ds.num_features();
  b.spec.num_classes = ds.num_classes();
  b.net1 = model::init(b.spec, 1);
  b.net2 = model::init(b.spec, 2);
  const auto rows = [](std::size_t from) {
    std::vector<std::size_t> r(64);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = from + i;
    return r;
  };
  b.views.labelled_1 = {ds.features.gather_rows(rows(0)), ds.labels.gather_rows(rows(0))};
  b.views.labelled_2_x = ds.features.gather_rows(rows(0));
  b.views.unlabelled_1 = ds.features.gather_rows(rows(64));
  b.views.unlabelled_2 = ds.features.gather_rows(rows(128));
  return b;
}

// Forward, backward and one Adam update for a 64-row batch at default sizes.
void BM_TrainStep(benchmark::State& state) {
  const auto method = static_cast<losses::Method>(state.range(0));
  Batch b = make_batch();
  const losses::LossWeights w = losses::LossWeights::defaults_for(method);
  train::OptimizerConfig opt;
  train::AdamState adam;
  std::uint64_t step = 0;
  for (auto _ : state) {
    autodiff::Tape tape;
    const std::vector<autodiff::Var> p1 = model::bind(tape, b.net1.params, true);
    const std::vector<autodiff::Var> p2 = model::bind(tape, b.net2.params, method == losses::Method::ENot);
    const losses::Network n1{&b.spec, p1};
    const losses::Network n2{&b.spec, p2};
    autodiff::Var loss;
    switch (method) {
      case losses::Method::ESup:
        loss = losses::esup_batch_loss(tape, n1, b.views.labelled_1, 10, step);
        break;
      case losses::Method::EMt:
        loss = losses::emt_loss(tape, n1, n2, b.views, w, 10, step);
        break;
      default:
        loss = losses::enot_loss(tape, n1, n2, b.views, w, 10, step);
        break;
    }
    const autodiff::Gradients g = tape.backward(loss, p1);
    std::vector<Tensor> grads;
    for (const auto& v : p1) grads.push_back(g[v]);
    train::adam_step(b.net1.params, grads, adam, opt, opt.learning_rate);
    ++step;
  }
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(losses::Method::ESup))
    ->Arg(static_cast<int>(losses::Method::EMt))
    ->Arg(static_cast<int>(losses::Method::ENot))
    ->Unit(benchmark::kMillisecond);

void BM_VatPerturbation(benchmark::State& state) {
  const Batch b = make_batch();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        losses::vat_perturbation(b.spec, b.net1.params, b.views.unlabelled_1, losses::VatConfig{}, 3));
  }
}
BENCHMARK(BM_VatPerturbation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
