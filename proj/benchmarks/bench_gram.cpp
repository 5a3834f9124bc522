#include "easimix/gram.hpp"
#include "easimix/random.hpp"

#include <benchmark/benchmark.h>

using namespace easimix;

namespace {

struct Instance {
  KroneckerLayout layout;
  Mat rows, targets, weight;
};

Instance make_instance(int goods, int mp, int n) {
  Dimensions d;
  d.goods = goods;
  d.price_covariates = mp;
  d.instruments = 2;
  Instance in{KroneckerLayout::for_beta(d), {}, {}, {}};
  StreamRng rng(1);
  in.rows = Mat(n, in.layout.rows);
  in.targets = Mat(n, in.layout.equations);
  for (Eigen::Index i = 0; i < in.rows.size(); ++i) in.rows.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < in.targets.size(); ++i) in.targets.data()[i] = rng.normal();
  const int q = in.layout.equations;
  in.weight = Mat::Identity(q, q) * 2.0;
  in.weight(0, q - 1) = in.weight(q - 1, 0) = 0.3;
  return in;
}

// Per-observation accumulation of F_i' S F_i with explicit padded designs.
GramResult loop_gram(const Instance& in) {
  const int p = in.layout.packed_dim;
  GramResult out{Mat::Zero(p, p), Vec::Zero(p)};
  for (Eigen::Index i = 0; i < in.rows.rows(); ++i) {
    const Mat f = padded_design(in.rows.row(i).transpose(), in.layout);
    const Mat sf = in.weight * f;
    out.matrix.noalias() += f.transpose() * sf;
    out.vector.noalias() += sf.transpose() * in.targets.row(i).transpose();
  }
  return out;
}

void BM_KroneckerGram(benchmark::State& state) {
  const Instance in = make_instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_gram(in.rows, in.targets, in.weight, in.layout));
}

void BM_LoopGram(benchmark::State& state) {
  const Instance in = make_instance(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(loop_gram(in));
}

}  // namespace

BENCHMARK(BM_KroneckerGram)->Args({3, 0})->Args({3, 2})->Args({4, 1});
BENCHMARK(BM_LoopGram)->Args({3, 0})->Args({3, 2})->Args({4, 1});
