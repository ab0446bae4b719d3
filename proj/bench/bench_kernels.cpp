// Serial reference kernels against their OpenMP counterparts.
#include "grand/kernels.hpp"
#include "grand/represent.hpp"
#include "grand/synthetic.hpp"
#include "grand/walks.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace grand;
namespace k = grand::kernels;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

k::DenseShape shape(const benchmark::State& state) {
    return {64, static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))};
}

template <auto Forward>
void BM_DenseForward(benchmark::State& state) {
    const auto s = shape(state);
    auto x = random_vec(s.batch * s.in, 1), w = random_vec(s.in * s.out, 2), b = random_vec(s.out, 3);
    std::vector<double> y(s.batch * s.out);
    for (auto _ : state) {
        Forward(s, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch * s.in * s.out));
}

template <auto Backward>
void BM_DenseBackwardParams(benchmark::State& state) {
    const auto s = shape(state);
    auto x = random_vec(s.batch * s.in, 1), dy = random_vec(s.batch * s.out, 2);
    std::vector<double> dw(s.in * s.out), db(s.out);
    for (auto _ : state) {
        Backward(s, x, dy, dw, db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch * s.in * s.out));
}

template <auto Backward>
void BM_DenseBackwardInput(benchmark::State& state) {
    const auto s = shape(state);
    auto dy = random_vec(s.batch * s.out, 1), w = random_vec(s.in * s.out, 2);
    std::vector<double> dx(s.batch * s.in);
    for (auto _ : state) {
        Backward(s, dy, w, dx);
        benchmark::DoNotOptimize(dx.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch * s.in * s.out));
}

const KnowledgeGraph& synthetic_graph() {
    static const KnowledgeGraph g = build_graph(generate_synthetic(SyntheticSpec{}).triples);
    return g;
}

template <bool Parallel>
void BM_WalkCorpus(benchmark::State& state) {
    const auto& g = synthetic_graph();
    WalkConfig cfg;
    cfg.depth = 8;
    cfg.walks_per_entity = static_cast<std::uint32_t>(state.range(0));
    cfg.dedup = false;
    for (auto _ : state) {
        auto c = Parallel ? generate_corpus(g, cfg) : generate_corpus_serial(g, cfg);
        benchmark::DoNotOptimize(c.walks.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_entities() * cfg.walks_per_entity));
}

template <bool Parallel>
void BM_PcaProject(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 192;
    auto data = random_vec(rows * dim, 4);
    static const PcaModel model = fit_pca(random_vec(400 * dim, 5), dim, 64);
    for (auto _ : state) {
        auto p = Parallel ? project_rows(model, data) : project_rows_serial(model, data);
        benchmark::DoNotOptimize(p.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

void dense_args(benchmark::internal::Benchmark* b) {
    b->Args({192, 512})->Args({512, 256})->Args({256, 6});
}

}  // namespace

BENCHMARK(BM_DenseForward<k::serial::dense_forward>)->Name("dense_forward/serial")->Apply(dense_args);
BENCHMARK(BM_DenseForward<k::parallel::dense_forward>)->Name("dense_forward/parallel")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardParams<k::serial::dense_backward_params>)->Name("dense_backward_params/serial")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardParams<k::parallel::dense_backward_params>)->Name("dense_backward_params/parallel")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardInput<k::serial::dense_backward_input>)->Name("dense_backward_input/serial")->Apply(dense_args);
BENCHMARK(BM_DenseBackwardInput<k::parallel::dense_backward_input>)->Name("dense_backward_input/parallel")->Apply(dense_args);
BENCHMARK(BM_WalkCorpus<false>)->Name("walk_corpus/serial")->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WalkCorpus<true>)->Name("walk_corpus/parallel")->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PcaProject<false>)->Name("pca_project/serial")->Arg(2000);
BENCHMARK(BM_PcaProject<true>)->Name("pca_project/parallel")->Arg(2000);

BENCHMARK_MAIN();
