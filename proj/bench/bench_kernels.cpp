// Serial reference vs blocked/OpenMP dense kernels at the training shapes,
// plus end-to-end network passes and a full TD3 update.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gatepilot/kernels.hpp"
#include "gatepilot/netcore.hpp"
#include "gatepilot/td3core.hpp"

namespace {

using namespace gatepilot;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

struct DenseFixture {
    kernels::DenseShape shape;
    std::vector<double> x, w, b, z, dz, dx, dw, db;

    explicit DenseFixture(const benchmark::State& st)
        : shape{static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)),
                static_cast<std::size_t>(st.range(2))} {
        x = random_vector(shape.batch * shape.in, 1);
        w = random_vector(shape.out * shape.in, 2);
        b = random_vector(shape.out, 3);
        dz = random_vector(shape.batch * shape.out, 4);
        z.resize(shape.batch * shape.out);
        dx.resize(shape.batch * shape.in);
        dw.resize(shape.out * shape.in);
        db.resize(shape.out);
    }
    double flops() const { return 2.0 * shape.batch * shape.in * shape.out; }
};

void shapes(benchmark::internal::Benchmark* b) {
    b->Args({100, 8, 400})->Args({100, 12, 400})->Args({100, 400, 300})->Args({1, 400, 300});
}

template <auto Fn>
void BM_forward(benchmark::State& st) {
    DenseFixture f(st);
    for (auto _ : st) {
        Fn(f.shape, f.x, f.w, f.b, f.z);
        benchmark::DoNotOptimize(f.z.data());
    }
    st.counters["GFLOPS"] = benchmark::Counter(f.flops(), benchmark::Counter::kIsIterationInvariantRate,
                                               benchmark::Counter::kIs1000);
}

template <auto Fn>
void BM_backward_input(benchmark::State& st) {
    DenseFixture f(st);
    for (auto _ : st) {
        Fn(f.shape, f.dz, f.w, f.dx);
        benchmark::DoNotOptimize(f.dx.data());
    }
    st.counters["GFLOPS"] = benchmark::Counter(f.flops(), benchmark::Counter::kIsIterationInvariantRate,
                                               benchmark::Counter::kIs1000);
}

template <auto Fn>
void BM_backward_params(benchmark::State& st) {
    DenseFixture f(st);
    for (auto _ : st) {
        Fn(f.shape, f.dz, f.x, f.dw, f.db);
        benchmark::DoNotOptimize(f.dw.data());
    }
    st.counters["GFLOPS"] = benchmark::Counter(f.flops(), benchmark::Counter::kIsIterationInvariantRate,
                                               benchmark::Counter::kIs1000);
}

BENCHMARK(BM_forward<kernels::reference::forward>)->Name("forward/reference")->Apply(shapes);
BENCHMARK(BM_forward<kernels::parallel::forward>)->Name("forward/parallel")->Apply(shapes);
BENCHMARK(BM_backward_input<kernels::reference::backward_input>)->Name("backward_input/reference")->Apply(shapes);
BENCHMARK(BM_backward_input<kernels::parallel::backward_input>)->Name("backward_input/parallel")->Apply(shapes);
BENCHMARK(BM_backward_params<kernels::reference::backward_params>)->Name("backward_params/reference")->Apply(shapes);
BENCHMARK(BM_backward_params<kernels::parallel::backward_params>)->Name("backward_params/parallel")->Apply(shapes);

td3core::Batch random_batch(std::size_t n) {
    Rng rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    td3core::ReplayBuffer buf(n);
    for (std::size_t i = 0; i < n; ++i) {
        td3core::Transition t;
        for (double& v : t.s) v = 3.0 * u(rng);
        for (double& v : t.a) v = u(rng);
        for (double& v : t.s_next) v = 3.0 * u(rng);
        t.r = u(rng);
        buf.store(t);
    }
    return buf.sample_batch(n, rng);
}

void BM_critic_loss_gradient(benchmark::State& st) {
    Rng rng(1);
    const auto critic = netcore::init_critic(rng);
    const auto batch = random_batch(100);
    const std::vector<double> y(100, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(td3core::critic_loss_gradient(batch, y, critic).value);
}
BENCHMARK(BM_critic_loss_gradient)->Unit(benchmark::kMillisecond);

void BM_actor_objective_gradient(benchmark::State& st) {
    Rng rng(1);
    const auto actor = netcore::init_actor(rng);
    const auto critic = netcore::init_critic(rng);
    const auto batch = random_batch(100);
    for (auto _ : st) benchmark::DoNotOptimize(td3core::actor_objective_gradient(batch, actor, critic).value);
}
BENCHMARK(BM_actor_objective_gradient)->Unit(benchmark::kMillisecond);

void BM_train_steps(benchmark::State& st) {
    td3core::Trainer trainer(gateworld::EnvConfig{}, td3core::Td3Config{}, 0);
    trainer.run(200);
    for (auto _ : st) trainer.run(1);
}
BENCHMARK(BM_train_steps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
