// Serial vs OpenMP kernel comparison on a representative interface mesh.
// Run: ./tfem_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "tfem/analysis.hpp"
#include "tfem/manufactured.hpp"
#include "tfem/transmission.hpp"

using namespace tfem;

namespace {

struct Fixture {
    ManufacturedSolution ms = ms1();
    TriMesh mesh;
    DiscreteField u;

    Fixture() {
        mesh = generate_fitted_mesh(ms.partition, 0.025);
        TransmissionProblem prob{ms.partition, ms.data, 0.9};
        SolveOptions opts;
        opts.check_ellipticity = false;
        u = solve_direct(prob, mesh, opts).u;
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void bench_assemble_stiffness(benchmark::State& state, Parallelism par) {
    Fixture& f = fixture();
    DofMap dofs(f.mesh, Basis::P1, 1);
    for (auto _ : state) {
        auto K = assemble_stiffness(f.mesh, f.ms.data, dofs, 0, par);
        benchmark::DoNotOptimize(K.nonZeros());
    }
    state.SetItemsProcessed(state.iterations() * f.mesh.num_triangles());
}

void bench_volume_load(benchmark::State& state, Parallelism par) {
    Fixture& f = fixture();
    DofMap dofs(f.mesh, Basis::P1, 1);
    CoefficientField coeff = CoefficientField::laplacian(2, 1);
    coeff.set_flux(1, [](const Vec2& p, double* o) {
        o[0] = p.x() * p.y();
        o[1] = std::cos(p.x());
    });
    coeff.set_source(2, [](const Vec2& p, double* o) { o[0] = p.squaredNorm(); });
    for (auto _ : state) {
        auto b = assemble_volume_load(f.mesh, coeff, dofs, 0, par);
        benchmark::DoNotOptimize(b.sum());
    }
    state.SetItemsProcessed(state.iterations() * f.mesh.num_triangles());
}

void bench_holder(benchmark::State& state, Parallelism par) {
    Fixture& f = fixture();
    for (auto _ : state) {
        auto est = holder_seminorm(f.u, f.ms.partition, 0.5, 4.0 * f.mesh.h, 4000, 42, par);
        benchmark::DoNotOptimize(est.cross_interface);
    }
}

}  // namespace

BENCHMARK_CAPTURE(bench_assemble_stiffness, serial, Parallelism::Serial);
BENCHMARK_CAPTURE(bench_assemble_stiffness, openmp, Parallelism::OpenMP);
BENCHMARK_CAPTURE(bench_volume_load, serial, Parallelism::Serial);
BENCHMARK_CAPTURE(bench_volume_load, openmp, Parallelism::OpenMP);
BENCHMARK_CAPTURE(bench_holder, serial, Parallelism::Serial);
BENCHMARK_CAPTURE(bench_holder, openmp, Parallelism::OpenMP);

BENCHMARK_MAIN();
