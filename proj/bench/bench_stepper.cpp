// Times the serial reference stepper against the OpenMP one on the same
// spiking networks and checks the decoded outputs stay bit-identical.
// SPIKELDS_THREADS caps the parallel side.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "spikelds/workbench.hpp"

namespace {

using namespace spikelds;

double run_once(const SpikingLds& s, const Eigen::MatrixXi& inputs, bool parallel,
                Eigen::MatrixXi& decoded)
{
    const auto t0 = std::chrono::steady_clock::now();
    decoded = run_spiking(s, inputs, parallel);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

void bench_case(const char* label, const GenParams& params, int reps)
{
    const LdsSpec lds = gen_random_lds(params);
    const SpikingLds s = build_spiking_lds(transform_lds(lds), params.codec);
    const std::int64_t steps =
        params.T * static_cast<std::int64_t>(params.codec.frame_len) + s.latency;
    const double synapse_steps = static_cast<double>(steps) * static_cast<double>(s.graph.routes.size());

    Eigen::MatrixXi serial_out, parallel_out;
    double serial_s = 1e300, parallel_s = 1e300;
    for (int r = 0; r < reps; ++r) {
        serial_s = std::min(serial_s, run_once(s, lds.inputs, false, serial_out));
        parallel_s = std::min(parallel_s, run_once(s, lds.inputs, true, parallel_out));
    }

    std::cout << label << ": " << s.graph.neurons.size() << " neurons, "
              << s.graph.routes.size() << " routes, " << steps << " steps\n"
              << "  serial   " << std::setw(7) << std::fixed << std::setprecision(3) << serial_s
              << " s  (" << std::setprecision(1) << synapse_steps / serial_s / 1e6
              << " Msynapse-steps/s)\n"
              << "  parallel " << std::setw(7) << std::setprecision(3) << parallel_s << " s  ("
              << std::setprecision(1) << synapse_steps / parallel_s / 1e6
              << " Msynapse-steps/s)\n"
              << "  speedup  " << std::setprecision(2) << serial_s / parallel_s
              << "x, outputs identical: " << (serial_out == parallel_out ? "yes" : "NO") << "\n";
}

} // namespace

int main()
{
#ifdef _OPENMP
    if (const char* env = std::getenv("SPIKELDS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1)
            omp_set_num_threads(v);
    }
    std::cout << "openmp threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "built without openmp; parallel mode falls back to serial\n";
#endif

    GenParams medium;
    medium.m = 5;
    medium.n = 5;
    medium.T = 400;
    medium.seed = 21;
    medium.codec = {25, 21, 0.9};
    bench_case("medium (m=n=5, p=21)", medium, 3);

    GenParams large;
    large.m = 12;
    large.n = 12;
    large.T = 400;
    large.seed = 22;
    large.codec = {25, 21, 0.9};
    bench_case("large  (m=n=12, p=21)", large, 1);
    return 0;
}
