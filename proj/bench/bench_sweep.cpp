// Wall-clock comparison of the serial and OpenMP sweeps.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "compbias/harness.hpp"

using namespace compbias;

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    ExperimentConfig config;
    config.epochs = argc > 1 ? std::atoi(argv[1]) : 100;
    if (argc > 2) config.encoding = encoding_from_name(argv[2]).value_or(Encoding::OHT2);

    std::vector<RunResult> serial, parallel;
    const double ts = seconds([&] { serial = run_sweep_serial(config); });
    const double tp = seconds([&] { parallel = run_sweep(config); });

    bool same = serial.size() == parallel.size();
    for (std::size_t i = 0; same && i < serial.size(); ++i)
        same = serial[i].curve.losses == parallel[i].curve.losses;

    const double run_epochs = static_cast<double>(serial.size()) * config.epochs;
    std::printf("encoding %s, %d epochs x %zu runs, %d threads\n", std::string(encoding_name(config.encoding)).c_str(),
                config.epochs, serial.size(), omp_get_max_threads());
    std::printf("serial    %8.3f s  %8.2f us/epoch\n", ts, 1e6 * ts / run_epochs);
    std::printf("parallel  %8.3f s  %8.2f us/epoch  speedup %.2fx\n", tp, 1e6 * tp / run_epochs, ts / tp);
    std::printf("results identical: %s\n", same ? "yes" : "no");
    return same ? 0 : 1;
}
