// Compares the serial reference loops against the OpenMP kernels on the two
// hot paths: grid verification and DSE trajectory sampling. The parallel
// path must produce identical numbers; only the wall time may differ.

#include <chrono>
#include <cstdio>

#include "nssafe/benchmarks.hpp"
#include "nssafe/exec.hpp"
#include "nssafe/parallel.hpp"
#include "nssafe/trainer.hpp"
#include "nssafe/verifier.hpp"

using namespace nssafe;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double timed(F&& f) {
    double t0 = now_ms();
    f();
    return now_ms() - t0;
}

}  // namespace

int main() {
    BenchmarkConfig bc;
    bc.net_hidden = {32, 32};
    BenchmarkBundle bundle = build_benchmark("thermostat", bc);
    Program prog = normalize_guards(bundle.program);
    ParameterStore theta = init_params(prog, 11);

    std::printf("threads available: %d\n", thread_cap());

    VerifyConfig vc;
    vc.grid = {2000};
    VerifyResult serial_res, parallel_res;
    double t_serial = timed([&] { serial_res = verify(prog, theta, vc, /*serial=*/true); });
    double t_par = timed([&] { parallel_res = verify(prog, theta, vc, /*serial=*/false); });
    bool same = serial_res.portion == parallel_res.portion &&
                serial_res.safe_cells == parallel_res.safe_cells;
    std::printf("verify %ld cells:    serial %8.1f ms   omp %8.1f ms   speedup %.2fx   %s\n",
                serial_res.total_cells, t_serial, t_par, t_serial / t_par,
                same ? "identical" : "MISMATCH");

    SampleConfig sc;
    sc.trajectories = 50;
    sc.seed = 5;
    LossGrad g_serial, g_par;
    double s_serial = timed([&] { g_serial = dse_loss_grad(prog, theta, sc, /*serial=*/true); });
    double s_par = timed([&] { g_par = dse_loss_grad(prog, theta, sc, /*serial=*/false); });
    bool gsame = g_serial.value == g_par.value && g_serial.grad == g_par.grad;
    std::printf("dse grad %d paths:   serial %8.1f ms   omp %8.1f ms   speedup %.2fx   %s\n",
                sc.trajectories, s_serial, s_par, s_serial / s_par,
                gsame ? "identical" : "MISMATCH");

    SoundConfig snd;
    snd.splits = 100;
    LossGrad d_serial, d_par;
    double d_ts = timed([&] { d_serial = sound_loss_grad(prog, theta, snd, /*serial=*/true); });
    double d_tp = timed([&] { d_par = sound_loss_grad(prog, theta, snd, /*serial=*/false); });
    bool dsame = d_serial.value == d_par.value && d_serial.grad == d_par.grad;
    std::printf("sound grad %d cells: serial %8.1f ms   omp %8.1f ms   speedup %.2fx   %s\n",
                snd.splits, d_ts, d_tp, d_ts / d_tp, dsame ? "identical" : "MISMATCH");

    return (same && gsame && dsame) ? 0 : 1;
}
