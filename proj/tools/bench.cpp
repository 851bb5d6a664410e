// Benchmark comparing the serial reference path against the OpenMP path for
// the three heavy kernels: the full-batch gradient epoch, the GMM E-step and
// the FASTEC proximal-gradient fit. Also asserts the two paths agree bitwise,
// which the fixed-order chunk reduction guarantees.

#include <chrono>
#include <cstdio>
#include <functional>

#include "loadcast/fastec.hpp"
#include "loadcast/gmm.hpp"
#include "loadcast/neural.hpp"
#include "loadcast/parallel.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/synth.hpp"

using namespace loadcast;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

std::vector<series::SamplePair> make_samples(int n_days) {
    synth::SynthConfig cfg;
    cfg.n_days = n_days;
    cfg.seed = 9;
    const auto result = synth::generate(cfg);
    return series::build_samples(result.dataset, n_days - 3).train;
}

struct Row {
    const char* name;
    double serial_ms, parallel_ms;
    bool identical;
};

}  // namespace

int main() {
    const auto samples = make_samples(128);

    Row rows[3];

    {
        neural::TrainConfig tc;
        tc.epochs = 3;
        tc.seed = 4;
        tc.learning_rate = 0.05;
        std::vector<double> serial_hist, parallel_hist;
        parallel::set_max_threads(1);
        const double t_serial = time_ms([&] {
            serial_hist = neural::train(neural::CellKind::Lstm, samples, tc).loss_history;
        });
        parallel::set_max_threads(-1);  // OpenMP default thread count
        const double t_par = time_ms([&] {
            parallel_hist = neural::train(neural::CellKind::Lstm, samples, tc).loss_history;
        });
        rows[0] = {"lstm epoch gradient", t_serial, t_par, serial_hist == parallel_hist};
    }

    {
        Rng rng(11);
        Vec pts(20000);
        for (Eigen::Index i = 0; i < pts.size(); ++i) {
            pts[i] = (i % 2 ? 0.7 : 0.3) + 0.03 * rng.normal();
        }
        gmm::EmConfig em;
        em.seed = 5;
        Vec serial_means, parallel_means;
        parallel::set_max_threads(1);
        const double t_serial = time_ms([&] { serial_means = gmm::em_fit(pts, 4, em).means; });
        parallel::set_max_threads(-1);
        const double t_par = time_ms([&] { parallel_means = gmm::em_fit(pts, 4, em).means; });
        rows[1] = {"gmm em fit (20k pts)", t_serial, t_par, serial_means == parallel_means};
    }

    {
        Rng rng(13);
        const auto design = fastec::bspline_design(96, 9, 3);
        Mat Y(96, 800);
        for (Eigen::Index c = 0; c < Y.cols(); ++c) {
            for (Eigen::Index r = 0; r < Y.rows(); ++r) Y(r, c) = 0.5 + 0.1 * rng.normal();
        }
        Mat serial_coef, parallel_coef;
        parallel::set_max_threads(1);
        const double t_serial =
            time_ms([&] { serial_coef = fastec::fastec_fit(Y, design, 0.5, 1e-3, 1e-9, 400).coef; });
        parallel::set_max_threads(-1);
        const double t_par =
            time_ms([&] { parallel_coef = fastec::fastec_fit(Y, design, 0.5, 1e-3, 1e-9, 400).coef; });
        rows[2] = {"fastec fit (96x800)", t_serial, t_par, serial_coef == parallel_coef};
    }

    std::printf("%-24s %12s %12s %9s %10s\n", "kernel", "serial ms", "openmp ms", "speedup",
                "identical");
    for (const Row& r : rows) {
        std::printf("%-24s %12.1f %12.1f %8.2fx %10s\n", r.name, r.serial_ms, r.parallel_ms,
                    r.serial_ms / r.parallel_ms, r.identical ? "yes" : "NO");
    }
    for (const Row& r : rows) {
        if (!r.identical) return 1;
    }
    return 0;
}
