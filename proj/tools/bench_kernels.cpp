// Compares the OpenMP kernels against their serial reference implementations:
// wall time by default, bit-exact parity with --check.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>

#include "svarfm/discovery.hpp"
#include "svarfm/flow_match.hpp"

using namespace svarfm;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const bool check = argc > 1 && std::strcmp(argv[1], "--check") == 0;

    Rng rng = make_rng(20240401, 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd sample(5000);
    for (Eigen::Index k = 0; k < sample.size(); ++k) sample(k) = gauss(rng);

    CfmConfig cfg;
    cfg.x_dim = 2;
    cfg.cond_dim = 1;
    cfg.steps = 300;
    CfmModel model = CfmModel::init(cfg, 7);
    Eigen::MatrixXd x1(512, 2), cond(512, 1);
    for (Eigen::Index r = 0; r < x1.rows(); ++r) {
        cond(r, 0) = gauss(rng);
        x1(r, 0) = 2.0 * cond(r, 0) + 0.1 * gauss(rng);
        x1(r, 1) = -cond(r, 0) + 0.1 * gauss(rng);
    }
    train_cfm(model, x1, cond, 11);
    Eigen::VectorXd c(1);
    c << 0.5;

    if (check) {
        const double se_par = bootstrap_se(sample, 2000, 42);
        const double se_ser = bootstrap_se_serial(sample, 2000, 42);
        const Eigen::MatrixXd s_par = sample_flow(model, c, 400, 50, 99);
        const Eigen::MatrixXd s_ser = sample_flow_serial(model, c, 400, 50, 99);
        const bool boot_ok = se_par == se_ser;
        const bool flow_ok = (s_par - s_ser).cwiseAbs().maxCoeff() == 0.0;
        std::cout << "bootstrap_se parity: " << (boot_ok ? "exact" : "MISMATCH") << "\n";
        std::cout << "sample_flow parity:  " << (flow_ok ? "exact" : "MISMATCH") << "\n";
        return boot_ok && flow_ok ? 0 : 1;
    }

    const double t_boot_ser = time_of([&] { bootstrap_se_serial(sample, 20000, 42); });
    const double t_boot_par = time_of([&] { bootstrap_se(sample, 20000, 42); });
    const double t_flow_ser = time_of([&] { sample_flow_serial(model, c, 2000, 100, 99); });
    const double t_flow_par = time_of([&] { sample_flow(model, c, 2000, 100, 99); });

    std::cout << "kernel          serial      parallel    speedup\n";
    std::cout << "bootstrap_se    " << t_boot_ser << "  " << t_boot_par << "  "
              << t_boot_ser / t_boot_par << "x\n";
    std::cout << "sample_flow     " << t_flow_ser << "  " << t_flow_par << "  "
              << t_flow_ser / t_flow_par << "x\n";
    return 0;
}
