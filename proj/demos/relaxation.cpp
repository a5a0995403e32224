// Spin relaxation at three coupling strengths. Weak coupling keeps the
// coherent sigma_z oscillation; strong coupling overdamps it.
#include <cstdio>
#include <vector>

#include <inchtt/harness.hpp>

int main() {
    using namespace inchtt;

    RunConfig cfg;
    cfg.eps = 1.0;
    cfg.beta = 5.0;
    cfg.dt = 0.2;
    cfg.steps = 25;
    cfg.order = 3;
    cfg.round_tol = 1e-8;
    cfg.max_bond = 40;
    cfg.svd_threshold = 1e-8;

    const std::vector<double> couplings = {0.1, 0.4, 0.8};
    std::vector<std::vector<cplx>> traces;
    for (const double xi : couplings) {
        cfg.xi = xi;
        traces.push_back(solve_trace(cfg));
    }

    std::printf("%8s", "t");
    for (const double xi : couplings) std::printf("   xi=%-9.2f", xi);
    std::printf("\n");
    for (std::size_t k = 0; k < traces.front().size(); ++k) {
        std::printf("%8.2f", cfg.dt * static_cast<double>(k));
        for (const auto& trace : traces) std::printf("   %+12.8f", trace[k].real());
        std::printf("\n");
    }
    return 0;
}
