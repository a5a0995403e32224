// Transfer-tensor memory of the spin-boson map. The tensor norms decay with
// lag, and a propagation that keeps only a short memory drifts away from one
// that keeps the full history.
#include <algorithm>
#include <cstdio>

#include <inchtt/bath.hpp>
#include <inchtt/bif.hpp>
#include <inchtt/harness.hpp>
#include <inchtt/ttm.hpp>

int main() {
    using namespace inchtt;

    RunConfig cfg;
    cfg.eps = 1.0;
    cfg.beta = 5.0;
    cfg.xi = 0.4;
    cfg.dt = 0.2;
    cfg.steps = 30;
    cfg.order = 1;
    cfg.round_tol = 1e-8;
    cfg.svd_threshold = 1e-8;

    const SystemParams sys = cfg.system();
    const BifSet bifs = assemble_bifs(cfg);
    const auto runs = basis_runs(sys, bifs, cfg.steps, cfg.order, cfg.dt);

    const TransferTensors full = learn_transfer_tensors(dynamical_maps(runs, cfg.steps));
    std::printf("memory kernel norms (dt = %g):\n", cfg.dt);
    for (std::size_t j = 1; j <= full.k_max(); ++j)
        std::printf("  ||T_%-2zu|| = %.3e\n", j, full.tensors[j - 1].norm());

    const std::size_t horizon = 2 * cfg.steps;
    const TransferTensors  brief = learn_transfer_tensors(dynamical_maps(runs, 5));
    const auto rho0 = cfg.system().rho_s;
    const auto z_full = observable_series(propagate(full, rho0, horizon), pauli_z());
    const auto z_brief = observable_series(propagate(brief, rho0, horizon), pauli_z());

    double gap = 0.0;
    std::printf("\n%8s  %14s  %14s\n", "t", "full memory", "memory K=5");
    for (std::size_t k = 0; k <= horizon; k += 5) {
        std::printf("%8.2f  %+14.8f  %+14.8f\n", cfg.dt * static_cast<double>(k),
                    z_full[k].real(), z_brief[k].real());
        gap = std::max(gap, std::abs(z_full[k].real() - z_brief[k].real()));
    }
    std::printf("\nmax gap over the printed rows: %.3e\n", gap);
    return 0;
}
