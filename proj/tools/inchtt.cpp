#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <inchtt/harness.hpp>

namespace {

using namespace inchtt;

void print_trace_summary(const std::vector<cplx>& trace, double dt) {
    if (trace.empty()) return;
    const std::size_t last = trace.size() - 1;
    std::printf("t = %-8g <O> = % .12f  (imag % .3e)\n", dt * static_cast<double>(last),
                trace[last].real(), trace[last].imag());
}

int dispatch(const std::string& command, RunConfig cfg) {
    namespace fs = std::filesystem;
    if (command == "ttm") cfg.ttm_enabled = true;
    cfg.validate();

    if (command == "run" || command == "ttm") {
        const RunResult result = run(cfg, &std::cerr);
        print_trace_summary(result.trace, cfg.dt);
        if (!result.ttm_trace.empty()) {
            std::printf("transfer-tensor reconstruction to t = %g:\n",
                        cfg.dt * static_cast<double>(result.ttm_trace.size() - 1));
            print_trace_summary(result.ttm_trace, cfg.dt);
        }
        for (const auto& f : result.files) std::printf("wrote %s\n", f.string().c_str());
        return 0;
    }
    if (command == "converge") {
        const auto cells = convergence_suite(cfg, {{cfg.xi, cfg.order}}, &std::cerr);
        fs::create_directories(cfg.out_dir);
        const fs::path path = fs::path(cfg.out_dir) / "convergence.csv";
        std::vector<std::vector<double>> rows;
        for (const auto& c : cells) {
            rows.push_back({c.xi, static_cast<double>(c.order), c.p});
            std::printf("xi = %-6g order = %d  p = %.4f\n", c.xi, c.order, c.p);
        }
        std::ofstream os(path);
        write_csv(os, {"xi", "order", "p"}, rows);
        std::printf("wrote %s\n", path.string().c_str());
        return 0;
    }
    if (command == "bench") {
        const auto points = benchmark_suite(cfg, &std::cerr);
        fs::create_directories(cfg.out_dir);
        const fs::path path = fs::path(cfg.out_dir) / "bench.csv";
        std::ofstream os(path);
        os << "method,m,steps,seconds_per_eval,censored\n";
        for (const auto& p : points) {
            os << p.method << ',' << p.m << ',' << p.steps << ','
               << format_sci(p.seconds_per_eval) << ',' << (p.censored ? 1 : 0) << '\n';
            std::printf("%-7s m = %d  %s\n", p.method.c_str(), p.m,
                        p.censored ? "censored" : format_sci(p.seconds_per_eval).c_str());
        }
        std::printf("wrote %s\n", path.string().c_str());
        return 0;
    }
    // build-bif: materialize the cache without running the solver.
    if (cfg.cache_dir.empty()) throw config_error("build-bif requires a cache directory");
    const BifSet bifs = assemble_bifs(cfg, &std::cerr);
    for (int m = 1; m <= cfg.order; m += 2) {
        if (cfg.xi == 0.0) break;
        std::printf("order %d bonds:", m + 1);
        for (const std::size_t b : bifs.at(m).tt.bond_dims()) std::printf(" %zu", b);
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-boson dynamics via inchworm integro-differential stepping\n"
                 "with tensor-train compressed bath influence functionals"};
    app.require_subcommand(1);

    std::string config_path, out_dir, cache_dir;
    unsigned threads = 0;
    std::size_t max_bond = 0, steps = 0;
    double round_tol = 0.0, dt = 0.0;
    int order = 0;
    auto* opt_config = app.add_option("--config", config_path, "configuration file")
                           ->check(CLI::ExistingFile);
    auto* opt_out = app.add_option("--out", out_dir, "output directory");
    auto* opt_cache = app.add_option("--cache", cache_dir, "influence-functional cache directory");
    auto* opt_threads = app.add_option("--threads", threads, "solver threads");
    auto* opt_max_bond = app.add_option("--max-bond", max_bond, "rounding bond cap (0 = none)");
    auto* opt_round_tol = app.add_option("--round-tol", round_tol, "rounding tolerance");
    auto* opt_order = app.add_option("--order", order, "expansion truncation (odd)");
    auto* opt_steps = app.add_option("--steps", steps, "grid steps per branch");
    auto* opt_dt = app.add_option("--dt", dt, "time step");

    for (const auto& [name, help] :
         std::initializer_list<std::pair<const char*, const char*>>{
             {"run", "solve and write trace.csv"},
             {"converge", "observed order from a dt, 2dt, 4dt refinement"},
             {"bench", "time compressed vs brute-force integral evaluation"},
             {"ttm", "run plus transfer-tensor learning and reconstruction"},
             {"build-bif", "build or refresh cached influence functionals"}})
        app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = opt_config->count() ? load_config(config_path) : RunConfig{};
        if (opt_out->count()) cfg.out_dir = out_dir;
        if (opt_cache->count()) cfg.cache_dir = cache_dir;
        if (opt_threads->count()) cfg.threads = threads;
        if (opt_max_bond->count()) cfg.max_bond = max_bond;
        if (opt_round_tol->count()) cfg.round_tol = round_tol;
        if (opt_order->count()) cfg.order = order;
        if (opt_steps->count()) cfg.steps = steps;
        if (opt_dt->count()) cfg.dt = dt;
        return dispatch(app.get_subcommands().front()->get_name(), std::move(cfg));
    } catch (const config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    }
}
