#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "inchtt/bath.hpp"
#include "inchtt/bif.hpp"
#include "inchtt/inchworm.hpp"
#include "inchtt/tt_io.hpp"
#include "inchtt/ttm.hpp"

namespace inchtt {

/// Configuration problems map to exit code 2 at the CLI boundary, numerical
/// aborts to 3.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // [system]
    double eps = 1.0;
    double delta_flip = 1.0;
    std::string observable = "sigma_z";
    std::string initial_state = "up";
    // [bath]
    double beta = 5.0;
    double xi = 0.2;
    std::size_t modes = 400;
    double omega_c = 2.5;
    double omega_max = 10.0;
    // [numerics]
    double dt = 0.2;
    std::size_t steps = 20;
    int order = 3;
    double round_tol = 1e-8;
    std::size_t max_bond = 0;
    double svd_threshold = 1e-12;
    unsigned threads = 1;
    // [ttm]
    bool ttm_enabled = false;
    std::size_t ttm_k_max = 10;
    std::size_t ttm_horizon = 40;
    // [io]
    std::string out_dir = "out";
    std::string cache_dir;
    bool deterministic = true;

    void validate() const {
        const auto check = [](bool ok, const std::string& msg) {
            if (!ok) throw config_error("config: " + msg);
        };
        check(observable == "sigma_z" || observable == "sigma_x",
              "observable must be sigma_z or sigma_x");
        check(initial_state == "up" || initial_state == "down" || initial_state == "mixed",
              "initial_state must be up, down, or mixed");
        check(beta > 0.0, "beta must be positive");
        check(xi >= 0.0, "xi must be nonnegative");
        check(modes >= 1, "modes must be >= 1");
        check(omega_c > 0.0, "omega_c must be positive");
        check(omega_max > 0.0, "omega_max must be positive");
        check(dt > 0.0, "dt must be positive");
        check(steps >= 1, "steps must be >= 1");
        check(order >= 1 && order % 2 == 1, "order must be odd");
        check(round_tol >= 0.0, "round_tol must be nonnegative");
        check(svd_threshold > 0.0 && svd_threshold < 1.0, "svd_threshold must be in (0, 1)");
        check(threads >= 1, "threads must be >= 1");
        if (ttm_enabled) {
            check(ttm_k_max >= 1 && ttm_k_max <= steps, "ttm k_max must be in [1, steps]");
            check(ttm_horizon >= 1, "ttm horizon must be >= 1");
        }
        check(!out_dir.empty(), "out_dir must not be empty");
    }

    SystemParams system() const {
        SystemParams sys;
        sys.eps = eps;
        sys.delta_flip = delta_flip;
        sys.O_s = observable == "sigma_x" ? pauli_x() : pauli_z();
        if (initial_state == "up")
            sys.rho_s = (Eigen::Matrix2cd() << 1, 0, 0, 0).finished();
        else if (initial_state == "down")
            sys.rho_s = (Eigen::Matrix2cd() << 0, 0, 0, 1).finished();
        else
            sys.rho_s = 0.5 * Eigen::Matrix2cd::Identity();
        return sys;
    }

    BathParams bath(double xi_value) const {
        BathParams p;
        p.beta = beta;
        p.xi = xi_value;
        p.L = modes;
        p.omega_c = omega_c;
        p.omega_max = omega_max;
        p.dt = dt;
        p.N = steps;
        return p;
    }

    RoundingPolicy policy() const {
        RoundingPolicy p;
        if (round_tol > 0.0) p.tol = round_tol;
        if (max_bond > 0) p.max_bond = max_bond;
        return p;
    }
};

namespace detail {

inline std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("config: bad number for " + key + ": '" + v + "'");
    }
}

inline std::size_t parse_size(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size() || x < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw config_error("config: bad count for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("config: bad flag for " + key + ": '" + v + "'");
}

}  // namespace detail

/// Sectioned key = value text; '#' and ';' start comments, unknown keys are
/// rejected so typos cannot silently fall back to defaults.
inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = detail::strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config: unterminated section at line " +
                                   std::to_string(line_no));
            section = detail::strip(line.substr(1, line.size() - 2));
            if (section != "system" && section != "bath" && section != "numerics" &&
                section != "ttm" && section != "io")
                throw config_error("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config: expected key = value at line " + std::to_string(line_no));
        const std::string key = section + "." + detail::strip(line.substr(0, eq));
        const std::string value = detail::strip(line.substr(eq + 1));

        if (key == "system.eps") cfg.eps = detail::parse_double(value, key);
        else if (key == "system.delta") cfg.delta_flip = detail::parse_double(value, key);
        else if (key == "system.observable") cfg.observable = value;
        else if (key == "system.initial_state") cfg.initial_state = value;
        else if (key == "bath.beta") cfg.beta = detail::parse_double(value, key);
        else if (key == "bath.xi") cfg.xi = detail::parse_double(value, key);
        else if (key == "bath.modes") cfg.modes = detail::parse_size(value, key);
        else if (key == "bath.omega_c") cfg.omega_c = detail::parse_double(value, key);
        else if (key == "bath.omega_max") cfg.omega_max = detail::parse_double(value, key);
        else if (key == "numerics.dt") cfg.dt = detail::parse_double(value, key);
        else if (key == "numerics.steps") cfg.steps = detail::parse_size(value, key);
        else if (key == "numerics.order")
            cfg.order = static_cast<int>(detail::parse_size(value, key));
        else if (key == "numerics.round_tol") cfg.round_tol = detail::parse_double(value, key);
        else if (key == "numerics.max_bond") cfg.max_bond = detail::parse_size(value, key);
        else if (key == "numerics.svd_threshold")
            cfg.svd_threshold = detail::parse_double(value, key);
        else if (key == "numerics.threads")
            cfg.threads = static_cast<unsigned>(detail::parse_size(value, key));
        else if (key == "ttm.enabled") cfg.ttm_enabled = detail::parse_bool(value, key);
        else if (key == "ttm.k_max") cfg.ttm_k_max = detail::parse_size(value, key);
        else if (key == "ttm.horizon") cfg.ttm_horizon = detail::parse_size(value, key);
        else if (key == "io.out_dir") cfg.out_dir = value;
        else if (key == "io.cache_dir") cfg.cache_dir = value;
        else if (key == "io.deterministic") cfg.deterministic = detail::parse_bool(value, key);
        else throw config_error("config: unknown key " + key);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open " + path);
    return parse_config(is);
}

inline std::string format_sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    for (std::size_t j = 0; j < header.size(); ++j)
        os << (j ? "," : "") << header[j];
    os << '\n';
    for (const auto& row : rows) {
        require(row.size() == header.size(), "write_csv: ragged row");
        for (std::size_t j = 0; j < row.size(); ++j)
            os << (j ? "," : "") << format_sci(row[j]);
        os << '\n';
    }
    if (!os) throw std::runtime_error("write_csv: stream failure");
}

inline void write_trace_csv(const std::filesystem::path& path, double dt,
                            const std::vector<cplx>& trace) {
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k)
        rows.push_back({dt * static_cast<double>(k), trace[k].real(), trace[k].imag()});
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    write_csv(os, {"t", "re", "im"}, rows);
}

/// Cache identity of an influence-functional file: everything the tensor
/// depends on except xi, because cached tensors are built at xi = 1 and
/// rescaled on load.
inline std::string bif_cache_tag(const RunConfig& cfg, int m) {
    std::ostringstream os;
    os << "beta=" << format_sci(cfg.beta) << ";L=" << cfg.modes
       << ";omega_c=" << format_sci(cfg.omega_c) << ";omega_max=" << format_sci(cfg.omega_max)
       << ";dt=" << format_sci(cfg.dt) << ";N=" << cfg.steps << ";m=" << m
       << ";tol=" << format_sci(cfg.round_tol) << ";max_bond=" << cfg.max_bond
       << ";svd=" << format_sci(cfg.svd_threshold);
    return os.str();
}

inline std::string bif_cache_key(const RunConfig& cfg, int m) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(bif_cache_tag(cfg, m))));
    return buf;
}

namespace detail {

inline void log_line(std::ostream* log, const std::string& msg) {
    if (log) *log << msg << '\n';
}

inline BifTT build_bif_checked(const TensorTrain& b_xi1, int m, const RunConfig& cfg) {
    try {
        return build_bif_tt(b_xi1, m + 1, cfg.policy(), BifGrid{cfg.dt, cfg.steps});
    } catch (const size_guard_error& e) {
        throw size_guard_error("influence functional of order " + std::to_string(m + 1) + ": " +
                               e.what());
    }
}

}  // namespace detail

struct CachedBif {
    BifTT bif;  // built at xi_ref = 1
    bool hit = false;
};

/// Loads the xi = 1 tensor for dimension m from the cache, rebuilding (and
/// rewriting) on any mismatch or read failure.
inline CachedBif load_or_build_bif(const RunConfig& cfg, const TensorTrain& b_xi1, int m,
                                   std::ostream* log = nullptr) {
    if (cfg.cache_dir.empty())
        return {detail::build_bif_checked(b_xi1, m, cfg), false};

    namespace fs = std::filesystem;
    const fs::path dir(cfg.cache_dir);
    fs::create_directories(dir);
    const fs::path file = dir / ("bif_m" + std::to_string(m) + "_" + bif_cache_key(cfg, m) + ".tt");
    const fs::path sidecar = file.string() + ".json";

    if (fs::exists(file)) {
        try {
            std::ifstream meta_in(sidecar);
            if (!meta_in) throw std::runtime_error("missing sidecar");
            const auto meta = nlohmann::json::parse(meta_in);
            if (meta.at("tag").get<std::string>() != bif_cache_tag(cfg, m))
                throw std::runtime_error("tag mismatch");
            BifTT bif;
            bif.tt = tt_load(file.string());
            bif.grid = BifGrid{cfg.dt, cfg.steps};
            bif.m = m;
            bif.xi_ref = 1.0;
            bif.policy = cfg.policy();
            require(bif.tt.order() == static_cast<std::size_t>(m) + 1, "order mismatch");
            for (const std::size_t n : bif.tt.mode_dims())
                require(n == 2 * cfg.steps + 1, "mode mismatch");
            detail::log_line(log, "cache hit: " + file.filename().string());
            return {std::move(bif), true};
        } catch (const std::exception& e) {
            detail::log_line(log, std::string("cache corrupt (") + e.what() + "), rebuilding: " +
                                      file.filename().string());
        }
    }

    CachedBif out{detail::build_bif_checked(b_xi1, m, cfg), false};
    tt_save(file.string(), out.bif.tt);
    nlohmann::ordered_json meta;
    meta["format"] = "bif-cache-v1";
    meta["tag"] = bif_cache_tag(cfg, m);
    meta["m"] = m;
    meta["xi_ref"] = 1.0;
    std::ofstream meta_out(sidecar);
    meta_out << meta.dump(2) << '\n';
    if (!meta_out) throw std::runtime_error("cannot write " + sidecar.string());
    detail::log_line(log, "cache store: " + file.filename().string());
    return out;
}

/// Builds the working influence-functional set at the configured coupling.
/// xi = 0 decouples the bath entirely, so the set is empty and the solver
/// runs free dynamics.
inline BifSet assemble_bifs(const RunConfig& cfg, std::ostream* log = nullptr,
                            bool* all_hits = nullptr) {
    BifSet set;
    if (all_hits) *all_hits = false;
    if (cfg.xi == 0.0) return set;
    const BathModes modes = ohmic_discretize(cfg.bath(1.0));
    const TpcMatrix B = tpc_matrix(modes, cfg.beta, cfg.dt, cfg.steps);
    const TensorTrain b_xi1 = tpc_factorize(B, cfg.svd_threshold).tt;
    bool hits = true;
    for (int m = 1; m <= cfg.order; m += 2) {
        CachedBif cached = load_or_build_bif(cfg, b_xi1, m, log);
        hits = hits && cached.hit;
        set.add(scale_xi(cached.bif, cfg.xi));
    }
    if (all_hits) *all_hits = hits;
    return set;
}

/// Solver pipeline without file output; run() adds the artifacts.
inline std::vector<cplx> solve_trace(const RunConfig& cfg, std::ostream* log = nullptr,
                                     bool* cache_hits = nullptr) {
    cfg.validate();
    const BifSet bifs = assemble_bifs(cfg, log, cache_hits);
    SolverOptions opt;
    opt.threads = cfg.threads;
    const SystemParams sys = cfg.system();
    const PropagatorTable table =
        solve_propagators(sys, bifs, cfg.steps, cfg.order, cfg.dt, opt);
    return observable_trace(table, sys.rho_s);
}

struct RunResult {
    std::vector<cplx> trace;
    std::vector<cplx> ttm_trace;
    bool bif_cache_hit = false;
    double seconds = 0.0;
    std::vector<std::filesystem::path> files;
};

/// Full config-driven run: cached influence functionals, solve, optional
/// transfer-tensor stage, CSV traces plus a structured run record.
inline RunResult run(const RunConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    RunResult result;
    const BifSet bifs = assemble_bifs(cfg, log, &result.bif_cache_hit);
    const SystemParams sys = cfg.system();
    SolverOptions opt;
    opt.threads = cfg.threads;
    const PropagatorTable table =
        solve_propagators(sys, bifs, cfg.steps, cfg.order, cfg.dt, opt);
    result.trace = observable_trace(table, sys.rho_s);
    write_trace_csv(out / "trace.csv", cfg.dt, result.trace);
    result.files.push_back(out / "trace.csv");

    std::vector<double> kernel_norms;
    if (cfg.ttm_enabled) {
        const auto runs = basis_runs(sys, bifs, cfg.steps, cfg.order, cfg.dt, opt);
        const DynamicalMaps maps = dynamical_maps(runs, cfg.ttm_k_max);
        TransferTensors T = learn_transfer_tensors(maps);
        T.dt = cfg.dt;
        for (const auto& t : T.tensors) kernel_norms.push_back(t.norm());
        const auto series = propagate(T, sys.rho_s, cfg.ttm_horizon);
        result.ttm_trace = observable_series(series, sys.O_s);
        write_trace_csv(out / "ttm_trace.csv", cfg.dt, result.ttm_trace);
        ttm_save((out / "kernel.ttm").string(), T,
                 {{"beta", format_sci(cfg.beta)}, {"xi", format_sci(cfg.xi)}});
        result.files.push_back(out / "ttm_trace.csv");
        result.files.push_back(out / "kernel.ttm");
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json record;
    record["system"] = {{"eps", cfg.eps},
                        {"delta", cfg.delta_flip},
                        {"observable", cfg.observable},
                        {"initial_state", cfg.initial_state}};
    record["bath"] = {{"beta", cfg.beta},
                      {"xi", cfg.xi},
                      {"modes", cfg.modes},
                      {"omega_c", cfg.omega_c},
                      {"omega_max", cfg.omega_max}};
    record["numerics"] = {{"dt", cfg.dt},          {"steps", cfg.steps},
                          {"order", cfg.order},    {"round_tol", cfg.round_tol},
                          {"max_bond", cfg.max_bond}, {"svd_threshold", cfg.svd_threshold},
                          {"threads", cfg.threads}};
    record["ttm"] = {{"enabled", cfg.ttm_enabled},
                     {"k_max", cfg.ttm_k_max},
                     {"horizon", cfg.ttm_horizon}};
    record["results"] = {{"trace_points", result.trace.size()},
                         {"bif_cache_hit", result.bif_cache_hit},
                         {"kernel_norms", kernel_norms}};
    if (!cfg.deterministic) record["timing"] = {{"seconds", result.seconds}};
    std::ofstream rec(out / "run.json");
    rec << record.dump(2) << '\n';
    if (!rec) throw std::runtime_error("cannot write run record");
    result.files.push_back(out / "run.json");
    detail::log_line(log, "run complete: " + std::to_string(result.trace.size()) + " points");
    return result;
}

struct ConvergenceCell {
    double xi = 0.0;
    int order = 1;
    double p = 0.0;
};

/// Runs each (xi, order) cell at dt, 2 dt, and 4 dt over a fixed horizon and
/// reports the observed convergence order.
inline std::vector<ConvergenceCell> convergence_suite(
    const RunConfig& base, const std::vector<std::pair<double, int>>& cells,
    std::ostream* log = nullptr) {
    base.validate();
    if (base.steps % 4 != 0) throw config_error("config: steps must be divisible by 4");
    std::vector<ConvergenceCell> out;
    for (const auto& [xi, order] : cells) {
        RunConfig fine = base;
        fine.xi = xi;
        fine.order = order;
        fine.ttm_enabled = false;
        RunConfig mid = fine, coarse = fine;
        mid.dt *= 2.0;
        mid.steps /= 2;
        coarse.dt *= 4.0;
        coarse.steps /= 4;
        const auto tr_coarse = solve_trace(coarse, log);
        const auto tr_mid = solve_trace(mid, log);
        const auto tr_fine = solve_trace(fine, log);
        const double p = convergence_order(tr_coarse, tr_mid, tr_fine);
        detail::log_line(log, "cell xi=" + format_sci(xi) + " order=" + std::to_string(order) +
                                  ": p=" + format_sci(p));
        out.push_back({xi, order, p});
    }
    return out;
}

struct BenchPoint {
    std::string method;  // "tt" or "direct"
    int m = 1;
    std::size_t steps = 0;
    double seconds_per_eval = 0.0;
    bool censored = false;
};

/// Least-squares slope of ln(y) against ln(x).
inline double log_log_slope(const std::vector<std::pair<double, double>>& xy) {
    require(xy.size() >= 2, "log_log_slope: need two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : xy) {
        require(x > 0.0 && y > 0.0, "log_log_slope: need positive data");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto n = static_cast<double>(xy.size());
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw numerical_error("log_log_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / den;
}

namespace detail {

template <typename F>
double time_eval(F&& fn) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t reps = 0;
    double elapsed = 0.0;
    do {
        fn();
        ++reps;
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < 0.05 || reps < 3);
    return elapsed / static_cast<double>(reps);
}

}  // namespace detail

/// Times one full-window integral evaluation per dimension: the compressed
/// path at steps = 20 for m in {1,3,5,7}, the brute-force path at steps = 10
/// for m in {1,3,5}. Guarded brute-force refusals come back censored.
inline std::vector<BenchPoint> benchmark_suite(const RunConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    std::vector<BenchPoint> out;
    const SystemParams sys = cfg.system();

    const auto free_table = [&](std::size_t N) {
        return solve_propagators(sys, BifSet{}, N, 1, cfg.dt);
    };

    {
        RunConfig tt_cfg = cfg;
        tt_cfg.steps = 20;
        const std::size_t N = tt_cfg.steps;
        const PropagatorTable table = free_table(N);
        const LabelGrid& g = table.grid();
        const BathModes modes = ohmic_discretize(tt_cfg.bath(tt_cfg.xi));
        const TpcMatrix B = tpc_matrix(modes, tt_cfg.beta, tt_cfg.dt, N);
        const TensorTrain b_tt = tpc_factorize(B, tt_cfg.svd_threshold).tt;
        for (const int m : {1, 3, 5, 7}) {
            const BifTT bif =
                build_bif_tt(b_tt, m + 1, tt_cfg.policy(), BifGrid{tt_cfg.dt, N}, tt_cfg.xi);
            const double sec = detail::time_eval([&] {
                eval_integral_tt(table, bif, m, g.label_neg(-static_cast<std::ptrdiff_t>(N)),
                                 g.label_pos(static_cast<std::ptrdiff_t>(N)));
            });
            detail::log_line(log, "tt m=" + std::to_string(m) + ": " + format_sci(sec) + " s");
            out.push_back({"tt", m, N, sec, false});
        }
    }
    {
        RunConfig d_cfg = cfg;
        d_cfg.steps = 10;
        const std::size_t N = d_cfg.steps;
        const PropagatorTable table = free_table(N);
        const LabelGrid& g = table.grid();
        const BathModes modes = ohmic_discretize(d_cfg.bath(d_cfg.xi));
        const TpcMatrix B = tpc_matrix(modes, d_cfg.beta, d_cfg.dt, N);
        for (const int m : {1, 3, 5}) {
            BenchPoint point{"direct", m, N, 0.0, false};
            try {
                point.seconds_per_eval = detail::time_eval([&] {
                    eval_integral_direct(table, B, m,
                                         g.label_neg(-static_cast<std::ptrdiff_t>(N)),
                                         g.label_pos(static_cast<std::ptrdiff_t>(N)));
                });
                detail::log_line(log, "direct m=" + std::to_string(m) + ": " +
                                          format_sci(point.seconds_per_eval) + " s");
            } catch (const size_guard_error&) {
                point.censored = true;
                detail::log_line(log, "direct m=" + std::to_string(m) + ": censored");
            }
            out.push_back(point);
        }
    }
    return out;
}

}  // namespace inchtt
