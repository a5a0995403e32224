#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "inchtt/inchworm.hpp"

namespace inchtt {

/// Schroedinger-picture maps on row-major vectorized 2x2 density matrices,
/// one per grid step: unvec(maps[k] * vec(rho0)) = rho(k dt). maps[0] = Id.
struct DynamicalMaps {
    double dt = 0.0;
    std::vector<Eigen::Matrix4cd> maps;

    std::size_t k_max() const { return maps.empty() ? 0 : maps.size() - 1; }
};

/// Memory kernel in discrete form: tensors[j-1] = T_j, j = 1..K_max, with
/// E_k = sum_{j<=k} T_j E_{k-j} exact for k <= K_max.
struct TransferTensors {
    double dt = 0.0;
    std::vector<Eigen::Matrix4cd> tensors;

    std::size_t k_max() const { return tensors.size(); }
};

inline Eigen::Vector4cd vec_rm(const Eigen::Matrix2cd& A) {
    Eigen::Vector4cd v;
    v << A(0, 0), A(0, 1), A(1, 0), A(1, 1);
    return v;
}

inline Eigen::Matrix2cd unvec_rm(const Eigen::Vector4cd& v) {
    Eigen::Matrix2cd A;
    A << v(0), v(1), v(2), v(3);
    return A;
}

/// Permutation with vec_rm(A^T) = swap * vec_rm(A); its own inverse.
inline Eigen::Matrix4cd vec_transpose_swap() {
    Eigen::Matrix4cd S = Eigen::Matrix4cd::Zero();
    S(0, 0) = S(3, 3) = 1.0;
    S(1, 2) = S(2, 1) = 1.0;
    return S;
}

/// Solves the propagator table once per matrix-unit observable E_ab, indexed
/// ab = 2a+b. Conjugate reuse is forced off: its Hermitization step is only
/// conjugate-linear, and the map construction needs the table to be exactly
/// linear in the observable so the four runs span every observable.
inline std::array<PropagatorTable, 4> basis_runs(SystemParams sys, const BifSet& bifs,
                                                 std::size_t N, int M, double dt,
                                                 SolverOptions opt = {}) {
    opt.reuse_conjugate = false;
    std::array<PropagatorTable, 4> out{PropagatorTable(N, dt), PropagatorTable(N, dt),
                                       PropagatorTable(N, dt), PropagatorTable(N, dt)};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            sys.O_s = Eigen::Matrix2cd::Zero();
            sys.O_s(a, b) = 1.0;
            out[static_cast<std::size_t>(2 * a + b)] = solve_propagators(sys, bifs, N, M, dt, opt);
        }
    return out;
}

/// Heisenberg map at step k read straight off the tables: column 2a+b is
/// vec_rm(G^{E_ab}(-k dt, k dt)), so vec_rm(Phi_k[O]) = phi * vec_rm(O).
inline Eigen::Matrix4cd heisenberg_map(const std::array<PropagatorTable, 4>& runs,
                                       std::size_t k) {
    const LabelGrid& g = runs[0].grid();
    Eigen::Matrix4cd phi;
    for (std::size_t col = 0; col < 4; ++col)
        phi.col(static_cast<Eigen::Index>(col)) =
            vec_rm(runs[col].at(g.label_neg(-static_cast<std::ptrdiff_t>(k)),
                                g.label_pos(static_cast<std::ptrdiff_t>(k))));
    return phi;
}

/// Trace-duals the Heisenberg maps into Schroedinger-picture dynamical maps:
/// tr(unvec(E_k v) O) = tr(unvec(v) Phi_k[O]) for all v, O gives
/// E_k = S Phi_k^T S with S the transpose swap.
inline DynamicalMaps dynamical_maps(const std::array<PropagatorTable, 4>& runs,
                                    std::size_t k_max) {
    const LabelGrid& g = runs[0].grid();
    for (const PropagatorTable& t : runs)
        require(t.N() == runs[0].N() && t.dt() == runs[0].dt(),
                "dynamical_maps: runs disagree on the grid");
    require(k_max <= g.N, "dynamical_maps: horizon exceeds the table");
    const Eigen::Matrix4cd S = vec_transpose_swap();
    DynamicalMaps out;
    out.dt = runs[0].dt();
    out.maps.reserve(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k)
        out.maps.push_back(S * heisenberg_map(runs, k).transpose() * S);
    return out;
}

/// Forward substitution of E_k = sum_{j<=k} T_j E_{k-j}; explicit because
/// E_0 is the identity.
inline TransferTensors learn_transfer_tensors(const DynamicalMaps& maps) {
    require(maps.k_max() >= 1, "learn_transfer_tensors: need at least one step");
    TransferTensors out;
    out.dt = maps.dt;
    out.tensors.reserve(maps.k_max());
    for (std::size_t k = 1; k <= maps.k_max(); ++k) {
        Eigen::Matrix4cd t = maps.maps[k];
        for (std::size_t j = 1; j < k; ++j) t -= out.tensors[j - 1] * maps.maps[k - j];
        out.tensors.push_back(t);
    }
    return out;
}

/// Steps rho forward n_steps times with memory min(k, K_max); for
/// k <= K_max this reproduces unvec(E_k vec(rho0)) exactly.
inline std::vector<Eigen::Matrix2cd> propagate(const TransferTensors& T,
                                               const Eigen::Matrix2cd& rho0,
                                               std::size_t n_steps) {
    require(n_steps >= 1, "propagate: need at least one step");
    require(T.k_max() >= 1, "propagate: empty memory");
    std::vector<Eigen::Vector4cd> hist;
    hist.reserve(n_steps + 1);
    hist.push_back(vec_rm(rho0));
    for (std::size_t k = 1; k <= n_steps; ++k) {
        Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
        const std::size_t depth = std::min(k, T.k_max());
        for (std::size_t j = 1; j <= depth; ++j) v += T.tensors[j - 1] * hist[k - j];
        hist.push_back(v);
    }
    std::vector<Eigen::Matrix2cd> out;
    out.reserve(hist.size());
    for (const Eigen::Vector4cd& v : hist) out.push_back(unvec_rm(v));
    return out;
}

inline std::vector<cplx> observable_series(const std::vector<Eigen::Matrix2cd>& rhos,
                                           const Eigen::Matrix2cd& O) {
    std::vector<cplx> out;
    out.reserve(rhos.size());
    for (const Eigen::Matrix2cd& rho : rhos) out.push_back((rho * O).trace());
    return out;
}

/// Flat binary block: uint64 count, then 4x4 complex matrices row-major.
inline void ttm_write(std::ostream& os, const TransferTensors& T) {
    const auto count = static_cast<std::uint64_t>(T.k_max());
    os.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const Eigen::Matrix4cd& t : T.tensors)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const cplx v = t(i, j);
                os.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    if (!os) throw std::runtime_error("ttm_write: stream failure");
}

inline TransferTensors ttm_read(std::istream& is) {
    std::uint64_t count = 0;
    is.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!is) throw std::runtime_error("ttm_read: truncated header");
    TransferTensors T;
    T.tensors.resize(count);
    for (Eigen::Matrix4cd& t : T.tensors)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cplx v;
                is.read(reinterpret_cast<char*>(&v), sizeof(v));
                if (!is) throw std::runtime_error("ttm_read: truncated payload");
                t(i, j) = v;
            }
    return T;
}

/// Writes the binary block plus a key = value sidecar at path + ".meta"
/// carrying everything the block itself does not (step size, extras).
inline void ttm_save(const std::string& path, const TransferTensors& T,
                     const std::map<std::string, std::string>& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("ttm_save: cannot open " + path);
    ttm_write(os, T);
    os.close();
    std::ofstream meta(path + ".meta");
    if (!meta) throw std::runtime_error("ttm_save: cannot open " + path + ".meta");
    meta << "format = ttm-flat-v1\n";
    meta << "k_max = " << T.k_max() << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", T.dt);
    meta << "dt = " << buf << "\n";
    for (const auto& [key, value] : extra) meta << key << " = " << value << "\n";
    if (!meta) throw std::runtime_error("ttm_save: metadata write failure");
}

inline TransferTensors ttm_load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("ttm_load: cannot open " + path);
    TransferTensors T = ttm_read(is);
    std::ifstream meta(path + ".meta");
    if (!meta) throw std::runtime_error("ttm_load: missing " + path + ".meta");
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key == "dt") T.dt = std::stod(value);
        if (key == "k_max")
            require(std::stoull(value) == T.k_max(), "ttm_load: metadata disagrees with block");
    }
    return T;
}

}  // namespace inchtt
