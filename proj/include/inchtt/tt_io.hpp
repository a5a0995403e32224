#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "inchtt/tensor_train.hpp"

namespace inchtt {

// Binary TT format: magic "BIFTT001", u64 core count d, then d shape triples
// (u64 r_{j-1}, u64 n_j, u64 r_j), then each core's entries as little-endian
// f64 (re, im) pairs with the left bond slowest and the right bond fastest.
static_assert(std::endian::native == std::endian::little,
              "TT serialization assumes a little-endian host");

inline constexpr char tt_magic[8] = {'B', 'I', 'F', 'T', 'T', '0', '0', '1'};

inline void tt_write(std::ostream& os, const TensorTrain& X) {
    os.write(tt_magic, 8);
    const std::uint64_t d = X.order();
    os.write(reinterpret_cast<const char*>(&d), 8);
    for (std::size_t j = 0; j < d; ++j) {
        const std::uint64_t shape[3] = {X.core(j).rl, X.core(j).n, X.core(j).rr};
        os.write(reinterpret_cast<const char*>(shape), 24);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const TTCore& c = X.core(j);
        os.write(reinterpret_cast<const char*>(c.a.data()),
                 static_cast<std::streamsize>(c.a.size() * sizeof(cplx)));
    }
    if (!os) throw std::runtime_error("tt_write: stream failure");
}

inline TensorTrain tt_read(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, tt_magic, 8) != 0)
        throw std::runtime_error("tt_read: bad magic");
    std::uint64_t d = 0;
    is.read(reinterpret_cast<char*>(&d), 8);
    if (!is || d == 0 || d > 64) throw std::runtime_error("tt_read: bad core count");
    std::vector<TTCore> cores;
    cores.reserve(d);
    for (std::uint64_t j = 0; j < d; ++j) {
        std::uint64_t shape[3];
        is.read(reinterpret_cast<char*>(shape), 24);
        if (!is) throw std::runtime_error("tt_read: truncated shape table");
        cores.emplace_back(shape[0], shape[1], shape[2]);
    }
    for (TTCore& c : cores) {
        is.read(reinterpret_cast<char*>(c.a.data()),
                static_cast<std::streamsize>(c.a.size() * sizeof(cplx)));
        if (!is) throw std::runtime_error("tt_read: truncated core data");
    }
    return TensorTrain(std::move(cores));
}

inline void tt_save(const std::string& path, const TensorTrain& X) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("tt_save: cannot open " + path);
    tt_write(os, X);
}

inline TensorTrain tt_load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("tt_load: cannot open " + path);
    return tt_read(is);
}

}  // namespace inchtt
