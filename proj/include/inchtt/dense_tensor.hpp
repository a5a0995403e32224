#pragma once

#include <numeric>

#include "inchtt/common.hpp"

namespace inchtt {

/// Hard cap on materialized tensor entries; trips before memory exhaustion.
inline constexpr std::size_t default_size_guard = 10'000'000;

/// Dense complex tensor with row-major layout (last index fastest).
/// Used as TT-SVD input and as the oracle representation in tests; guarded
/// against accidental exponential blow-up.
class DenseTensor {
public:

    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::size_t> dims, std::size_t guard = default_size_guard)
        : dims_(std::move(dims)) {
        std::size_t total = 1;
        for (std::size_t n : dims_) {
            require(n > 0, "DenseTensor: zero mode dimension");
            if (total > guard / n) throw size_guard_error("DenseTensor: size guard exceeded");
            total *= n;
        }
        data_.assign(total, cplx{0.0, 0.0});
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t order() const { return dims_.size(); }
    std::size_t size() const { return data_.size(); }

    cplx* data() { return data_.data(); }
    const cplx* data() const { return data_.data(); }

    std::size_t offset(const std::vector<std::size_t>& idx) const {
        require(idx.size() == dims_.size(), "DenseTensor: index order mismatch");
        std::size_t off = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (idx[j] >= dims_[j]) throw std::out_of_range("DenseTensor: index out of range");
            off = off * dims_[j] + idx[j];
        }
        return off;
    }

    cplx& at(const std::vector<std::size_t>& idx) { return data_[offset(idx)]; }
    const cplx& at(const std::vector<std::size_t>& idx) const { return data_[offset(idx)]; }

    cplx& operator[](std::size_t flat) { return data_[flat]; }
    const cplx& operator[](std::size_t flat) const { return data_[flat]; }

    /// Decodes a flat offset into a multi-index (row-major).
    std::vector<std::size_t> unflatten(std::size_t flat) const {
        std::vector<std::size_t> idx(dims_.size());
        for (std::size_t j = dims_.size(); j-- > 0;) {
            idx[j] = flat % dims_[j];
            flat /= dims_[j];
        }
        return idx;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (const cplx& v : data_) s += std::norm(v);
        return std::sqrt(s);
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<cplx> data_;
};

}  // namespace inchtt
