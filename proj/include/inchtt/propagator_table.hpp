#pragma once

#include <Eigen/Dense>

#include "inchtt/grid.hpp"

namespace inchtt {

/// Triangular table of full propagators G(l1, l2) over grid labels l1 <= l2.
/// Entries are set by the solver in span order; reading an unset entry is a
/// logic error.
class PropagatorTable {
public:
    PropagatorTable() = default;

    PropagatorTable(std::size_t N, double dt) : grid_{N, dt} {
        const std::size_t n = grid_.n_labels();
        entries_.assign(n * n, Eigen::Matrix2cd::Zero());
        present_.assign(n * n, 0);
    }

    const LabelGrid& grid() const { return grid_; }
    std::size_t N() const { return grid_.N; }
    double dt() const { return grid_.dt; }

    bool has(std::size_t l1, std::size_t l2) const { return present_[index(l1, l2)] != 0; }

    const Eigen::Matrix2cd& at(std::size_t l1, std::size_t l2) const {
        const std::size_t i = index(l1, l2);
        if (!present_[i]) throw state_error("PropagatorTable: entry (" + std::to_string(l1) +
                                            "," + std::to_string(l2) + ") not filled");
        return entries_[i];
    }

    void set(std::size_t l1, std::size_t l2, const Eigen::Matrix2cd& value) {
        const std::size_t i = index(l1, l2);
        entries_[i] = value;
        present_[i] = 1;
    }

    /// Observable series <O_s(k dt)> = tr(rho_s G(-k, k)) for k = 0..N.
    std::vector<cplx> observable_trace(const Eigen::Matrix2cd& rho_s) const {
        std::vector<cplx> out(grid_.N + 1);
        for (std::size_t k = 0; k <= grid_.N; ++k)
            out[k] = (rho_s * at(grid_.label_neg(-static_cast<int>(k)),
                                 grid_.label_pos(static_cast<int>(k))))
                         .trace();
        return out;
    }

private:
    std::size_t index(std::size_t l1, std::size_t l2) const {
        require(grid_.valid(l1) && grid_.valid(l2) && l1 <= l2,
                "PropagatorTable: labels out of order");
        return l1 * grid_.n_labels() + l2;
    }

    LabelGrid grid_;
    std::vector<Eigen::Matrix2cd> entries_;
    std::vector<char> present_;
};

/// Free-function form used by the solver API.
inline std::vector<cplx> observable_trace(const PropagatorTable& table,
                                          const Eigen::Matrix2cd& rho_s) {
    return table.observable_trace(rho_s);
}

}  // namespace inchtt
