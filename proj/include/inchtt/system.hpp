#pragma once

#include <Eigen/Dense>

#include "inchtt/common.hpp"

namespace inchtt {

inline Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

inline Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}

/// Two-level system in dimensionless form: H_s = eps sigma_z + sigma_x, the
/// bath couples through W_s = sigma_z, and the dynamics are read out through
/// the observable O_s starting from rho_s.
struct SystemParams {
    double eps = 1.0;
    double delta_flip = 1.0;
    Eigen::Matrix2cd O_s = pauli_z();
    Eigen::Matrix2cd rho_s = (Eigen::Matrix2cd() << 1, 0, 0, 0).finished();

    Eigen::Matrix2cd H_s() const { return eps * pauli_z() + delta_flip * pauli_x(); }
    Eigen::Matrix2cd W_s() const { return pauli_z(); }

    void validate() const {
        require(std::abs(rho_s.trace() - 1.0) < 1e-12, "SystemParams: rho_s must have unit trace");
        require((rho_s - rho_s.adjoint()).norm() < 1e-12, "SystemParams: rho_s must be Hermitian");
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho_s);
        require(es.eigenvalues().minCoeff() > -1e-12, "SystemParams: rho_s must be positive");
    }
};

}  // namespace inchtt
