#include "syncobs/ekf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace syncobs {

namespace {

template <typename M>
void symmetrize(M& m) {
    m = 0.5 * (m + m.transpose()).eval();
}

template <typename M>
void require_psd(const M& m, const char* name, bool strict) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument(std::string(name) + " must be symmetric");
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<M>(m).eigenvalues().minCoeff();
    if (strict ? !(min_eig > 0.0) : !(min_eig >= -1e-12)) {
        throw std::invalid_argument(std::string(name) + (strict ? " must be positive definite"
                                                               : " must be positive semi-definite"));
    }
}

Matrix35 output_jacobian() {
    Matrix35 C = Matrix35::Zero();
    C.leftCols<3>().setIdentity();
    return C;
}

} // namespace

std::string_view to_string(CovarianceForm form) {
    return form == CovarianceForm::FirstOrder ? "first-order" : "discrete";
}

CovarianceForm covariance_form_from_string(std::string_view name) {
    if (name == "first-order") {
        return CovarianceForm::FirstOrder;
    }
    if (name == "discrete") {
        return CovarianceForm::Discrete;
    }
    throw std::invalid_argument("unknown covariance form '" + std::string(name) + "'");
}

EkfConfig reference_ekf_config() {
    EkfConfig cfg;
    cfg.Q = (Vector5() << 1.0, 1.0, 1.0, 200.0, 5.0).finished().asDiagonal();
    cfg.R = Matrix3::Identity();
    cfg.Ts = 5e-5;
    cfg.P0 = (Vector5() << 1.0, 1.0, 1.0, 10.0, 1.0).finished().asDiagonal();
    return cfg;
}

void validate(const EkfConfig& cfg) {
    if (!(cfg.Ts > 0.0)) {
        throw std::invalid_argument("Ts must be > 0");
    }
    require_psd(cfg.Q, "Q", false);
    require_psd(cfg.P0, "P0", false);
    require_psd(cfg.R, "R", true);
}

EkfState initial_state(const EkfConfig& cfg) {
    return {cfg.x0, cfg.P0};
}

Vector5 filter_model(const MachineParams& params, const MachineState& x, const Inputs& u) {
    return state_derivative(params, x, u, FreeMechanical{});
}

Linearization linearize(const MachineParams& params, const MachineState& x_hat, const Inputs& u) {
    const double theta = x_hat.theta;
    const double omega = x_hat.omega;
    const Vector3 I = effective_currents(params, x_hat);
    const Matrix3 L = inductance_matrix(params, theta);
    const Matrix3 dL = inductance_matrix_d1(params, theta);
    const Matrix3 ddL = inductance_matrix_d2(params, theta);
    const Matrix3 Req = equivalent_resistance(params, theta, omega);
    const Vector3 dI = current_derivative(params, x_hat, u);

    Matrix5 A = Matrix5::Zero();
    // rows of dI/dt = L^-1 (V - R_eq I); the rotor column and row vanish
    // when the rotor current is pinned
    const int n = has_rotor_winding(params.kind) ? 3 : 2;
    const Eigen::MatrixXd Linv = L.topLeftCorner(n, n).inverse();
    A.block(0, 0, n, n) = -Linv * Req.topLeftCorner(n, n);
    A.block(0, 3, n, 1) = -Linv * (dL * I).head(n);
    A.block(0, 4, n, 1) = -Linv * (dL * dI + omega * (ddL * I)).head(n);

    const auto& mech = params.mech;
    const double k = (params.pole_pairs / mech.inertia) * 1.5 * (params.pole_pairs / 2.0);
    const Vector3 torque_grad = 2.0 * k * (dL * I);
    A.block(3, 0, 1, n) = torque_grad.head(n).transpose();
    A(3, 3) = -mech.viscous_friction / mech.inertia;
    A(3, 4) = k * I.dot(ddL * I);
    A(4, 3) = 1.0;

    return {A, output_jacobian()};
}

EkfState ekf_predict(const MachineParams& params, const EkfState& ekf, const Inputs& u, const EkfConfig& cfg) {
    const Linearization lin = linearize(params, ekf.x_hat, u);
    EkfState out;
    out.x_hat = MachineState::from_vector(ekf.x_hat.to_vector() + cfg.Ts * filter_model(params, ekf.x_hat, u));
    if (cfg.covariance_form == CovarianceForm::FirstOrder) {
        out.P = ekf.P + cfg.Ts * (lin.A * ekf.P + ekf.P * lin.A.transpose()) + cfg.Q;
    } else {
        const Matrix5 Phi = Matrix5::Identity() + cfg.Ts * lin.A;
        out.P = Phi * ekf.P * Phi.transpose() + cfg.Q;
    }
    symmetrize(out.P);
    return out;
}

EkfState ekf_update(const EkfState& ekf, const Vector3& y, const EkfConfig& cfg, Matrix53* gain) {
    const Matrix35 C = output_jacobian();
    const Matrix3 S = C * ekf.P * C.transpose() + cfg.R;
    const Eigen::LLT<Matrix3> llt(S);
    if (llt.info() != Eigen::Success) {
        throw EkfError("innovation covariance is not positive definite");
    }
    // K = P C^T S^-1, computed as (S^-1 C P)^T since S and P are symmetric
    const Matrix53 K = llt.solve(C * ekf.P).transpose();
    if (!K.allFinite()) {
        throw EkfError("non-finite Kalman gain");
    }
    const Vector3 innovation = y - ekf.x_hat.currents();

    EkfState out;
    out.x_hat = MachineState::from_vector(ekf.x_hat.to_vector() + K * innovation);
    out.P = ekf.P - K * C * ekf.P;
    symmetrize(out.P);
    if (gain != nullptr) {
        *gain = K;
    }
    return out;
}

EkfState ekf_update(const EkfState& ekf, const Vector3& y, const EkfConfig& cfg) {
    return ekf_update(ekf, y, cfg, nullptr);
}

EkfState ekf_step(const MachineParams& params, const EkfState& ekf, const Inputs& u, const Vector3& y,
                  const EkfConfig& cfg) {
    return ekf_update(ekf_predict(params, ekf, u, cfg), y, cfg);
}

} // namespace syncobs
