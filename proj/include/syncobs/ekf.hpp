#pragma once

#include "syncobs/machine_model.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string_view>

namespace syncobs {

using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Matrix35 = Eigen::Matrix<double, 3, 5>;
using Matrix53 = Eigen::Matrix<double, 5, 3>;

/// Covariance prediction. `FirstOrder` is P + Ts (A P + P A^T) + Q, which
/// drops the Ts^2 A P A^T term and is only PSD-preserving while Ts |A| << 1.
/// `Discrete` is Φ P Φ^T + Q with Φ = I + Ts A, the same transition as the
/// state prediction.
enum class CovarianceForm { FirstOrder, Discrete };

std::string_view to_string(CovarianceForm form);
CovarianceForm covariance_form_from_string(std::string_view name);

struct EkfConfig {
    CovarianceForm covariance_form = CovarianceForm::Discrete;
    Matrix5 Q = Matrix5::Identity();
    Matrix3 R = Matrix3::Identity();
    double Ts = 5e-5;
    Matrix5 P0 = Matrix5::Identity();
    MachineState x0{};
};

/// Q = diag(1, 1, 1, 200, 5), R = I3, Ts = 50 µs, P0 = diag(1, 1, 1, 10, 1).
EkfConfig reference_ekf_config();

/// Throws std::invalid_argument on asymmetric/indefinite matrices or Ts <= 0.
void validate(const EkfConfig& cfg);

struct EkfState {
    MachineState x_hat;
    Matrix5 P = Matrix5::Identity();
};

EkfState initial_state(const EkfConfig& cfg);

class EkfError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Linearization {
    Matrix5 A;
    Matrix35 C;
};

/// The filter model: full five-state equations in free-mechanical form.
Vector5 filter_model(const MachineParams& params, const MachineState& x, const Inputs& u);

/// Analytic Jacobians of the filter model and of h(x) = I.
Linearization linearize(const MachineParams& params, const MachineState& x_hat, const Inputs& u);

/// x <- x + Ts f(x, u); P propagated per cfg.covariance_form
EkfState ekf_predict(const MachineParams& params, const EkfState& ekf, const Inputs& u, const EkfConfig& cfg);

/// K = P C^T (C P C^T + R)^-1;  x <- x + K (y - h(x));  P <- P - K C P
EkfState ekf_update(const EkfState& ekf, const Vector3& y, const EkfConfig& cfg);

/// Same as above with the gain exposed, mostly for tests.
EkfState ekf_update(const EkfState& ekf, const Vector3& y, const EkfConfig& cfg, Matrix53* gain);

EkfState ekf_step(const MachineParams& params, const EkfState& ekf, const Inputs& u, const Vector3& y,
                  const EkfConfig& cfg);

} // namespace syncobs
