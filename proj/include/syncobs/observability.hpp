#pragma once

#include "syncobs/machine_model.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace syncobs {

using SubMatrix = Eigen::Matrix<double, 3, 2>;

/// Rotor-frame view of a sample. Derivatives are true time derivatives of
/// the dq currents, i.e. they include the frame rotation terms ±ω i.
struct DqCurrents {
    double i_d = 0.0;
    double i_q = 0.0;
    double di_d = 0.0;
    double di_q = 0.0;
};

/// Operating point for the rank test: state plus current derivatives
/// (dI/dt in the αβf frame).
struct ObservabilitySample {
    MachineState state;
    Vector3 current_rates = Vector3::Zero();

    DqCurrents dq() const;

    static ObservabilitySample from_dq(double theta, double omega, double i_d, double i_q, double i_f,
                                       double di_d, double di_q, double di_f);
};

/// Canonical sample: derivatives come from the machine model under `inputs`.
ObservabilitySample sample_from_model(const MachineParams& params, const MachineState& state, const Inputs& inputs);

struct ObservabilityThresholds {
    double det_epsilon = 1e-9;       // |Δy| above this counts as nonzero
    double margin_epsilon = 1.0;     // [rad/s]
    double rank_tolerance = 1e-10;   // relative to the largest singular value
    double degenerate_epsilon = 1e-12;
};

struct DeterminantTerms {
    double D = 0.0;
    double N = 0.0;
    double delta_y = 0.0;
};

struct ObservabilityVector {
    double psi_od = 0.0;  // active flux [Wb]
    double psi_oq = 0.0;  // [Wb]
    double theta_o = 0.0; // phase in the rotor frame [rad]; 0 when degenerate
    bool degenerate = false;
};

enum class ObservabilityReason { Observable, ZeroMargin, DegenerateVector };
std::string_view to_string(ObservabilityReason reason);

struct ObservabilityCondition {
    double theta_o_rate = 0.0;  // dθ_O/dt [rad/s]
    double margin = 0.0;        // ω - dθ_O/dt [rad/s]
    double approx_factor = 1.0; // exact/approximate ratio dropped by the usual ≈ 1 step
    bool observable = false;
    ObservabilityReason reason = ObservabilityReason::ZeroMargin;
};

struct ObservabilityReport {
    DeterminantTerms determinant;
    ObservabilityVector vector;
    ObservabilityCondition condition;
    int numeric_rank = 0;
    bool det_nonzero = false;
};

/// Rows: derivatives of (i_α, i_β, i_f) first Lie derivatives; columns:
/// partials with respect to (ω, θ). For kinds without a rotor winding the
/// stator block is used and the third row is zero.
SubMatrix observability_submatrix(const MachineParams& params, const ObservabilitySample& sample);

/// Δy = D ω + N from the rotor-frame closed form.
DeterminantTerms delta_y_closed_form(const MachineParams& params, const ObservabilitySample& sample);

/// For kinds without a rotor winding `i_f` is ignored and Mf i_f is the
/// magnet flux psi_r (zero for SyRM).
ObservabilityVector observability_vector(const MachineParams& params, double i_d, double i_q, double i_f,
                                         double degenerate_epsilon = 1e-12);

ObservabilityCondition observability_condition(const MachineParams& params, const ObservabilitySample& sample,
                                               const ObservabilityThresholds& thresholds = {});

/// Number of singular values above tolerance * largest singular value.
int numeric_rank(const Eigen::MatrixXd& matrix, double tolerance = 1e-10);

ObservabilityReport evaluate_observability(const MachineParams& params, const ObservabilitySample& sample,
                                           const ObservabilityThresholds& thresholds = {});

} // namespace syncobs
