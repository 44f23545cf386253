#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace syncobs {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;
using Vector5 = Eigen::Matrix<double, 5, 1>;

/// Rotor construction. The PM and reluctance kinds are reductions of the
/// salient wound-rotor model: the rotor current is pinned (di_f/dt = 0) and
/// Mf * i_f is replaced by the magnet flux.
enum class MachineKind { WrsmSalient, WrsmNonSalient, Ipmsm, Spmsm, Syrm };

std::string_view to_string(MachineKind kind);
MachineKind machine_kind_from_string(std::string_view name);

bool has_rotor_winding(MachineKind kind);
bool is_salient(MachineKind kind);

struct MechanicalParams {
    double inertia = 0.01;            // J  [kg m^2]
    double viscous_friction = 0.001;  // fv [N m s]
    double load_torque = 0.0;         // Tl [N m]
};

struct MachineParams {
    int pole_pairs = 2;
    double Rs = 0.01;   // stator resistance [Ohm]
    double Rf = 6.5;    // rotor resistance [Ohm]
    double Ld = 0.8e-3; // [H]
    double Lq = 0.7e-3; // [H]
    double Lf = 0.85;   // rotor winding inductance [H]
    double Mf = 0.02;   // maximal stator/rotor mutual inductance [H]
    MachineKind kind = MachineKind::WrsmSalient;
    double psi_r = 0.0; // magnet flux [Wb], PM kinds only
    MechanicalParams mech{};

    double L0() const { return 0.5 * (Ld + Lq); }
    double L2() const { return 0.5 * (Ld - Lq); }
    double L_delta() const { return Ld - Lq; }

    // The PM/reluctance substitutions L_D -> Ld and L_Delta -> L_delta are
    // applied here, so callers never branch on the kind for these two.
    double L_Delta() const;
    double L_D() const;
};

/// Wound-rotor machine of the reference simulation (p = 2, Rs = 10 mOhm,
/// Rf = 6.5 Ohm, Ld = 0.8 mH, Lq = 0.7 mH, Lf = 0.85 H) with Mf = 0.02 H.
MachineParams reference_wrsm();

/// Throws std::invalid_argument naming the offending field.
void validate(const MachineParams& params);

struct MachineState {
    double i_alpha = 0.0;
    double i_beta = 0.0;
    double i_f = 0.0;
    double omega = 0.0; // electrical speed [rad/s]
    double theta = 0.0; // electrical position, unwrapped [rad]

    Vector3 currents() const { return {i_alpha, i_beta, i_f}; }
    double wrapped_theta() const;

    Vector5 to_vector() const { return (Vector5() << i_alpha, i_beta, i_f, omega, theta).finished(); }
    static MachineState from_vector(const Vector5& x) { return {x[0], x[1], x[2], x[3], x[4]}; }
};

struct Inputs {
    double v_alpha = 0.0;
    double v_beta = 0.0;
    double v_f = 0.0;

    Vector3 to_vector() const { return {v_alpha, v_beta, v_f}; }
};

/// Speed driven by an external mechanical system; Newton's law is bypassed
/// and dω/dt is taken from the profile.
struct ImposedSpeed {
    double acceleration = 0.0;
};
struct FreeMechanical {};
using MechanicalMode = std::variant<ImposedSpeed, FreeMechanical>;

/// Rotor current actually seen by the stator: the state value for wound
/// rotors, psi_r / Mf for PM kinds, zero for SyRM.
double effective_rotor_current(const MachineParams& params, const MachineState& state);
Vector3 effective_currents(const MachineParams& params, const MachineState& state);

/// Forces v_f to zero for kinds without a rotor winding.
Inputs sanitize_inputs(const MachineParams& params, Inputs inputs);

Matrix3 inductance_matrix(const MachineParams& params, double theta);
Matrix3 inductance_matrix_d1(const MachineParams& params, double theta);
Matrix3 inductance_matrix_d2(const MachineParams& params, double theta);

Matrix3 resistance_matrix(const MachineParams& params);
Matrix3 equivalent_resistance(const MachineParams& params, double theta, double omega);

/// Tm = (3/2)(p/2) I^T L'(θ) I with the amplitude-invariant αβ convention.
double electromagnetic_torque(const MachineParams& params, const MachineState& state);

/// Current derivatives only (rows 1-3 of the state equation). The rotor row
/// is zero for kinds without a rotor winding.
Vector3 current_derivative(const MachineParams& params, const MachineState& state, const Inputs& inputs);

/// Free-mechanical speed derivative: -(fv/J)ω + (p/J)Tm - (p/J)Tl.
double mechanical_acceleration(const MachineParams& params, const MachineState& state);

Vector5 state_derivative(const MachineParams& params, const MachineState& state, const Inputs& inputs,
                         const MechanicalMode& mode);

/// Wraps an angle to (-π, π].
double wrap_angle(double angle);

/// Rotation from the rotor (dq) frame to the stator (αβ) frame.
std::pair<double, double> park(double theta, double d_value, double q_value);
std::pair<double, double> inv_park(double theta, double alpha_value, double beta_value);

} // namespace syncobs
