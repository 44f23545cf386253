#include "syncobs/machine_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace syncobs {

namespace {

void require(bool condition, const char* message) {
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

} // namespace

std::string_view to_string(MachineKind kind) {
    switch (kind) {
    case MachineKind::WrsmSalient: return "wrsm-salient";
    case MachineKind::WrsmNonSalient: return "wrsm-nonsalient";
    case MachineKind::Ipmsm: return "ipmsm";
    case MachineKind::Spmsm: return "spmsm";
    case MachineKind::Syrm: return "syrm";
    }
    return "unknown";
}

MachineKind machine_kind_from_string(std::string_view name) {
    for (auto kind : {MachineKind::WrsmSalient, MachineKind::WrsmNonSalient, MachineKind::Ipmsm,
                      MachineKind::Spmsm, MachineKind::Syrm}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown machine kind '" + std::string(name) + "'");
}

bool has_rotor_winding(MachineKind kind) {
    return kind == MachineKind::WrsmSalient || kind == MachineKind::WrsmNonSalient;
}

bool is_salient(MachineKind kind) {
    return kind == MachineKind::WrsmSalient || kind == MachineKind::Ipmsm || kind == MachineKind::Syrm;
}

double MachineParams::L_Delta() const {
    return has_rotor_winding(kind) ? L_delta() - Mf * Mf / Lf : L_delta();
}

double MachineParams::L_D() const {
    return has_rotor_winding(kind) ? Ld - Mf * Mf / Lf : Ld;
}

MachineParams reference_wrsm() {
    return MachineParams{};
}

void validate(const MachineParams& params) {
    require(params.pole_pairs >= 1, "pole_pairs must be >= 1");
    require(params.Rs >= 0.0, "Rs must be >= 0");
    require(params.Rf >= 0.0, "Rf must be >= 0");
    require(params.Ld > 0.0, "Ld must be > 0");
    require(params.Lq > 0.0, "Lq must be > 0");
    require(params.Lf > 0.0, "Lf must be > 0");
    require(params.Mf >= 0.0, "Mf must be >= 0");
    require(params.Mf * params.Mf < params.Ld * params.Lf, "Mf^2 must be < Ld*Lf");
    require(params.mech.inertia > 0.0, "mech.inertia must be > 0");
    require(params.mech.viscous_friction >= 0.0, "mech.viscous_friction must be >= 0");
    if (!is_salient(params.kind)) {
        require(params.Ld == params.Lq, "non-salient kinds need Ld == Lq");
    }
    switch (params.kind) {
    case MachineKind::Ipmsm:
    case MachineKind::Spmsm:
        require(params.psi_r >= 0.0, "psi_r must be >= 0");
        require(params.Mf > 0.0, "PM kinds need Mf > 0 to alias i_f = psi_r / Mf");
        break;
    case MachineKind::Syrm:
        require(params.psi_r == 0.0, "SyRM has no rotor flux (psi_r must be 0)");
        require(params.Ld != params.Lq, "SyRM must be salient (Ld != Lq)");
        break;
    default:
        break;
    }
}

double MachineState::wrapped_theta() const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::fmod(theta, two_pi);
    if (wrapped < 0.0) {
        wrapped += two_pi;
    }
    // fmod of a tiny negative number can round up to exactly 2π
    return wrapped >= two_pi ? 0.0 : wrapped;
}

double effective_rotor_current(const MachineParams& params, const MachineState& state) {
    switch (params.kind) {
    case MachineKind::WrsmSalient:
    case MachineKind::WrsmNonSalient: return state.i_f;
    case MachineKind::Ipmsm:
    case MachineKind::Spmsm: return params.psi_r / params.Mf;
    case MachineKind::Syrm: return 0.0;
    }
    return 0.0;
}

Vector3 effective_currents(const MachineParams& params, const MachineState& state) {
    return {state.i_alpha, state.i_beta, effective_rotor_current(params, state)};
}

Inputs sanitize_inputs(const MachineParams& params, Inputs inputs) {
    if (!has_rotor_winding(params.kind)) {
        inputs.v_f = 0.0;
    }
    return inputs;
}

Matrix3 inductance_matrix(const MachineParams& params, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
    const double L0 = params.L0(), L2 = params.L2(), Mf = params.Mf;
    Matrix3 L;
    L << L0 + L2 * c2, L2 * s2, Mf * c,
         L2 * s2, L0 - L2 * c2, Mf * s,
         Mf * c, Mf * s, params.Lf;
    return L;
}

Matrix3 inductance_matrix_d1(const MachineParams& params, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
    const double L2 = params.L2(), Mf = params.Mf;
    Matrix3 dL;
    dL << -2.0 * L2 * s2, 2.0 * L2 * c2, -Mf * s,
          2.0 * L2 * c2, 2.0 * L2 * s2, Mf * c,
          -Mf * s, Mf * c, 0.0;
    return dL;
}

Matrix3 inductance_matrix_d2(const MachineParams& params, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double c2 = std::cos(2.0 * theta), s2 = std::sin(2.0 * theta);
    const double L2 = params.L2(), Mf = params.Mf;
    Matrix3 ddL;
    ddL << -4.0 * L2 * c2, -4.0 * L2 * s2, -Mf * c,
           -4.0 * L2 * s2, 4.0 * L2 * c2, -Mf * s,
           -Mf * c, -Mf * s, 0.0;
    return ddL;
}

Matrix3 resistance_matrix(const MachineParams& params) {
    return Vector3(params.Rs, params.Rs, params.Rf).asDiagonal();
}

Matrix3 equivalent_resistance(const MachineParams& params, double theta, double omega) {
    return resistance_matrix(params) + inductance_matrix_d1(params, theta) * omega;
}

double electromagnetic_torque(const MachineParams& params, const MachineState& state) {
    const Vector3 I = effective_currents(params, state);
    return 1.5 * (params.pole_pairs / 2.0) * I.dot(inductance_matrix_d1(params, state.theta) * I);
}

Vector3 current_derivative(const MachineParams& params, const MachineState& state, const Inputs& inputs) {
    const Vector3 I = effective_currents(params, state);
    const Vector3 V = sanitize_inputs(params, inputs).to_vector();
    const Matrix3 L = inductance_matrix(params, state.theta);
    const Vector3 rhs = V - equivalent_resistance(params, state.theta, state.omega) * I;
    if (has_rotor_winding(params.kind)) {
        return L.ldlt().solve(rhs);
    }
    // Pinned rotor current: only the stator block is dynamic. The rotor
    // column of R_eq carries the magnet back-EMF ω psi_r [-sin, cos].
    const Eigen::Vector2d dIs = L.topLeftCorner<2, 2>().ldlt().solve(rhs.head<2>());
    return {dIs[0], dIs[1], 0.0};
}

double mechanical_acceleration(const MachineParams& params, const MachineState& state) {
    const auto& m = params.mech;
    const double p = params.pole_pairs;
    return -(m.viscous_friction / m.inertia) * state.omega + (p / m.inertia) * electromagnetic_torque(params, state) -
           (p / m.inertia) * m.load_torque;
}

Vector5 state_derivative(const MachineParams& params, const MachineState& state, const Inputs& inputs,
                         const MechanicalMode& mode) {
    validate(params);
    const Vector3 dI = current_derivative(params, state, inputs);
    const double domega = std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ImposedSpeed>) {
                return m.acceleration;
            } else {
                return mechanical_acceleration(params, state);
            }
        },
        mode);
    Vector5 dx;
    dx << dI, domega, state.omega;
    return dx;
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::remainder(angle, two_pi);
    if (wrapped <= -std::numbers::pi) {
        wrapped += two_pi;
    }
    return wrapped;
}

std::pair<double, double> park(double theta, double d_value, double q_value) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {d_value * c - q_value * s, d_value * s + q_value * c};
}

std::pair<double, double> inv_park(double theta, double alpha_value, double beta_value) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {alpha_value * c + beta_value * s, -alpha_value * s + beta_value * c};
}

} // namespace syncobs
