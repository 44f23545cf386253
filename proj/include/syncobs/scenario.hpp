#pragma once

#include "syncobs/control.hpp"
#include "syncobs/ekf.hpp"
#include "syncobs/machine_model.hpp"
#include "syncobs/observability.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace syncobs {

struct Setpoints {
    double i_d = 4.0;
    double i_q = 15.0;
    double i_f = 4.0;
};

struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
};

struct CurrentLoopGains {
    PiGains d;
    PiGains q;
    PiGains f;
    double stator_voltage_limit = 500.0; // [V], per dq axis
    double rotor_voltage_limit = 500.0;  // [V]
};

/// kp = L / tau and ki = kp / integral_time per axis, with L = Ld, Lq, Lf.
/// The integral zero is placed explicitly instead of cancelling R/L, which
/// the d-axis/rotor coupling would leave as a slow closed-loop pole.
CurrentLoopGains default_gains(const MachineParams& params, double tau = 1e-3, double integral_time = 4e-3);

enum class SpeedMode { Imposed, FreeMechanical };

std::string_view to_string(SpeedMode mode);
SpeedMode speed_mode_from_string(std::string_view name);

struct NoiseConfig {
    std::uint64_t seed = 0;
    double std_alpha = 0.0; // [A]
    double std_beta = 0.0;
    double std_f = 0.0;

    bool enabled() const { return std_alpha > 0.0 || std_beta > 0.0 || std_f > 0.0; }
};

/// How the filter is configured relative to the true initial state.
struct EstimatorSetup {
    Vector5 q_diag = (Vector5() << 1.0, 1.0, 1.0, 200.0, 5.0).finished();
    Vector3 r_diag = Vector3::Ones();
    Vector5 p0_diag = (Vector5() << 1.0, 1.0, 1.0, 10.0, 1.0).finished();
    double theta_offset = 0.5;  // initial position error [rad]
    double initial_speed = 0.0; // initial speed estimate [rad/s]
    CovarianceForm covariance_form = CovarianceForm::Discrete;
};

struct Scenario {
    MachineParams params = reference_wrsm();
    Setpoints setpoints;
    SpeedProfile profile;
    SpeedMode speed_mode = SpeedMode::Imposed;
    HfInjection hf;
    CurrentLoopGains gains = default_gains(reference_wrsm());
    double plant_step = 1e-5;   // RK4 step [s]
    double control_step = 5e-5; // PI and EKF period [s]
    double duration = 3.0;      // [s]
    double current_limit = 1e4; // divergence guard [A]
    NoiseConfig noise;
    EstimatorSetup estimator;
    ObservabilityThresholds thresholds;

    int substeps() const;
    long long control_steps() const;
};

/// Reference WRSM run: 4/15/4 A set-points, standstill then 500 rad/s^2 ramp
/// to 500 rad/s, 0.5 A at 1 kHz on the rotor current over [1, 1.5) s.
Scenario reference_scenario();

void validate(const Scenario& scenario);

EkfConfig make_ekf_config(const Scenario& scenario);

struct LogRow {
    double t;
    double theta;
    double omega;
    double i_alpha;
    double i_beta;
    double i_f;
    double v_alpha;
    double v_beta;
    double v_f;
    double theta_hat;
    double omega_hat;
    double delta_y;
    double D;
    double N;
    double psi_od;
    double psi_oq;
    double theta_o;
    double margin;
    double approx_factor;
};

inline constexpr std::array<std::string_view, 19> kLogColumns = {
    "t",        "theta",   "omega",  "i_alpha",         "i_beta", "i_f",     "v_alpha",
    "v_beta",   "v_f",     "theta_hat", "omega_hat",    "delta_y", "D",      "N",
    "psi_od",   "psi_oq",  "theta_o", "margin",          "approx26_factor"};

std::array<double, kLogColumns.size()> to_array(const LogRow& row);

struct TimeSeriesLog {
    std::vector<LogRow> rows;
};

class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Classic fourth-order Runge-Kutta increment for x' = f(t, x).
template <typename F>
Vector5 rk4_increment(F&& f, double t, const Vector5& x, double h) {
    const Vector5 k1 = f(t, x);
    const Vector5 k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const Vector5 k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const Vector5 k4 = f(t + h, x + h * k3);
    return (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename F>
Vector5 rk4_step(F&& f, double t, const Vector5& x, double h) {
    return x + rk4_increment(f, t, x, h);
}

/// x += dx with Kahan compensation; `carry` holds the low-order part that
/// did not fit in x. Near equilibrium the per-step increments drop below
/// half an ulp of the currents and would otherwise be lost.
inline void compensated_add(Vector5& x, Vector5& carry, const Vector5& dx) {
    const Vector5 y = dx - carry;
    const Vector5 sum = x + y;
    carry = (sum - x) - y;
    x = sum;
}

/// Runs the closed loop. One log row per control step, stamped at the end
/// of the step. Throws SimulationDiverged if a current leaves the guard.
TimeSeriesLog run_scenario(const Scenario& scenario);

/// Called after every filter step with the row time and the filter state.
using StepHook = std::function<void(double t, const EkfState& ekf)>;
TimeSeriesLog run_scenario(const Scenario& scenario, const StepHook& hook);

} // namespace syncobs
