#pragma once

#include <string_view>

namespace syncobs {

/// Hold at `initial_speed` until `hold_time`, accelerate at `acceleration`
/// for `ramp_time`, then hold the final speed. Position is the exact
/// integral of speed starting from `initial_position`.
struct SpeedProfile {
    double initial_speed = 0.0;     // [rad/s]
    double initial_position = 0.0;  // [rad]
    double hold_time = 1.5;         // [s]
    double acceleration = 500.0;    // [rad/s^2]
    double ramp_time = 1.0;         // [s]

    double ramp_end() const { return hold_time + ramp_time; }
    double final_speed() const { return initial_speed + acceleration * ramp_time; }
};

double speed_at(const SpeedProfile& profile, double t);
double position_at(const SpeedProfile& profile, double t);
double acceleration_at(const SpeedProfile& profile, double t);

/// PI with output clamping. The integral accumulates raw error and is
/// frozen whenever the unclamped output would saturate.
struct PiController {
    double kp = 0.0;
    double ki = 0.0;
    double output_min = -1e3;
    double output_max = 1e3;
    double integral = 0.0;

    double step(double error, double dt);
    void reset() { integral = 0.0; }
};

enum class HfMode { AlwaysOff, FixedWindow, SpeedTriggered };

std::string_view to_string(HfMode mode);
HfMode hf_mode_from_string(std::string_view name);

struct HfInjection {
    double amplitude = 0.5;        // [A]
    double frequency = 1000.0;     // [Hz]
    double start = 1.0;            // [s], inclusive
    double end = 1.5;              // [s], exclusive
    HfMode mode = HfMode::FixedWindow;
    double speed_threshold = 20.0; // [rad/s], speed-triggered mode only

    double angular_frequency() const;
};

/// True when the HF component is added at time t. In speed-triggered mode
/// the window is ignored and the estimated speed decides.
bool hf_active(const HfInjection& hf, double t, double estimated_speed = 0.0);

/// base_if + amplitude sin(2π f t) while active, base_if otherwise.
double hf_setpoint(const HfInjection& hf, double t, double base_if, double estimated_speed = 0.0);

} // namespace syncobs
