#include "syncobs/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace syncobs {

double speed_at(const SpeedProfile& profile, double t) {
    if (t < profile.hold_time) {
        return profile.initial_speed;
    }
    if (t < profile.ramp_end()) {
        return profile.initial_speed + profile.acceleration * (t - profile.hold_time);
    }
    return profile.final_speed();
}

double position_at(const SpeedProfile& profile, double t) {
    const double hold = std::min(t, profile.hold_time);
    double position = profile.initial_position + profile.initial_speed * hold;
    if (t <= profile.hold_time) {
        return position;
    }
    const double ramp = std::min(t, profile.ramp_end()) - profile.hold_time;
    position += profile.initial_speed * ramp + 0.5 * profile.acceleration * ramp * ramp;
    if (t <= profile.ramp_end()) {
        return position;
    }
    return position + profile.final_speed() * (t - profile.ramp_end());
}

double acceleration_at(const SpeedProfile& profile, double t) {
    return (t >= profile.hold_time && t < profile.ramp_end()) ? profile.acceleration : 0.0;
}

double PiController::step(double error, double dt) {
    const double candidate = integral + error * dt;
    const double unclamped = kp * error + ki * candidate;
    if (unclamped > output_max || unclamped < output_min) {
        return std::clamp(kp * error + ki * integral, output_min, output_max);
    }
    integral = candidate;
    return unclamped;
}

std::string_view to_string(HfMode mode) {
    switch (mode) {
    case HfMode::AlwaysOff: return "always-off";
    case HfMode::FixedWindow: return "fixed-window";
    case HfMode::SpeedTriggered: return "speed-triggered";
    }
    return "unknown";
}

HfMode hf_mode_from_string(std::string_view name) {
    for (auto mode : {HfMode::AlwaysOff, HfMode::FixedWindow, HfMode::SpeedTriggered}) {
        if (to_string(mode) == name) {
            return mode;
        }
    }
    throw std::invalid_argument("unknown hf mode '" + std::string(name) + "'");
}

double HfInjection::angular_frequency() const {
    return 2.0 * std::numbers::pi * frequency;
}

bool hf_active(const HfInjection& hf, double t, double estimated_speed) {
    switch (hf.mode) {
    case HfMode::AlwaysOff: return false;
    case HfMode::FixedWindow: return t >= hf.start && t < hf.end;
    case HfMode::SpeedTriggered: return std::abs(estimated_speed) < hf.speed_threshold;
    }
    return false;
}

double hf_setpoint(const HfInjection& hf, double t, double base_if, double estimated_speed) {
    if (!hf_active(hf, t, estimated_speed)) {
        return base_if;
    }
    return base_if + hf.amplitude * std::sin(hf.angular_frequency() * t);
}

} // namespace syncobs
