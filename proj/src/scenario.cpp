#include "syncobs/scenario.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

namespace syncobs {

CurrentLoopGains default_gains(const MachineParams& params, double tau, double integral_time) {
    if (!(tau > 0.0) || !(integral_time > 0.0)) {
        throw std::invalid_argument("controller tau and integral_time must be > 0");
    }
    const auto axis = [&](double L) { return PiGains{L / tau, L / tau / integral_time}; };
    CurrentLoopGains gains;
    gains.d = axis(params.Ld);
    gains.q = axis(params.Lq);
    gains.f = axis(params.Lf);
    return gains;
}

std::string_view to_string(SpeedMode mode) {
    return mode == SpeedMode::Imposed ? "imposed" : "free";
}

SpeedMode speed_mode_from_string(std::string_view name) {
    if (name == "imposed") {
        return SpeedMode::Imposed;
    }
    if (name == "free") {
        return SpeedMode::FreeMechanical;
    }
    throw std::invalid_argument("unknown speed mode '" + std::string(name) + "'");
}

int Scenario::substeps() const {
    return static_cast<int>(std::llround(control_step / plant_step));
}

long long Scenario::control_steps() const {
    return std::llround(duration / control_step);
}

Scenario reference_scenario() {
    return Scenario{};
}

void validate(const Scenario& s) {
    validate(s.params);
    if (!(s.plant_step > 0.0) || !(s.control_step > 0.0)) {
        throw std::invalid_argument("simulation steps must be > 0");
    }
    if (s.plant_step > s.control_step) {
        throw std::invalid_argument("plant_step must be <= control_step");
    }
    if (std::abs(s.substeps() * s.plant_step - s.control_step) > 1e-9 * s.control_step) {
        throw std::invalid_argument("control_step must be an integer multiple of plant_step");
    }
    if (!(s.duration >= 0.0)) {
        throw std::invalid_argument("duration must be >= 0");
    }
    if (!(s.current_limit > 0.0)) {
        throw std::invalid_argument("current_limit must be > 0");
    }
    if (s.profile.hold_time < 0.0 || s.profile.ramp_time < 0.0) {
        throw std::invalid_argument("profile times must be >= 0");
    }
    if (s.hf.mode == HfMode::FixedWindow && !(s.hf.end >= s.hf.start)) {
        throw std::invalid_argument("hf window must satisfy start <= end");
    }
    if (s.noise.std_alpha < 0.0 || s.noise.std_beta < 0.0 || s.noise.std_f < 0.0) {
        throw std::invalid_argument("noise standard deviations must be >= 0");
    }
    validate(make_ekf_config(s));
}

EkfConfig make_ekf_config(const Scenario& s) {
    EkfConfig cfg;
    cfg.Q = s.estimator.q_diag.asDiagonal();
    cfg.R = s.estimator.r_diag.asDiagonal();
    cfg.P0 = s.estimator.p0_diag.asDiagonal();
    cfg.Ts = s.control_step;
    cfg.covariance_form = s.estimator.covariance_form;

    MachineState x0;
    x0.i_f = effective_rotor_current(s.params, x0);
    x0.omega = s.estimator.initial_speed;
    x0.theta = s.profile.initial_position + s.estimator.theta_offset;
    cfg.x0 = x0;
    return cfg;
}

std::array<double, kLogColumns.size()> to_array(const LogRow& r) {
    return {r.t,         r.theta,     r.omega,   r.i_alpha, r.i_beta, r.i_f,    r.v_alpha,
            r.v_beta,    r.v_f,       r.theta_hat, r.omega_hat, r.delta_y, r.D,     r.N,
            r.psi_od,    r.psi_oq,    r.theta_o, r.margin,  r.approx_factor};
}

namespace {

struct CurrentLoops {
    PiController d, q, f;

    explicit CurrentLoops(const CurrentLoopGains& g) {
        const double vs = g.stator_voltage_limit, vr = g.rotor_voltage_limit;
        d = {g.d.kp, g.d.ki, -vs, vs};
        q = {g.q.kp, g.q.ki, -vs, vs};
        f = {g.f.kp, g.f.ki, -vr, vr};
    }
};

void check_finite_and_bounded(const MachineState& x, double limit, double t) {
    const Vector3 I = x.currents();
    if (!I.allFinite() || !std::isfinite(x.omega) || !std::isfinite(x.theta) || I.cwiseAbs().maxCoeff() > limit) {
        std::ostringstream msg;
        msg << "simulation diverged at t = " << t << " s (currents " << I.transpose() << " A, limit " << limit
            << " A)";
        throw SimulationDiverged(msg.str(), t);
    }
}

} // namespace

TimeSeriesLog run_scenario(const Scenario& s) {
    return run_scenario(s, StepHook{});
}

TimeSeriesLog run_scenario(const Scenario& s, const StepHook& hook) {
    validate(s);

    const MachineParams& params = s.params;
    const EkfConfig ekf_cfg = make_ekf_config(s);
    const int substeps = s.substeps();
    const long long steps = s.control_steps();
    const double h = s.plant_step;
    const double Tc = s.control_step;

    MachineState plant;
    plant.omega = speed_at(s.profile, 0.0);
    plant.theta = position_at(s.profile, 0.0);
    plant.i_f = effective_rotor_current(params, plant);

    EkfState ekf = initial_state(ekf_cfg);
    CurrentLoops loops(s.gains);

    std::mt19937_64 rng(s.noise.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto measure = [&](const MachineState& x) {
        Vector3 y = x.currents();
        if (s.noise.enabled()) {
            y += Vector3(s.noise.std_alpha * gauss(rng), s.noise.std_beta * gauss(rng), s.noise.std_f * gauss(rng));
        }
        return y;
    };

    const bool imposed = s.speed_mode == SpeedMode::Imposed;
    auto plant_rhs = [&](const Inputs& u) {
        return [&, u](double t, const Vector5& xv) -> Vector5 {
            MachineState x = MachineState::from_vector(xv);
            if (imposed) {
                x.omega = speed_at(s.profile, t);
                x.theta = position_at(s.profile, t);
                return state_derivative(params, x, u, ImposedSpeed{acceleration_at(s.profile, t)});
            }
            return state_derivative(params, x, u, FreeMechanical{});
        };
    };

    TimeSeriesLog log;
    log.rows.reserve(static_cast<std::size_t>(std::max<long long>(steps, 0)));
    Vector3 y = measure(plant);
    Vector5 carry = Vector5::Zero();

    for (long long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * Tc;

        // Shadow-mode control: the dq frame uses the true rotor position.
        const auto [i_d, i_q] = inv_park(plant.theta, y[0], y[1]);
        const double i_f_ref = hf_setpoint(s.hf, t, s.setpoints.i_f, ekf.x_hat.omega);
        const double v_d = loops.d.step(s.setpoints.i_d - i_d, Tc);
        const double v_q = loops.q.step(s.setpoints.i_q - i_q, Tc);
        const double v_f = loops.f.step(i_f_ref - y[2], Tc);
        const auto [v_a, v_b] = park(plant.theta, v_d, v_q);
        const Inputs u = sanitize_inputs(params, Inputs{v_a, v_b, v_f});

        const auto rhs = plant_rhs(u);
        Vector5 xv = plant.to_vector();
        for (int j = 0; j < substeps; ++j) {
            compensated_add(xv, carry, rk4_increment(rhs, t + j * h, xv, h));
        }
        const double t_next = static_cast<double>(k + 1) * Tc;
        plant = MachineState::from_vector(xv);
        if (imposed) {
            plant.omega = speed_at(s.profile, t_next);
            plant.theta = position_at(s.profile, t_next);
            carry.tail<2>().setZero();
        }
        check_finite_and_bounded(plant, s.current_limit, t_next);

        y = measure(plant);
        try {
            ekf = ekf_step(params, ekf, u, y, ekf_cfg);
        } catch (const EkfError& e) {
            std::ostringstream msg;
            msg << "estimator failed at t = " << t_next << " s: " << e.what();
            throw SimulationDiverged(msg.str(), t_next);
        }
        if (hook) {
            hook(t_next, ekf);
        }

        const ObservabilityReport rep =
            evaluate_observability(params, sample_from_model(params, plant, u), s.thresholds);

        log.rows.push_back(LogRow{t_next,
                                  plant.theta,
                                  plant.omega,
                                  plant.i_alpha,
                                  plant.i_beta,
                                  plant.i_f,
                                  u.v_alpha,
                                  u.v_beta,
                                  u.v_f,
                                  ekf.x_hat.theta,
                                  ekf.x_hat.omega,
                                  rep.determinant.delta_y,
                                  rep.determinant.D,
                                  rep.determinant.N,
                                  rep.vector.psi_od,
                                  rep.vector.psi_oq,
                                  rep.vector.theta_o,
                                  rep.condition.margin,
                                  rep.condition.approx_factor});
    }
    return log;
}

} // namespace syncobs
