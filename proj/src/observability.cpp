#include "syncobs/observability.hpp"

#include <algorithm>
#include <cmath>

namespace syncobs {

namespace {

// Rotor current and its derivative as seen by the stator equations.
std::pair<double, double> rotor_terms(const MachineParams& params, const ObservabilitySample& sample) {
    if (has_rotor_winding(params.kind)) {
        return {sample.state.i_f, sample.current_rates[2]};
    }
    return {effective_rotor_current(params, sample.state), 0.0};
}

} // namespace

DqCurrents ObservabilitySample::dq() const {
    const auto [i_d, i_q] = inv_park(state.theta, state.i_alpha, state.i_beta);
    const auto [r_d, r_q] = inv_park(state.theta, current_rates[0], current_rates[1]);
    return {i_d, i_q, r_d + state.omega * i_q, r_q - state.omega * i_d};
}

ObservabilitySample ObservabilitySample::from_dq(double theta, double omega, double i_d, double i_q, double i_f,
                                                 double di_d, double di_q, double di_f) {
    ObservabilitySample sample;
    const auto [i_a, i_b] = park(theta, i_d, i_q);
    // strip the rotation terms before going back to the stationary frame
    const auto [r_a, r_b] = park(theta, di_d - omega * i_q, di_q + omega * i_d);
    sample.state = MachineState{i_a, i_b, i_f, omega, theta};
    sample.current_rates = Vector3(r_a, r_b, di_f);
    return sample;
}

ObservabilitySample sample_from_model(const MachineParams& params, const MachineState& state, const Inputs& inputs) {
    return {state, current_derivative(params, state, inputs)};
}

std::string_view to_string(ObservabilityReason reason) {
    switch (reason) {
    case ObservabilityReason::Observable: return "observable";
    case ObservabilityReason::ZeroMargin: return "zero-margin";
    case ObservabilityReason::DegenerateVector: return "degenerate-vector";
    }
    return "unknown";
}

SubMatrix observability_submatrix(const MachineParams& params, const ObservabilitySample& sample) {
    validate(params);
    const double theta = sample.state.theta;
    const double omega = sample.state.omega;
    const auto [i_f, di_f] = rotor_terms(params, sample);
    const Vector3 I(sample.state.i_alpha, sample.state.i_beta, i_f);
    const Vector3 dI(sample.current_rates[0], sample.current_rates[1], di_f);

    const Matrix3 L = inductance_matrix(params, theta);
    const Matrix3 dL = inductance_matrix_d1(params, theta);
    const Matrix3 ddL = inductance_matrix_d2(params, theta);

    // (L^-1)' L dI/dt - L^-1 L'' ω I  ==  -L^-1 (L' dI/dt + ω L'' I)
    const Vector3 omega_rhs = dL * I;
    const Vector3 theta_rhs = dL * dI + omega * (ddL * I);

    SubMatrix m = SubMatrix::Zero();
    if (has_rotor_winding(params.kind)) {
        const auto solver = L.ldlt();
        m.col(0) = -solver.solve(omega_rhs);
        m.col(1) = -solver.solve(theta_rhs);
    } else {
        const auto solver = L.topLeftCorner<2, 2>().ldlt();
        m.block<2, 1>(0, 0) = -solver.solve(omega_rhs.head<2>());
        m.block<2, 1>(0, 1) = -solver.solve(theta_rhs.head<2>());
    }
    return m;
}

DeterminantTerms delta_y_closed_form(const MachineParams& params, const ObservabilitySample& sample) {
    const DqCurrents dq = sample.dq();
    const auto [i_f, di_f] = rotor_terms(params, sample);
    const double L_delta = params.L_delta();
    const double L_Delta = params.L_Delta();
    const double scale = 1.0 / (params.L_D() * params.Lq);

    const double active_flux = L_delta * dq.i_d + params.Mf * i_f;
    const double active_flux_rate = L_delta * dq.di_d + params.Mf * di_f;

    DeterminantTerms out;
    out.D = scale * (active_flux * active_flux + L_Delta * L_delta * dq.i_q * dq.i_q);
    out.N = scale * L_Delta * (active_flux_rate * dq.i_q - active_flux * dq.di_q);
    out.delta_y = out.D * sample.state.omega + out.N;
    return out;
}

ObservabilityVector observability_vector(const MachineParams& params, double i_d, double i_q, double i_f,
                                         double degenerate_epsilon) {
    const double rotor_flux = has_rotor_winding(params.kind) ? params.Mf * i_f : params.psi_r;
    ObservabilityVector v;
    v.psi_od = params.L_delta() * i_d + rotor_flux;
    v.psi_oq = params.L_Delta() * i_q;
    v.degenerate = std::abs(v.psi_od) < degenerate_epsilon && std::abs(v.psi_oq) < degenerate_epsilon;
    v.theta_o = v.degenerate ? 0.0 : std::atan2(v.psi_oq, v.psi_od);
    return v;
}

ObservabilityCondition observability_condition(const MachineParams& params, const ObservabilitySample& sample,
                                               const ObservabilityThresholds& thresholds) {
    const DqCurrents dq = sample.dq();
    const auto [i_f, di_f] = rotor_terms(params, sample);
    const ObservabilityVector v = observability_vector(params, dq.i_d, dq.i_q, i_f, thresholds.degenerate_epsilon);

    ObservabilityCondition c;
    const double L_Delta = params.L_Delta();
    const double psi_od_sq = v.psi_od * v.psi_od;
    // same factor order in both, so the ratio is exactly 1 when L_Delta == L_delta
    const double exact_den = psi_od_sq + v.psi_oq * (params.L_delta() * dq.i_q);
    const double approx_den = psi_od_sq + v.psi_oq * v.psi_oq;
    c.approx_factor = exact_den == 0.0 ? 1.0 : approx_den / exact_den;

    if (v.degenerate) {
        c.margin = sample.state.omega;
        c.observable = false;
        c.reason = ObservabilityReason::DegenerateVector;
        return c;
    }

    const double psi_od_rate = params.L_delta() * dq.di_d + params.Mf * di_f;
    const double psi_oq_rate = L_Delta * dq.di_q;
    c.theta_o_rate = (v.psi_od * psi_oq_rate - v.psi_oq * psi_od_rate) / approx_den;
    c.margin = sample.state.omega - c.theta_o_rate;
    c.observable = std::abs(c.margin) > thresholds.margin_epsilon;
    c.reason = c.observable ? ObservabilityReason::Observable : ObservabilityReason::ZeroMargin;
    return c;
}

int numeric_rank(const Eigen::MatrixXd& matrix, double tolerance) {
    if (matrix.size() == 0) {
        return 0;
    }
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(matrix).singularValues();
    const double largest = sv.size() > 0 ? sv[0] : 0.0;
    if (largest <= 0.0) {
        return 0;
    }
    return static_cast<int>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > tolerance * largest; }));
}

ObservabilityReport evaluate_observability(const MachineParams& params, const ObservabilitySample& sample,
                                           const ObservabilityThresholds& thresholds) {
    ObservabilityReport report;
    report.determinant = delta_y_closed_form(params, sample);
    const DqCurrents dq = sample.dq();
    report.vector =
        observability_vector(params, dq.i_d, dq.i_q, rotor_terms(params, sample).first, thresholds.degenerate_epsilon);
    report.condition = observability_condition(params, sample, thresholds);
    report.numeric_rank = numeric_rank(observability_submatrix(params, sample), thresholds.rank_tolerance);
    report.det_nonzero = std::abs(report.determinant.delta_y) > thresholds.det_epsilon;
    return report;
}

} // namespace syncobs
