#include "syncobs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace syncobs {

using nlohmann::ordered_json;

double position_error(const LogRow& row) {
    return std::abs(wrap_angle(row.theta_hat - row.theta));
}

SegmentSummary summarize_segment(const TimeSeriesLog& log, std::string name, double t_start, double t_end,
                                 bool include_end, const ObservabilityThresholds& thresholds,
                                 double position_tolerance) {
    SegmentSummary seg;
    seg.name = std::move(name);
    seg.t_start = t_start;
    seg.t_end = t_end;
    seg.min_position_error = std::numeric_limits<double>::infinity();
    seg.min_abs_margin = std::numeric_limits<double>::infinity();

    double speed_sq = 0.0, margin_sum = 0.0;
    std::size_t observable = 0, det_nonzero = 0;
    std::optional<double> first_good;
    for (const LogRow& r : log.rows) {
        if (r.t < t_start || r.t > t_end || (r.t == t_end && !include_end)) {
            continue;
        }
        ++seg.samples;
        const double pos = position_error(r);
        const double spd = std::abs(r.omega_hat - r.omega);
        const double margin = std::abs(r.margin);
        seg.max_abs_delta_y = std::max(seg.max_abs_delta_y, std::abs(r.delta_y));
        seg.min_position_error = std::min(seg.min_position_error, pos);
        seg.max_position_error = std::max(seg.max_position_error, pos);
        seg.final_position_error = pos;
        speed_sq += spd * spd;
        seg.max_speed_error = std::max(seg.max_speed_error, spd);
        seg.min_abs_margin = std::min(seg.min_abs_margin, margin);
        seg.max_abs_margin = std::max(seg.max_abs_margin, margin);
        margin_sum += margin;
        observable += margin > thresholds.margin_epsilon;
        det_nonzero += std::abs(r.delta_y) > thresholds.det_epsilon;
        if (pos < position_tolerance) {
            if (!first_good) {
                first_good = r.t;
            }
        } else {
            first_good.reset();
        }
    }
    if (seg.samples == 0) {
        seg.min_position_error = 0.0;
        seg.min_abs_margin = 0.0;
        return seg;
    }
    const auto n = static_cast<double>(seg.samples);
    seg.rms_speed_error = std::sqrt(speed_sq / n);
    seg.mean_abs_margin = margin_sum / n;
    seg.observable_fraction = static_cast<double>(observable) / n;
    seg.det_nonzero_fraction = static_cast<double>(det_nonzero) / n;
    seg.converged_at = first_good;
    seg.position_converged = first_good.has_value();
    return seg;
}

RunSummary summarize_run(const Scenario& s, const TimeSeriesLog& log, double position_tolerance) {
    RunSummary out;
    out.machine_kind = std::string(to_string(s.params.kind));
    out.hf_mode = std::string(to_string(s.hf.mode));
    out.speed_mode = std::string(to_string(s.speed_mode));
    out.seed = s.noise.seed;
    out.duration = s.duration;
    out.samples = log.rows.size();
    out.position_tolerance = position_tolerance;

    const double T = s.duration;
    const double hold = std::min(s.profile.hold_time, T);
    const double ramp_end = std::min(s.profile.ramp_end(), T);
    auto add = [&](const char* name, double a, double b, bool include_end) {
        if (b > a || (include_end && b == a && a == T && T > 0.0)) {
            out.segments.push_back(
                summarize_segment(log, name, a, b, include_end, s.thresholds, position_tolerance));
        }
    };
    add("initial_hold", 0.0, hold, hold == T);
    if (s.hf.mode == HfMode::FixedWindow) {
        add("injection", std::min(s.hf.start, T), std::min(s.hf.end, T), s.hf.end >= T);
    }
    add("ramp", hold, ramp_end, ramp_end == T && hold < T);
    add("final_hold", ramp_end, T, ramp_end < T);

    const SegmentSummary whole = summarize_segment(log, "all", 0.0, T, true, s.thresholds, position_tolerance);
    out.converged_at = whole.converged_at;
    out.max_speed_error = whole.max_speed_error;
    out.max_abs_delta_y = whole.max_abs_delta_y;
    return out;
}

const SegmentSummary* find_segment(const RunSummary& summary, std::string_view name) {
    for (const auto& seg : summary.segments) {
        if (seg.name == name) {
            return &seg;
        }
    }
    return nullptr;
}

namespace {

ordered_json optional_time(const std::optional<double>& t) {
    return t ? ordered_json(*t) : ordered_json(nullptr);
}

ordered_json scenario_header(const Scenario& s) {
    return {{"machine_kind", to_string(s.params.kind)},
            {"speed_mode", to_string(s.speed_mode)},
            {"hf_mode", to_string(s.hf.mode)},
            {"seed", s.noise.seed},
            {"duration", s.duration}};
}

void emit(std::string& out, const ordered_json& v, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (v.type()) {
    case ordered_json::value_t::object: {
        if (v.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first) {
                out += ",\n";
            }
            first = false;
            out += inner + ordered_json(key).dump() + ": ";
            emit(out, item, indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case ordered_json::value_t::array: {
        if (v.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) {
                out += ",\n";
            }
            out += inner;
            emit(out, v[i], indent + 1);
        }
        out += "\n" + pad + "]";
        return;
    }
    case ordered_json::value_t::number_float: {
        const double d = v.get<double>();
        out += std::isfinite(d) ? format_double(d) : "null";
        return;
    }
    default:
        out += v.dump();
    }
}

} // namespace

ordered_json to_json(const RunSummary& summary) {
    ordered_json segments = ordered_json::array();
    for (const auto& seg : summary.segments) {
        segments.push_back({{"name", seg.name},
                            {"t_start", seg.t_start},
                            {"t_end", seg.t_end},
                            {"samples", seg.samples},
                            {"max_abs_delta_y", seg.max_abs_delta_y},
                            {"min_position_error", seg.min_position_error},
                            {"max_position_error", seg.max_position_error},
                            {"final_position_error", seg.final_position_error},
                            {"rms_speed_error", seg.rms_speed_error},
                            {"max_speed_error", seg.max_speed_error},
                            {"margin",
                             {{"min_abs", seg.min_abs_margin},
                              {"max_abs", seg.max_abs_margin},
                              {"mean_abs", seg.mean_abs_margin},
                              {"observable_fraction", seg.observable_fraction}}},
                            {"det_nonzero_fraction", seg.det_nonzero_fraction},
                            {"converged_at", optional_time(seg.converged_at)},
                            {"position_converged", seg.position_converged}});
    }
    return {{"schema_version", kReportSchemaVersion},
            {"status", "ok"},
            {"scenario",
             {{"machine_kind", summary.machine_kind},
              {"speed_mode", summary.speed_mode},
              {"hf_mode", summary.hf_mode},
              {"seed", summary.seed},
              {"duration", summary.duration}}},
            {"samples", summary.samples},
            {"position_tolerance", summary.position_tolerance},
            {"converged_at", optional_time(summary.converged_at)},
            {"max_speed_error", summary.max_speed_error},
            {"max_abs_delta_y", summary.max_abs_delta_y},
            {"segments", segments}};
}

ordered_json diverged_report_json(const Scenario& s, double time, const std::string& message) {
    return {{"schema_version", kReportSchemaVersion},
            {"status", "diverged"},
            {"scenario", scenario_header(s)},
            {"diverged_at", time},
            {"message", message}};
}

ordered_json to_json(const MachineParams& params, const ObservabilitySample& sample,
                     const ObservabilityReport& report) {
    const DqCurrents dq = sample.dq();
    return {{"schema_version", kReportSchemaVersion},
            {"machine_kind", to_string(params.kind)},
            {"point",
             {{"theta", sample.state.theta},
              {"omega", sample.state.omega},
              {"i_d", dq.i_d},
              {"i_q", dq.i_q},
              {"i_f", sample.state.i_f},
              {"di_d", dq.di_d},
              {"di_q", dq.di_q},
              {"di_f", sample.current_rates[2]}}},
            {"D", report.determinant.D},
            {"N", report.determinant.N},
            {"delta_y", report.determinant.delta_y},
            {"det_nonzero", report.det_nonzero},
            {"psi_od", report.vector.psi_od},
            {"psi_oq", report.vector.psi_oq},
            {"theta_o", report.vector.theta_o},
            {"degenerate", report.vector.degenerate},
            {"theta_o_rate", report.condition.theta_o_rate},
            {"margin", report.condition.margin},
            {"approx_factor", report.condition.approx_factor},
            {"observable", report.condition.observable},
            {"reason", to_string(report.condition.reason)},
            {"numeric_rank", report.numeric_rank}};
}

std::string format_double(double value) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    if (ec != std::errc{}) {
        throw std::runtime_error("failed to format a double");
    }
    return std::string(buf, ptr);
}

void write_json(std::ostream& out, const ordered_json& value) {
    std::string text;
    emit(text, value, 0);
    out << text << '\n';
}

void write_csv(std::ostream& out, const TimeSeriesLog& log) {
    std::string line;
    for (std::size_t i = 0; i < kLogColumns.size(); ++i) {
        line += (i ? "," : "");
        line += kLogColumns[i];
    }
    out << line << '\n';
    for (const LogRow& row : log.rows) {
        line.clear();
        const auto values = to_array(row);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) {
                line += ',';
            }
            line += format_double(values[i]);
        }
        out << line << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    file << content;
    if (!file) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

} // namespace syncobs
