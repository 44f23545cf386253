#pragma once

#include "syncobs/observability.hpp"
#include "syncobs/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace syncobs {

inline constexpr int kReportSchemaVersion = 1;

/// Statistics over the log rows with t in [t_start, t_end); the last segment
/// of a run also takes the row at t_end.
struct SegmentSummary {
    std::string name;
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;
    double max_abs_delta_y = 0.0;
    double min_position_error = 0.0;   // |wrap(θ̂ − θ)|
    double max_position_error = 0.0;
    double final_position_error = 0.0;
    double rms_speed_error = 0.0;
    double max_speed_error = 0.0;
    double min_abs_margin = 0.0;
    double max_abs_margin = 0.0;
    double mean_abs_margin = 0.0;
    double observable_fraction = 0.0;  // |margin| > margin_epsilon
    double det_nonzero_fraction = 0.0; // |Δy| > det_epsilon
    std::optional<double> converged_at; // error below tolerance from here to the segment end
    bool position_converged = false;
};

struct RunSummary {
    std::string machine_kind;
    std::string hf_mode;
    std::string speed_mode;
    std::uint64_t seed = 0;
    double duration = 0.0;
    std::size_t samples = 0;
    double position_tolerance = 0.05;
    std::vector<SegmentSummary> segments;
    std::optional<double> converged_at;
    double max_speed_error = 0.0;
    double max_abs_delta_y = 0.0;
};

double position_error(const LogRow& row);

SegmentSummary summarize_segment(const TimeSeriesLog& log, std::string name, double t_start, double t_end,
                                 bool include_end, const ObservabilityThresholds& thresholds,
                                 double position_tolerance);

/// Segments: initial_hold, injection (fixed-window mode only), ramp,
/// final_hold. Empty segments are omitted.
RunSummary summarize_run(const Scenario& scenario, const TimeSeriesLog& log, double position_tolerance);

const SegmentSummary* find_segment(const RunSummary& summary, std::string_view name);

nlohmann::ordered_json to_json(const RunSummary& summary);
nlohmann::ordered_json diverged_report_json(const Scenario& scenario, double time, const std::string& message);
nlohmann::ordered_json to_json(const MachineParams& params, const ObservabilitySample& sample,
                               const ObservabilityReport& report);

/// Doubles as %.17g, non-finite values as null, two-space indent.
void write_json(std::ostream& out, const nlohmann::ordered_json& value);
std::string format_double(double value);

void write_csv(std::ostream& out, const TimeSeriesLog& log);
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace syncobs
