#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "slotnav/world/episode.hpp"

namespace slotnav::eval {

using world::Vec3;

enum class StopReason { StopSignal, MaxSteps };
std::string_view to_string(StopReason r);

/// What one closed-loop episode did. `waypoints` are the executed moves
/// after the start, so there is at least one.
struct TrajectoryLog {
  std::size_t episode_id = 0;
  world::Difficulty difficulty = world::Difficulty::Easy;
  Vec3 start;
  std::vector<Vec3> waypoints;
  StopReason stop_reason = StopReason::MaxSteps;
  Vec3 goal;

  friend bool operator==(const TrajectoryLog&, const TrajectoryLog&) = default;
};

/// Distance from the last executed waypoint to the goal.
double navigation_error(const TrajectoryLog& log);
/// Inclusive: ne ≤ tau.
bool success(double ne, double tau = world::kSuccessRadius);
/// Some executed waypoint lies within tau of the goal.
bool oracle_success(const TrajectoryLog& log, double tau = world::kSuccessRadius);
/// Sum of executed segment lengths, start included.
double path_length(const TrajectoryLog& log);
/// Straight-line start-to-goal distance.
double shortest_length(const TrajectoryLog& log);
/// success · ℓ / max(ℓ, p). Throws a degenerate-episode error when ℓ = 0.
double spl(bool succeeded, double executed, double shortest);

struct SplitMetrics {
  double ne = 0.0;   // mean meters
  double sr = 0.0;   // percent
  double osr = 0.0;  // percent
  double spl = 0.0;  // percent
  std::size_t n = 0;

  friend bool operator==(const SplitMetrics&, const SplitMetrics&) = default;
};

struct MetricReport {
  SplitMetrics full;
  SplitMetrics easy;
  SplitMetrics hard;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

SplitMetrics aggregate(const std::vector<TrajectoryLog>& logs, double tau = world::kSuccessRadius);
MetricReport make_report(const std::vector<TrajectoryLog>& logs, double tau = world::kSuccessRadius);

/// {"full": {...}, "easy": {...}, "hard": {...}} with keys ne, sr, osr, spl, n.
nlohmann::ordered_json report_to_json(const MetricReport& r);
/// Fixed-width table, one row per split.
std::string report_table(const MetricReport& r, const std::string& title = "");

nlohmann::ordered_json log_to_json(const TrajectoryLog& log);
TrajectoryLog log_from_json(const nlohmann::json& j);
void write_logs(const std::vector<TrajectoryLog>& logs, const std::string& path);
std::vector<TrajectoryLog> read_logs(const std::string& path);

}  // namespace slotnav::eval
