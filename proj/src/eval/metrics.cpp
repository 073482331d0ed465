#include "slotnav/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "slotnav/error.hpp"

namespace slotnav::eval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(StopReason r) { return r == StopReason::StopSignal ? "stop-signal" : "max-steps"; }

double navigation_error(const TrajectoryLog& log) {
  if (log.waypoints.empty()) fail(ErrorKind::Input, "trajectory log has no waypoints");
  return world::distance(log.waypoints.back(), log.goal);
}

bool success(double ne, double tau) { return ne <= tau; }

bool oracle_success(const TrajectoryLog& log, double tau) {
  return std::any_of(log.waypoints.begin(), log.waypoints.end(),
                     [&](const Vec3& w) { return world::distance(w, log.goal) <= tau; });
}

double path_length(const TrajectoryLog& log) {
  double total = 0.0;
  Vec3 prev = log.start;
  for (const auto& w : log.waypoints) {
    total += world::distance(prev, w);
    prev = w;
  }
  return total;
}

double shortest_length(const TrajectoryLog& log) { return world::distance(log.start, log.goal); }

double spl(bool succeeded, double executed, double shortest) {
  if (!(shortest > 0.0)) fail(ErrorKind::Degenerate, "episode starts at its goal; SPL undefined");
  if (!succeeded) return 0.0;
  return shortest / std::max(shortest, executed);
}

SplitMetrics aggregate(const std::vector<TrajectoryLog>& logs, double tau) {
  SplitMetrics m;
  m.n = logs.size();
  if (logs.empty()) return m;
  double ne = 0.0, sr = 0.0, osr = 0.0, s = 0.0;
  for (const auto& log : logs) {
    const double e = navigation_error(log);
    const bool ok = success(e, tau);
    ne += e;
    sr += ok ? 1.0 : 0.0;
    osr += oracle_success(log, tau) ? 1.0 : 0.0;
    s += spl(ok, path_length(log), shortest_length(log));
  }
  const double n = static_cast<double>(logs.size());
  m.ne = ne / n;
  m.sr = 100.0 * sr / n;
  m.osr = 100.0 * osr / n;
  m.spl = 100.0 * s / n;
  return m;
}

MetricReport make_report(const std::vector<TrajectoryLog>& logs, double tau) {
  std::vector<TrajectoryLog> easy, hard;
  for (const auto& l : logs) (l.difficulty == world::Difficulty::Easy ? easy : hard).push_back(l);
  return {aggregate(logs, tau), aggregate(easy, tau), aggregate(hard, tau)};
}

namespace {

ordered_json split_json(const SplitMetrics& m) {
  ordered_json j;
  j["ne"] = m.ne;
  j["sr"] = m.sr;
  j["osr"] = m.osr;
  j["spl"] = m.spl;
  j["n"] = m.n;
  return j;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::Input, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

ordered_json report_to_json(const MetricReport& r) {
  ordered_json j;
  j["full"] = split_json(r.full);
  j["easy"] = split_json(r.easy);
  j["hard"] = split_json(r.hard);
  return j;
}

std::string report_table(const MetricReport& r, const std::string& title) {
  std::string out;
  if (!title.empty()) out += title + "\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-6s %6s %9s %8s %8s %8s\n", "split", "n", "NE(m)", "SR(%)", "OSR(%)", "SPL(%)");
  out += line;
  auto row = [&](const char* name, const SplitMetrics& m) {
    std::snprintf(line, sizeof(line), "%-6s %6zu %9.2f %8.2f %8.2f %8.2f\n", name, m.n, m.ne, m.sr, m.osr, m.spl);
    out += line;
  };
  row("full", r.full);
  row("easy", r.easy);
  row("hard", r.hard);
  return out;
}

ordered_json log_to_json(const TrajectoryLog& log) {
  ordered_json j;
  j["episode_id"] = log.episode_id;
  j["difficulty"] = std::string(world::to_string(log.difficulty));
  j["start"] = vec_json(log.start);
  ordered_json wps = ordered_json::array();
  for (const auto& w : log.waypoints) wps.push_back(vec_json(w));
  j["waypoints"] = std::move(wps);
  j["stop_reason"] = std::string(to_string(log.stop_reason));
  j["goal"] = vec_json(log.goal);
  return j;
}

TrajectoryLog log_from_json(const json& j) {
  TrajectoryLog log;
  try {
    log.episode_id = j.at("episode_id").get<std::size_t>();
    log.difficulty = world::difficulty_from_string(j.at("difficulty").get<std::string>());
    log.start = vec_from(j.at("start"));
    for (const auto& w : j.at("waypoints")) log.waypoints.push_back(vec_from(w));
    const std::string reason = j.at("stop_reason").get<std::string>();
    if (reason == "stop-signal") {
      log.stop_reason = StopReason::StopSignal;
    } else if (reason == "max-steps") {
      log.stop_reason = StopReason::MaxSteps;
    } else {
      fail(ErrorKind::Input, "unknown stop_reason '" + reason + "'");
    }
    log.goal = vec_from(j.at("goal"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Input, std::string("trajectory log: ") + e.what());
  }
  if (log.waypoints.empty()) fail(ErrorKind::Input, "trajectory log has no waypoints");
  return log;
}

void write_logs(const std::vector<TrajectoryLog>& logs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write trajectory logs to " + path);
  for (const auto& l : logs) out << log_to_json(l).dump() << "\n";
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

std::vector<TrajectoryLog> read_logs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open trajectory logs " + path);
  std::vector<TrajectoryLog> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(log_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::Input, path + ":" + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Input, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace slotnav::eval
