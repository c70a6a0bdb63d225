#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace agri {

enum class EventKind { Arrival, Start, Finish, Breakdown, Repair, MonitorTick };

const char* to_string(EventKind k);
EventKind parse_event_kind(const std::string& text);

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
  std::uint64_t id = 0;  // workload id, or resource id for Breakdown/Repair, tick index for MonitorTick
  int resource = -1;

  bool operator==(const EventRecord&) const = default;
};

struct WorkloadRecord {
  std::uint64_t id = 0;
  double submit_time = 0.0;
  double start_time = 0.0;
  double finish_time = 0.0;
  double deadline = 0.0;
  double budget = 0.0;
  double cost = 0.0;  // resource charge for the executed work
  double bits_transferred = 0.0;
  int tier = 0;       // index into the penalty schedule
  int resource = -1;  // last resource that ran it
  bool completed = false;
  bool within_budget = false;

  bool operator==(const WorkloadRecord&) const = default;
};

struct ResourceRecord {
  int id = 0;
  double capacity = 0.0;
  double cost_rate = 0.0;  // currency per hour
  double uptime = 0.0;
  double downtime = 0.0;
  double busy_time = 0.0;
  double actual_usage_time = 0.0;
  double expected_usage_time = 0.0;
  int breakdown_count = 0;

  bool operator==(const ResourceRecord&) const = default;
};

struct SimTrace {
  double horizon = 0.0;  // time the last workload finished or was dropped
  std::vector<WorkloadRecord> workloads;
  std::vector<ResourceRecord> resources;
  std::vector<EventRecord> events;

  bool operator==(const SimTrace&) const = default;
};

void write_events_csv(std::ostream& out, const std::vector<EventRecord>& events);
void write_workloads_csv(std::ostream& out, const std::vector<WorkloadRecord>& workloads);
void write_resources_csv(std::ostream& out, const std::vector<ResourceRecord>& resources);

std::vector<EventRecord> read_events_csv(std::istream& in, const std::string& source);
std::vector<WorkloadRecord> read_workloads_csv(std::istream& in, const std::string& source);
std::vector<ResourceRecord> read_resources_csv(std::istream& in, const std::string& source);

/// events.csv, workloads.csv, resources.csv and horizon.txt under `dir`.
void save_trace(const SimTrace& trace, const std::filesystem::path& dir);
SimTrace load_trace(const std::filesystem::path& dir);

}  // namespace agri
