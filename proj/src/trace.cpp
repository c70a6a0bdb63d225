#include "agri/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

namespace fs = std::filesystem;

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Arrival: return "Arrival";
    case EventKind::Start: return "Start";
    case EventKind::Finish: return "Finish";
    case EventKind::Breakdown: return "Breakdown";
    case EventKind::Repair: return "Repair";
    case EventKind::MonitorTick: return "MonitorTick";
  }
  return "?";
}

EventKind parse_event_kind(const std::string& text) {
  for (auto k : {EventKind::Arrival, EventKind::Start, EventKind::Finish, EventKind::Breakdown, EventKind::Repair,
                 EventKind::MonitorTick}) {
    if (text == to_string(k)) return k;
  }
  throw ParseError("unknown event kind '" + text + "'");
}

namespace {

std::string flag(bool b) { return b ? "1" : "0"; }

class Columns {
 public:
  Columns(const CsvTable& t, std::vector<std::string> names) : table_(t) {
    for (const auto& n : names) {
      const auto c = t.column(n);
      if (c == std::string::npos) throw ParseError(t.source + ": missing column '" + n + "'");
      index_.push_back(c);
    }
    names_ = std::move(names);
  }

  const std::string& text(std::size_t row, std::size_t col) const { return table_.rows[row][index_[col]]; }

  double number(std::size_t row, std::size_t col) const {
    try {
      return parse_number(text(row, col), names_[col]);
    } catch (const ParseError& e) {
      throw ParseError(where(row) + e.what());
    }
  }

  long long integer(std::size_t row, std::size_t col) const {
    const double v = number(row, col);
    if (v != static_cast<double>(static_cast<long long>(v))) {
      throw ParseError(where(row) + names_[col] + " must be an integer");
    }
    return static_cast<long long>(v);
  }

  bool boolean(std::size_t row, std::size_t col) const {
    const auto& t = text(row, col);
    if (t == "1") return true;
    if (t == "0") return false;
    throw ParseError(where(row) + names_[col] + " must be 0 or 1");
  }

  std::string where(std::size_t row) const { return table_.source + ":" + std::to_string(table_.lines[row]) + ": "; }

 private:
  const CsvTable& table_;
  std::vector<std::string> names_;
  std::vector<std::size_t> index_;
};

}  // namespace

void write_events_csv(std::ostream& out, const std::vector<EventRecord>& events) {
  write_csv_row(out, {"time", "kind", "id", "resource"});
  for (const auto& e : events) {
    write_csv_row(out, {format_number(e.time), to_string(e.kind), std::to_string(e.id),
                        e.resource < 0 ? "" : std::to_string(e.resource)});
  }
}

void write_workloads_csv(std::ostream& out, const std::vector<WorkloadRecord>& workloads) {
  write_csv_row(out, {"id", "submit_time", "start_time", "finish_time", "deadline", "budget", "cost",
                      "bits_transferred", "tier", "resource", "completed", "within_budget"});
  for (const auto& w : workloads) {
    write_csv_row(out, {std::to_string(w.id), format_number(w.submit_time), format_number(w.start_time),
                        format_number(w.finish_time), format_number(w.deadline), format_number(w.budget),
                        format_number(w.cost), format_number(w.bits_transferred), std::to_string(w.tier),
                        std::to_string(w.resource), flag(w.completed), flag(w.within_budget)});
  }
}

void write_resources_csv(std::ostream& out, const std::vector<ResourceRecord>& resources) {
  write_csv_row(out, {"id", "capacity", "cost_rate", "uptime", "downtime", "busy_time", "actual_usage_time",
                      "expected_usage_time", "breakdown_count"});
  for (const auto& r : resources) {
    write_csv_row(out, {std::to_string(r.id), format_number(r.capacity), format_number(r.cost_rate),
                        format_number(r.uptime), format_number(r.downtime), format_number(r.busy_time),
                        format_number(r.actual_usage_time), format_number(r.expected_usage_time),
                        std::to_string(r.breakdown_count)});
  }
}

std::vector<EventRecord> read_events_csv(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  const Columns c(t, {"time", "kind", "id", "resource"});
  std::vector<EventRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EventRecord e;
    e.time = c.number(i, 0);
    try {
      e.kind = parse_event_kind(c.text(i, 1));
    } catch (const ParseError& err) {
      throw ParseError(c.where(i) + err.what());
    }
    e.id = static_cast<std::uint64_t>(c.integer(i, 2));
    e.resource = c.text(i, 3).empty() ? -1 : static_cast<int>(c.integer(i, 3));
    out.push_back(e);
  }
  return out;
}

std::vector<WorkloadRecord> read_workloads_csv(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  const Columns c(t, {"id", "submit_time", "start_time", "finish_time", "deadline", "budget", "cost",
                      "bits_transferred", "tier", "resource", "completed", "within_budget"});
  std::vector<WorkloadRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    WorkloadRecord w;
    w.id = static_cast<std::uint64_t>(c.integer(i, 0));
    w.submit_time = c.number(i, 1);
    w.start_time = c.number(i, 2);
    w.finish_time = c.number(i, 3);
    w.deadline = c.number(i, 4);
    w.budget = c.number(i, 5);
    w.cost = c.number(i, 6);
    w.bits_transferred = c.number(i, 7);
    w.tier = static_cast<int>(c.integer(i, 8));
    w.resource = static_cast<int>(c.integer(i, 9));
    w.completed = c.boolean(i, 10);
    w.within_budget = c.boolean(i, 11);
    out.push_back(w);
  }
  return out;
}

std::vector<ResourceRecord> read_resources_csv(std::istream& in, const std::string& source) {
  const auto t = read_csv(in, source);
  const Columns c(t, {"id", "capacity", "cost_rate", "uptime", "downtime", "busy_time", "actual_usage_time",
                      "expected_usage_time", "breakdown_count"});
  std::vector<ResourceRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ResourceRecord r;
    r.id = static_cast<int>(c.integer(i, 0));
    r.capacity = c.number(i, 1);
    r.cost_rate = c.number(i, 2);
    r.uptime = c.number(i, 3);
    r.downtime = c.number(i, 4);
    r.busy_time = c.number(i, 5);
    r.actual_usage_time = c.number(i, 6);
    r.expected_usage_time = c.number(i, 7);
    r.breakdown_count = static_cast<int>(c.integer(i, 8));
    out.push_back(r);
  }
  return out;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

}  // namespace

void save_trace(const SimTrace& trace, const fs::path& dir) {
  fs::create_directories(dir);
  auto e = open_out(dir / "events.csv");
  write_events_csv(e, trace.events);
  auto w = open_out(dir / "workloads.csv");
  write_workloads_csv(w, trace.workloads);
  auto r = open_out(dir / "resources.csv");
  write_resources_csv(r, trace.resources);
  auto h = open_out(dir / "horizon.txt");
  h << format_number(trace.horizon) << '\n';
}

SimTrace load_trace(const fs::path& dir) {
  SimTrace t;
  auto e = open_in(dir / "events.csv");
  t.events = read_events_csv(e, (dir / "events.csv").string());
  auto w = open_in(dir / "workloads.csv");
  t.workloads = read_workloads_csv(w, (dir / "workloads.csv").string());
  auto r = open_in(dir / "resources.csv");
  t.resources = read_resources_csv(r, (dir / "resources.csv").string());
  auto h = open_in(dir / "horizon.txt");
  std::string line;
  std::getline(h, line);
  t.horizon = parse_number(trim(line), "horizon");
  return t;
}

}  // namespace agri
