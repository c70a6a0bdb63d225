#pragma once

// Five workloads on three resources, horizon 1000 s, with the values worked
// out by hand:
//   uptime 2000, downtime 150, 3 breakdowns -> availability 2000/2150
//   completed bits 30000 over 1000 s -> 30 b/s
//   W1 and W4 qualify -> satisfaction 0.4, Neutral
//   latencies 40, 100, 20, 50 -> sum 210, mean 52.5
//   resource cost 3.6*450/3600 + 7.2*600/3600 = 1.65
//   penalties: W2 1 + 0.1*10 = 2, W5 (never ran) 1 + 0.1*600 = 61 -> 63
//   execution times 30, 60, 20, 50 -> mean 40, one excluded
//   utilisation 0.5, 1, 0 -> sum 1.5, mean 50 %
//   computing capacity 450/300 + 600/600 = 2.5 (R2 has no expected time)
//   on time: W1, W3, W4 -> 3 ok, 2 missed, balance 1

#include "agri/metrics.hpp"

namespace agri::test {

inline SimTrace hand_trace() {
  SimTrace t;
  t.horizon = 1000.0;
  t.resources = {
      {0, 1000.0, 3.6, 900.0, 100.0, 450.0, 450.0, 300.0, 2},
      {1, 2000.0, 7.2, 600.0, 50.0, 600.0, 600.0, 600.0, 1},
      {2, 500.0, 1.8, 500.0, 0.0, 0.0, 0.0, 0.0, 0},
  };
  t.workloads = {
      {1, 0.0, 10.0, 40.0, 50.0, 5.0, 3.0, 8000.0, 0, 0, true, true},
      {2, 0.0, 40.0, 100.0, 90.0, 5.0, 4.0, 16000.0, 1, 1, true, true},
      {3, 5.0, 5.0, 25.0, 30.0, 2.0, 3.0, 4000.0, 2, 0, true, false},
      {4, 20.0, 20.0, 70.0, 100.0, 5.0, 1.0, 2000.0, 0, 1, true, true},
      {5, 30.0, 0.0, 0.0, 400.0, 5.0, 0.0, 1000.0, 1, -1, false, false},
  };
  return t;
}

inline PenaltySchedule hand_schedule() { return PenaltySchedule{1.0, {{0, 0.0}, {1, 0.1}, {2, 0.05}}}; }

}  // namespace agri::test
