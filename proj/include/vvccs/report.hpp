#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace vvccs::report {

struct Sample {
    double t = 0.0;
    double s = 0.0;
    double v = 0.0;
};

struct LeaseSpan {
    double t = 0.0; // commit time of the event
    std::string agent;
    std::string event;
    std::string block;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct CollisionMark {
    double t = 0.0;
    std::string a;
    std::string b;
};

/// Contents of a run trace relevant for plotting. Only full-level traces
/// carry vehicle samples; event-level traces still yield lease spans.
struct TraceData {
    std::map<std::string, std::vector<Sample>> vehicles;
    std::vector<LeaseSpan> lease_events;
    std::vector<CollisionMark> collisions;
};

/// Reads a JSONL trace; unknown record kinds are skipped. Throws
/// std::invalid_argument on malformed lines.
TraceData parse_trace(std::istream& in);

/// Time-space diagram, one polyline per vehicle, collisions marked.
std::string time_space_svg(const TraceData& data);

/// Lease windows per block over time, latest registration per lease shown.
std::string lease_gantt_svg(const TraceData& data);

/// Plain-text digest of the trace.
std::string summarize(const TraceData& data);

} // namespace vvccs::report
