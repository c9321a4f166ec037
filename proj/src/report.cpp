#include "vvccs/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace vvccs::report {

using nlohmann::json;

TraceData parse_trace(std::istream& in) {
    TraceData data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::invalid_argument("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        std::string kind = j.value("kind", "");
        if (kind == "tick-state") {
            double t = j.at("t").get<double>();
            for (const auto& v : j.at("vehicles"))
                data.vehicles[v.at("id").get<std::string>()].push_back(
                    {t, v.at("s").get<double>(), v.at("v").get<double>()});
        } else if (kind == "lease-event") {
            double t = j.at("t").get<double>();
            std::string agent = j.value("agent", "");
            std::string event = j.value("event", "");
            for (const auto& l : j.value("leases", json::array()))
                data.lease_events.push_back({t, agent, event, l.at("block").get<std::string>(),
                                             l.at("t_start").get<double>(),
                                             l.at("t_end").get<double>()});
        } else if (kind == "collision") {
            data.collisions.push_back({j.at("t").get<double>(), j.value("a", ""), j.value("b", "")});
        }
    }
    return data;
}

namespace {

constexpr int kWidth = 840;
constexpr int kHeight = 480;
constexpr int kMargin = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(5);
    ss << v;
    return ss.str();
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    double px(double v, int span, int margin) const {
        if (hi <= lo) return margin;
        return margin + (v - lo) / (hi - lo) * span;
    }
};

void svg_header(std::ostringstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kMargin << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
}

void axes(std::ostringstream& out, const Axis& x, const Axis& y, const std::string& xlabel,
          const std::string& ylabel) {
    int x1 = kWidth - kMargin, y1 = kHeight - kMargin;
    out << "<line x1=\"" << kMargin << "\" y1=\"" << y1 << "\" x2=\"" << x1 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
        << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (kWidth / 2) << "\" y=\"" << (kHeight - 12) << "\">" << xlabel
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << (kHeight / 2) << "\" transform=\"rotate(-90 14 "
        << (kHeight / 2) << ")\">" << ylabel << "</text>\n";
    for (int i = 0; i <= 5; ++i) {
        double xv = x.lo + (x.hi - x.lo) * i / 5.0;
        double yv = y.lo + (y.hi - y.lo) * i / 5.0;
        double xp = kMargin + (kWidth - 2 * kMargin) * i / 5.0;
        double yp = y1 - (kHeight - 2 * kMargin) * i / 5.0;
        out << "<text x=\"" << fmt(xp - 8) << "\" y=\"" << (y1 + 16) << "\">" << fmt(xv)
            << "</text>\n";
        out << "<text x=\"" << 6 << "\" y=\"" << fmt(yp + 4) << "\">" << fmt(yv) << "</text>\n";
    }
}

} // namespace

std::string time_space_svg(const TraceData& data) {
    Axis x, y;
    bool any = false;
    for (const auto& [id, samples] : data.vehicles) {
        for (const auto& s : samples) {
            if (!any) {
                x = {s.t, s.t};
                y = {s.s, s.s};
                any = true;
            }
            x.lo = std::min(x.lo, s.t);
            x.hi = std::max(x.hi, s.t);
            y.lo = std::min(y.lo, s.s);
            y.hi = std::max(y.hi, s.s);
        }
    }
    if (!any) {
        x = {0, 1};
        y = {0, 1};
    }
    if (x.hi <= x.lo) x.hi = x.lo + 1;
    if (y.hi <= y.lo) y.hi = y.lo + 1;

    int spanx = kWidth - 2 * kMargin, spany = kHeight - 2 * kMargin;
    std::ostringstream out;
    svg_header(out, "Vehicle position along path over time");
    axes(out, x, y, "time [s]", "arc position [m]");

    int ci = 0;
    for (const auto& [id, samples] : data.vehicles) {
        const char* color = kPalette[ci % 8];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& s : samples)
            out << fmt(x.px(s.t, spanx, kMargin)) << ","
                << fmt(kHeight - kMargin - (y.px(s.s, spany, kMargin) - kMargin)) << " ";
        out << "\"/>\n";
        out << "<text x=\"" << (kWidth - kMargin + 4) << "\" y=\"" << (kMargin + 16 * ci)
            << "\" fill=\"" << color << "\">" << id << "</text>\n";
        ++ci;
    }
    for (const auto& c : data.collisions) {
        double xp = x.px(c.t, spanx, kMargin);
        out << "<line x1=\"" << fmt(xp) << "\" y1=\"" << kMargin << "\" x2=\"" << fmt(xp)
            << "\" y2=\"" << (kHeight - kMargin)
            << "\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string lease_gantt_svg(const TraceData& data) {
    // last registration wins per lease id within a block
    std::map<std::string, LeaseSpan> latest; // key: block|agent
    double tmin = 1e18, tmax = -1e18;
    for (const auto& e : data.lease_events) {
        if (e.event == "release" || e.event == "proxy-drop") {
            latest.erase(e.block + "|" + e.agent);
            continue;
        }
        latest[e.block + "|" + e.agent] = e;
        tmin = std::min(tmin, e.t_start);
        tmax = std::max(tmax, e.t_end);
    }
    if (latest.empty()) {
        tmin = 0;
        tmax = 1;
    }
    Axis x{tmin, std::max(tmax, tmin + 1)};

    std::set<std::string> blocks;
    for (const auto& [k, e] : latest) blocks.insert(e.block);
    std::map<std::string, int> row;
    int r = 0;
    std::map<std::string, std::vector<LeaseSpan>> by_block;
    for (const auto& [k, e] : latest) by_block[e.block].push_back(e);
    for (const auto& b : blocks) row[b] = r++;

    int spanx = kWidth - 2 * kMargin;
    std::ostringstream out;
    svg_header(out, "Lease windows per conflict block");
    Axis y{0, std::max(1.0, static_cast<double>(blocks.size()))};
    axes(out, x, y, "time [s]", "block");

    std::map<std::string, int> agent_color;
    int ci = 0;
    for (const auto& [block, spans] : by_block) {
        int base = kMargin + row[block] * 60;
        out << "<text x=\"" << (kMargin - 44) << "\" y=\"" << (base + 24) << "\">" << block
            << "</text>\n";
        for (const auto& e : spans) {
            if (!agent_color.count(e.agent)) agent_color[e.agent] = ci++;
            const char* color = kPalette[agent_color[e.agent] % 8];
            double x0 = x.px(e.t_start, spanx, kMargin);
            double x1 = x.px(e.t_end, spanx, kMargin);
            out << "<rect x=\"" << fmt(x0) << "\" y=\"" << (base + 8) << "\" width=\""
                << fmt(std::max(1.0, x1 - x0)) << "\" height=\"24\" fill=\"" << color
                << "\" fill-opacity=\"0.6\" stroke=\"" << color << "\"/>\n";
            out << "<text x=\"" << fmt(x0 + 2) << "\" y=\"" << (base + 24)
                << "\" font-size=\"10\">" << e.agent << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::string summarize(const TraceData& data) {
    std::ostringstream out;
    out << "vehicles: " << data.vehicles.size() << "\n";
    for (const auto& [id, samples] : data.vehicles) {
        if (samples.empty()) continue;
        double vmax = 0;
        for (const auto& s : samples) vmax = std::max(vmax, s.v);
        out << "  " << id << ": samples=" << samples.size() << " t=[" << samples.front().t << ", "
            << samples.back().t << "] s_end=" << samples.back().s << " v_max=" << vmax << "\n";
    }
    out << "lease events: " << data.lease_events.size() << "\n";
    out << "collisions: " << data.collisions.size() << "\n";
    for (const auto& c : data.collisions)
        out << "  t=" << c.t << " " << c.a << " x " << c.b << "\n";
    return out.str();
}

} // namespace vvccs::report
