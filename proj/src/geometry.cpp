#include "vvccs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace vvccs::geom {

double Vec2::norm() const { return std::hypot(x, y); }

Vec2 Path::point_at(double s) const {
    if (polyline.size() < 2) throw std::invalid_argument("path has no segments");
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum_s.begin(), cum_s.end(), s);
    std::size_t i = (it == cum_s.begin()) ? 0 : static_cast<std::size_t>(it - cum_s.begin()) - 1;
    if (i >= polyline.size() - 1) i = polyline.size() - 2;
    double seg_len = cum_s[i + 1] - cum_s[i];
    double t = seg_len > 0 ? (s - cum_s[i]) / seg_len : 0.0;
    return polyline[i] + (polyline[i + 1] - polyline[i]) * t;
}

Vec2 Path::tangent_at(double s) const {
    if (polyline.size() < 2) throw std::invalid_argument("path has no segments");
    s = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum_s.begin(), cum_s.end(), s);
    std::size_t i = (it == cum_s.begin()) ? 0 : static_cast<std::size_t>(it - cum_s.begin()) - 1;
    if (i >= polyline.size() - 1) i = polyline.size() - 2;
    Vec2 d = polyline[i + 1] - polyline[i];
    double n = d.norm();
    return n > 0 ? d * (1.0 / n) : Vec2{1, 0};
}

namespace {

constexpr double kSampleStep = 0.01;   // 1 cm arc-length sampling
constexpr double kMinSpanLen = 0.005;  // below this a crossing counts as a corner graze

void compute_cum_s(Path& p) {
    p.cum_s.resize(p.polyline.size());
    p.cum_s[0] = 0.0;
    for (std::size_t i = 1; i < p.polyline.size(); ++i) {
        double seg = (p.polyline[i] - p.polyline[i - 1]).norm();
        if (seg <= 0.0)
            throw std::invalid_argument("path '" + p.id + "': arc length not strictly increasing");
        p.cum_s[i] = p.cum_s[i - 1] + seg;
    }
}

// Refine the boundary crossing between a sample inside the rect and one outside.
double refine_boundary(const Path& p, const Rect& r, double s_in, double s_out) {
    for (int i = 0; i < 40; ++i) {
        double mid = 0.5 * (s_in + s_out);
        if (r.contains(p.point_at(mid)))
            s_in = mid;
        else
            s_out = mid;
    }
    return 0.5 * (s_in + s_out);
}

void compute_block_spans(Path& p, const std::vector<ConflictBlock>& blocks) {
    p.block_spans.clear();
    double len = p.length();
    for (const auto& b : blocks) {
        bool inside = false;
        double enter = 0.0;
        int crossings = 0;
        double prev_s = 0.0;
        bool prev_inside = b.region.contains(p.point_at(0.0));
        if (prev_inside) {
            inside = true;
            enter = 0.0;
            ++crossings;
        }
        auto close_span = [&](double exit_s) {
            if (exit_s - enter < kMinSpanLen)
                throw std::invalid_argument("path '" + p.id + "' grazes block '" + b.id + "'");
            p.block_spans.push_back({b.id, enter, exit_s});
        };
        for (double s = kSampleStep; s < len + kSampleStep; s += kSampleStep) {
            double sc = std::min(s, len);
            bool in = b.region.contains(p.point_at(sc));
            if (in && !prev_inside) {
                enter = refine_boundary(p, b.region, sc, prev_s);
                inside = true;
                ++crossings;
                if (crossings > 1)
                    throw std::invalid_argument("path '" + p.id + "' re-enters block '" + b.id + "'");
            } else if (!in && prev_inside) {
                close_span(refine_boundary(p, b.region, prev_s, sc));
                inside = false;
            }
            prev_inside = in;
            prev_s = sc;
            if (sc >= len) break;
        }
        if (inside) close_span(len);
    }
    std::sort(p.block_spans.begin(), p.block_spans.end(),
              [](const BlockSpan& a, const BlockSpan& c) { return a.enter_s < c.enter_s; });
    for (std::size_t i = 1; i < p.block_spans.size(); ++i) {
        if (p.block_spans[i].enter_s < p.block_spans[i - 1].exit_s)
            throw std::invalid_argument("path '" + p.id + "': overlapping block spans");
    }
}

Vec2 rotate90(const Vec2& v, int quarter_turns) {
    Vec2 r = v;
    for (int i = 0; i < ((quarter_turns % 4) + 4) % 4; ++i) r = {-r.y, r.x};
    return r;
}

std::vector<Vec2> arc_points(Vec2 center, double radius, double a0_deg, double a1_deg, int n) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        double a = (a0_deg + (a1_deg - a0_deg) * i / n) * std::numbers::pi / 180.0;
        pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return pts;
}

void append(std::vector<Vec2>& dst, const std::vector<Vec2>& src) {
    for (const auto& p : src) {
        if (!dst.empty() && (dst.back() - p).norm() < 1e-9) continue;
        dst.push_back(p);
    }
}

// Northbound base paths on a four-way layout; other approaches are rotations.
std::vector<GeometryConfig::PathSpec> four_way_paths(double half_canvas, double half_block,
                                                     double lane_width) {
    double lane = lane_width / 2.0; // travel-lane centerline offset from road axis
    std::vector<GeometryConfig::PathSpec> base;

    { // straight
        GeometryConfig::PathSpec p;
        p.id = "straight";
        p.polyline = {{lane, -half_canvas}, {lane, half_canvas}};
        base.push_back(std::move(p));
    }
    { // right turn: exit eastbound
        GeometryConfig::PathSpec p;
        p.id = "right";
        append(p.polyline, {{lane, -half_canvas}, {lane, -half_block}});
        append(p.polyline, arc_points({half_block, -half_block}, half_block - lane, 180, 90, 32));
        append(p.polyline, {{half_block, -lane}, {half_canvas, -lane}});
        p.id = "right";
        base.push_back(std::move(p));
    }
    { // left turn: exit westbound
        GeometryConfig::PathSpec p;
        p.id = "left";
        append(p.polyline, {{lane, -half_canvas}, {lane, -half_block}});
        append(p.polyline, arc_points({-half_block, -half_block}, half_block + lane, 0, 90, 48));
        append(p.polyline, {{-half_block, lane}, {-half_canvas, lane}});
        base.push_back(std::move(p));
    }

    static const char* approach[4] = {"nb", "wb", "sb", "eb"}; // +90 deg per step
    std::vector<GeometryConfig::PathSpec> out;
    for (int q = 0; q < 4; ++q) {
        for (const auto& b : base) {
            GeometryConfig::PathSpec p;
            p.id = std::string(approach[q]) + "_" + b.id;
            p.polyline.reserve(b.polyline.size());
            for (const auto& v : b.polyline) p.polyline.push_back(rotate90(v, q));
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<ConflictBlock> four_way_blocks(double half_block, int grid) {
    std::vector<ConflictBlock> blocks;
    if (grid <= 1) {
        blocks.push_back({"main", {-half_block, -half_block, half_block, half_block}});
        return blocks;
    }
    double cell = 2.0 * half_block / grid;
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            ConflictBlock b;
            b.id = "b" + std::to_string(gy) + std::to_string(gx);
            b.region = {-half_block + gx * cell, -half_block + gy * cell,
                        -half_block + (gx + 1) * cell, -half_block + (gy + 1) * cell};
            blocks.push_back(b);
        }
    }
    return blocks;
}

} // namespace

IntersectionModel IntersectionModel::build(const GeometryConfig& cfg) {
    IntersectionModel m;
    m.stop_line_offset_ = cfg.stop_line_offset;

    std::vector<GeometryConfig::PathSpec> path_specs;
    if (cfg.preset == "four_way") {
        m.blocks_ = four_way_blocks(cfg.block_size / 2.0, cfg.grid);
        path_specs = four_way_paths(cfg.canvas / 2.0, cfg.block_size / 2.0, cfg.lane_width);
    } else if (cfg.preset == "custom") {
        m.blocks_ = cfg.blocks;
        path_specs = cfg.paths;
    } else {
        throw std::invalid_argument("unknown geometry preset '" + cfg.preset + "'");
    }

    if (m.blocks_.empty()) throw std::invalid_argument("geometry has no conflict blocks");
    std::unordered_set<std::string> block_ids;
    for (const auto& b : m.blocks_) {
        if (b.region.area() <= 0)
            throw std::invalid_argument("block '" + b.id + "' has non-positive area");
        if (!block_ids.insert(b.id).second)
            throw std::invalid_argument("duplicate block id '" + b.id + "'");
    }
    for (std::size_t i = 0; i < m.blocks_.size(); ++i) {
        for (std::size_t j = i + 1; j < m.blocks_.size(); ++j) {
            if (m.blocks_[i].region.overlaps(m.blocks_[j].region))
                throw std::invalid_argument("blocks '" + m.blocks_[i].id + "' and '" +
                                            m.blocks_[j].id + "' overlap");
        }
    }

    std::unordered_set<std::string> path_ids;
    for (auto& spec : path_specs) {
        if (!path_ids.insert(spec.id).second)
            throw std::invalid_argument("duplicate path id '" + spec.id + "'");
        Path p;
        p.id = spec.id;
        p.polyline = spec.polyline;
        if (p.polyline.size() < 2)
            throw std::invalid_argument("path '" + p.id + "' needs at least two points");
        compute_cum_s(p);
        compute_block_spans(p, m.blocks_);
        if (p.block_spans.empty())
            throw std::invalid_argument("path '" + p.id + "' does not cross any block");
        m.paths_.push_back(std::move(p));
    }
    if (m.paths_.empty()) throw std::invalid_argument("geometry has no paths");
    return m;
}

const Path& IntersectionModel::path(const std::string& id) const {
    for (const auto& p : paths_)
        if (p.id == id) return p;
    throw std::invalid_argument("unknown path id '" + id + "'");
}

bool IntersectionModel::has_path(const std::string& id) const {
    for (const auto& p : paths_)
        if (p.id == id) return true;
    return false;
}

const ConflictBlock& IntersectionModel::block(const std::string& id) const {
    for (const auto& b : blocks_)
        if (b.id == id) return b;
    throw std::invalid_argument("unknown block id '" + id + "'");
}

bool IntersectionModel::paths_conflict(const std::string& a, const std::string& b) const {
    const Path& pa = path(a);
    const Path& pb = path(b);
    for (const auto& sa : pa.block_spans)
        for (const auto& sb : pb.block_spans)
            if (sa.block_id == sb.block_id) return true;
    return false;
}

BlockSpan IntersectionModel::block_span(const std::string& path_id,
                                        const std::string& block_id) const {
    const Path& p = path(path_id);
    for (const auto& s : p.block_spans)
        if (s.block_id == block_id) return s;
    throw std::invalid_argument("path '" + path_id + "' does not cross block '" + block_id + "'");
}

double IntersectionModel::first_enter_s(const std::string& path_id) const {
    return path(path_id).block_spans.front().enter_s;
}

double IntersectionModel::last_exit_s(const std::string& path_id) const {
    return path(path_id).block_spans.back().exit_s;
}

} // namespace vvccs::geom
