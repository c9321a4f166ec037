#pragma once

#include <string>
#include <vector>

namespace vvccs::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const;
};

/// Axis-aligned rectangle, corners (x0,y0) .. (x1,y1) with x0 < x1, y0 < y1.
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(const Vec2& p) const {
        return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
    }
    bool overlaps(const Rect& o) const {
        return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
    }
    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct ConflictBlock {
    std::string id;
    Rect region;
};

/// Arc-length interval a path occupies inside one block, half-open [enter_s, exit_s).
struct BlockSpan {
    std::string block_id;
    double enter_s = 0.0;
    double exit_s = 0.0;
};

struct Path {
    std::string id;
    std::vector<Vec2> polyline;
    std::vector<double> cum_s;          // cumulative arc length per vertex
    std::vector<BlockSpan> block_spans; // ordered by enter_s

    double length() const { return cum_s.empty() ? 0.0 : cum_s.back(); }
    Vec2 point_at(double s) const;
    Vec2 tangent_at(double s) const; // unit vector
};

struct GeometryConfig {
    std::string preset = "four_way"; // "four_way" or "custom"
    double canvas = 4.5;
    double block_size = 0.9;
    double lane_width = 0.45;
    int grid = 1; // four_way: split the central block into grid x grid sub-blocks
    double stop_line_offset = 0.30; // clears a default-length vehicle nose from the block
    // custom preset
    std::vector<ConflictBlock> blocks;
    struct PathSpec {
        std::string id;
        std::vector<Vec2> polyline;
    };
    std::vector<PathSpec> paths;
};

class IntersectionModel {
public:
    /// Validates invariants and precomputes block spans; throws std::invalid_argument.
    static IntersectionModel build(const GeometryConfig& cfg);

    const std::vector<ConflictBlock>& blocks() const { return blocks_; }
    const std::vector<Path>& paths() const { return paths_; }
    const Path& path(const std::string& id) const;
    const ConflictBlock& block(const std::string& id) const;
    bool has_path(const std::string& id) const;

    bool paths_conflict(const std::string& a, const std::string& b) const;
    /// Throws if the path does not cross the block.
    BlockSpan block_span(const std::string& path_id, const std::string& block_id) const;

    double stop_line_offset() const { return stop_line_offset_; }
    /// Arc length where the path first enters any block.
    double first_enter_s(const std::string& path_id) const;
    /// Arc length where the path last exits any block.
    double last_exit_s(const std::string& path_id) const;

private:
    std::vector<ConflictBlock> blocks_;
    std::vector<Path> paths_;
    double stop_line_offset_ = 0.30;
};

} // namespace vvccs::geom
