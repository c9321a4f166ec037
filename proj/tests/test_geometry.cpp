#include <stdexcept>

#include "doctest.h"
#include "vvccs/geometry.hpp"

using namespace vvccs::geom;

TEST_CASE("four-way preset builds twelve paths and one central block") {
    auto m = IntersectionModel::build(GeometryConfig{});
    CHECK(m.paths().size() == 12);
    CHECK(m.blocks().size() == 1);
    CHECK(m.blocks().front().id == "main");
    for (const char* a : {"nb", "wb", "sb", "eb"})
        for (const char* k : {"straight", "right", "left"})
            CHECK(m.has_path(std::string(a) + "_" + k));
}

TEST_CASE("straight path block span matches the block geometry") {
    auto m = IntersectionModel::build(GeometryConfig{});
    const Path& p = m.path("nb_straight");
    CHECK(p.length() == doctest::Approx(4.5));
    REQUIRE(p.block_spans.size() == 1);
    CHECK(p.block_spans[0].enter_s == doctest::Approx(1.8).epsilon(1e-3));
    CHECK(p.block_spans[0].exit_s == doctest::Approx(2.7).epsilon(1e-3));

    // lane placement: northbound on x = +lane_width/2, eastbound on y = -lane_width/2
    CHECK(p.point_at(0.0).x == doctest::Approx(0.225));
    CHECK(m.path("eb_straight").point_at(0.0).y == doctest::Approx(-0.225));
    CHECK(m.path("wb_straight").point_at(0.0).y == doctest::Approx(0.225));
}

TEST_CASE("point_at and tangent_at behave at segment boundaries") {
    auto m = IntersectionModel::build(GeometryConfig{});
    const Path& p = m.path("nb_straight");
    Vec2 mid = p.point_at(2.25);
    CHECK(mid.x == doctest::Approx(0.225));
    CHECK(mid.y == doctest::Approx(0.0));
    Vec2 t = p.tangent_at(2.25);
    CHECK(t.x == doctest::Approx(0.0));
    CHECK(t.y == doctest::Approx(1.0));
    // clamping beyond the ends
    CHECK(p.point_at(-1.0).y == doctest::Approx(-2.25));
    CHECK(p.point_at(99.0).y == doctest::Approx(2.25));
}

TEST_CASE("turning paths cross the central block with longer/shorter arcs") {
    auto m = IntersectionModel::build(GeometryConfig{});
    const Path& right = m.path("nb_right");
    const Path& left = m.path("nb_left");
    REQUIRE(right.block_spans.size() == 1);
    REQUIRE(left.block_spans.size() == 1);
    double right_len = right.block_spans[0].exit_s - right.block_spans[0].enter_s;
    double left_len = left.block_spans[0].exit_s - left.block_spans[0].enter_s;
    double straight_len = 0.9;
    CHECK(right_len < straight_len);
    CHECK(left_len > straight_len);
}

TEST_CASE("conflicts are defined by shared blocks") {
    auto m = IntersectionModel::build(GeometryConfig{});
    CHECK(m.paths_conflict("nb_straight", "eb_straight"));
    CHECK(m.paths_conflict("nb_straight", "nb_straight"));
    GeometryConfig g2;
    g2.grid = 2;
    auto m2 = IntersectionModel::build(g2);
    CHECK(m2.blocks().size() == 4);
    const Path& nb = m2.path("nb_straight");
    REQUIRE(nb.block_spans.size() == 2);
    CHECK(nb.block_spans[0].block_id == "b01");
    CHECK(nb.block_spans[1].block_id == "b11");
    // nb (x=0.225) and sb (x=-0.225) never share a sub-block on a 2x2 grid
    CHECK_FALSE(m2.paths_conflict("nb_straight", "sb_straight"));
    CHECK(m2.paths_conflict("nb_straight", "eb_straight"));
}

TEST_CASE("validation rejects malformed custom geometry") {
    GeometryConfig g;
    g.preset = "custom";
    SUBCASE("no blocks") {
        g.paths.push_back({"p", {{0, 0}, {1, 0}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
    SUBCASE("overlapping blocks") {
        g.blocks.push_back({"a", {0, 0, 1, 1}});
        g.blocks.push_back({"b", {0.5, 0.5, 1.5, 1.5}});
        g.paths.push_back({"p", {{-1, 0.25}, {2, 0.25}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
    SUBCASE("duplicate block ids") {
        g.blocks.push_back({"a", {0, 0, 1, 1}});
        g.blocks.push_back({"a", {2, 2, 3, 3}});
        g.paths.push_back({"p", {{-1, 0.5}, {2, 0.5}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
    SUBCASE("path crossing no block") {
        g.blocks.push_back({"a", {0, 0, 1, 1}});
        g.paths.push_back({"p", {{-1, 5}, {2, 5}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
    SUBCASE("path grazing a block") {
        g.blocks.push_back({"a", {0, 0, 1, 1}});
        g.paths.push_back({"deep", {{0.5, -1}, {0.5, 2}}});
        g.paths.push_back({"graze", {{0.5, -1}, {0.5, 0.003}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
    SUBCASE("path re-entering a block") {
        g.blocks.push_back({"a", {0, 0, 1, 1}});
        g.paths.push_back({"p", {{0.5, -1}, {0.5, 0.5}, {-1, 0.5}, {-1, 2}, {0.5, 2},
                                 {0.5, 0.9}}});
        CHECK_THROWS_AS(IntersectionModel::build(g), std::invalid_argument);
    }
}

TEST_CASE("rect semantics: closed containment, open overlap") {
    Rect r{0, 0, 1, 1};
    CHECK(r.contains({0, 0}));
    CHECK(r.contains({1, 1}));
    CHECK_FALSE(r.contains({1.0001, 0.5}));
    CHECK_FALSE(r.overlaps({1, 0, 2, 1})); // shared edge only
    CHECK(r.overlaps({0.999, 0, 2, 1}));
}
