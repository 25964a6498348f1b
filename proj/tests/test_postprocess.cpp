#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "sliceprop/errors.hpp"
#include "sliceprop/postprocess.hpp"
#include "sliceprop/rng.hpp"

using namespace sliceprop;
using oracles::brute_hull_vertices;
using oracles::components_holes_filled;
using oracles::cross3;
using oracles::in_hull_of;

namespace {

std::set<std::pair<int, int>> vertex_set(const Polygon& poly) {
    std::set<std::pair<int, int>> out;
    for (const Point& v : poly.vertices) out.insert({v.x, v.y});
    return out;
}

BinaryMask random_mask(int w, int h, Rng& rng, double density) {
    BinaryMask m = BinaryMask::zeros(w, h);
    for (auto& b : m.bits) b = rng.bernoulli(density) ? 1 : 0;
    return m;
}

void stamp_disk(BinaryMask& m, double cx, double cy, double r, std::uint8_t v = 1) {
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y, v);
}

bool subset_of(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] && !b.bits[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("find_contours basic shapes") {
    SUBCASE("empty mask -> no contours") {
        CHECK(find_contours(BinaryMask::zeros(8, 8)).empty());
    }
    SUBCASE("single pixel") {
        BinaryMask m = BinaryMask::zeros(8, 8);
        m.set(3, 3, 1);
        const auto contours = find_contours(m);
        REQUIRE(contours.size() == 1);
        REQUIRE(contours[0].points.size() == 1);
        CHECK(contours[0].points[0] == Point{3, 3});
    }
    SUBCASE("two blobs and a hole -> 2 contours, union of fills closes the hole") {
        BinaryMask m = BinaryMask::zeros(16, 16);
        // ring with a hole at (3,3)
        for (int y = 1; y <= 5; ++y)
            for (int x = 1; x <= 5; ++x) m.set(x, y, 1);
        m.set(3, 3, 0);
        // second blob
        for (int y = 10; y <= 12; ++y)
            for (int x = 10; x <= 13; ++x) m.set(x, y, 1);

        const auto contours = find_contours(m);
        REQUIRE(contours.size() == 2);
        BinaryMask acc = BinaryMask::zeros(16, 16);
        for (const Contour& c : contours)
            acc = mask_union(acc, fill_contour(c, 16, 16));
        BinaryMask expected = m;
        expected.set(3, 3, 1);  // hole filled
        CHECK(acc == expected);
    }
}

TEST_CASE("contour order is raster order of first pixels") {
    BinaryMask m = BinaryMask::zeros(10, 10);
    m.set(7, 1, 1);
    m.set(2, 4, 1);
    m.set(5, 4, 1);
    const auto contours = find_contours(m);
    REQUIRE(contours.size() == 3);
    CHECK(contours[0].points[0] == Point{7, 1});
    CHECK(contours[1].points[0] == Point{2, 4});
    CHECK(contours[2].points[0] == Point{5, 4});
}

TEST_CASE("contours are closed 8-connected borders") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const BinaryMask m = random_mask(16, 16, rng, 0.4);
        for (const Contour& c : find_contours(m)) {
            REQUIRE(!c.points.empty());
            const std::size_t n = c.points.size();
            for (std::size_t i = 0; n > 1 && i < n; ++i) {
                const Point a = c.points[i], b = c.points[(i + 1) % n];
                CHECK(std::abs(a.x - b.x) <= 1);
                CHECK(std::abs(a.y - b.y) <= 1);
                CHECK(a != b);
            }
        }
    }
}

TEST_CASE("fill_contour on elementary shapes") {
    SUBCASE("one-pixel contour") {
        const BinaryMask f = fill_contour(Contour{{{2, 3}}}, 6, 6);
        CHECK(f.popcount() == 1);
        CHECK(f.at(2, 3) == 1);
    }
    SUBCASE("4x4 solid square border fills the block") {
        BinaryMask square = BinaryMask::zeros(8, 8);
        for (int y = 2; y <= 5; ++y)
            for (int x = 2; x <= 5; ++x) square.set(x, y, 1);
        const auto contours = find_contours(square);
        REQUIRE(contours.size() == 1);
        CHECK(fill_contour(contours[0], 8, 8) == square);
    }
    SUBCASE("annulus outer border fills to a solid disk") {
        BinaryMask ring = BinaryMask::zeros(24, 24);
        stamp_disk(ring, 11.5, 11.5, 8.0);
        BinaryMask solid = ring;
        stamp_disk(ring, 11.5, 11.5, 4.0, 0);  // cut the hole
        const auto contours = find_contours(ring);
        REQUIRE(contours.size() == 1);
        // flood-fill-from-outside oracle: expected is the solid disk
        const auto oracle = components_holes_filled(ring);
        REQUIRE(oracle.size() == 1);
        CHECK(oracle[0] == solid);
        CHECK(fill_contour(contours[0], 24, 24) == solid);
    }
    SUBCASE("out-of-bounds points are rejected") {
        CHECK_THROWS_AS(fill_contour(Contour{{{6, 3}}}, 6, 6), InvalidInput);
    }
}

TEST_CASE("fill of every component's outer border equals the holes-filled "
          "component (CC + flood oracle)") {
    Rng rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryMask m = random_mask(16, 16, rng, 0.35 + 0.3 * rng.uniform01());
        const auto contours = find_contours(m);
        const auto oracle = components_holes_filled(m);
        REQUIRE(contours.size() == oracle.size());
        for (std::size_t i = 0; i < contours.size(); ++i)
            CHECK(fill_contour(contours[i], 16, 16) == oracle[i]);
    }
}

TEST_CASE("select_max_overlap") {
    SUBCASE("single contour inside prev wins") {
        BinaryMask m = BinaryMask::zeros(16, 16);
        stamp_disk(m, 8, 8, 3);
        BinaryMask prev = BinaryMask::zeros(16, 16);
        stamp_disk(prev, 8, 8, 5);
        const auto contours = find_contours(m);
        REQUIRE(select_max_overlap(contours, prev) == 0);
    }
    SUBCASE("only the touching blob is selected") {
        BinaryMask m = BinaryMask::zeros(16, 16);
        for (int y = 1; y <= 3; ++y)
            for (int x = 1; x <= 3; ++x) m.set(x, y, 1);
        for (int y = 10; y <= 12; ++y)
            for (int x = 10; x <= 12; ++x) m.set(x, y, 1);
        BinaryMask prev = BinaryMask::zeros(16, 16);
        stamp_disk(prev, 11, 11, 2.5);
        const auto contours = find_contours(m);
        REQUIRE(contours.size() == 2);
        CHECK(select_max_overlap(contours, prev) == 1);
    }
    SUBCASE("empty list and zero overlap yield nullopt") {
        const BinaryMask prev = BinaryMask::zeros(8, 8);
        CHECK(!select_max_overlap({}, prev).has_value());
        BinaryMask m = BinaryMask::zeros(8, 8);
        m.set(1, 1, 1);
        CHECK(!select_max_overlap(find_contours(m), prev).has_value());
    }
    SUBCASE("random blobs match the exhaustive overlap oracle") {
        Rng rng(77);
        for (int trial = 0; trial < 100; ++trial) {
            BinaryMask m = BinaryMask::zeros(16, 16);
            for (int b = 0; b < 3; ++b)
                stamp_disk(m, 2 + rng.uniform01() * 12, 2 + rng.uniform01() * 12,
                           1.0 + rng.uniform01() * 2.5);
            const BinaryMask prev = random_mask(16, 16, rng, 0.3);
            const auto contours = find_contours(m);
            const auto fills = components_holes_filled(m);  // oracle fills
            REQUIRE(contours.size() == fills.size());

            std::optional<std::size_t> expect;
            std::size_t best_ov = 0, best_area = 0;
            for (std::size_t i = 0; i < fills.size(); ++i) {
                std::size_t ov = 0, area = 0;
                for (std::size_t k = 0; k < fills[i].bits.size(); ++k) {
                    ov += fills[i].bits[k] & prev.bits[k];
                    area += fills[i].bits[k];
                }
                if (ov == 0) continue;
                if (!expect || ov > best_ov || (ov == best_ov && area > best_area)) {
                    expect = i;
                    best_ov = ov;
                    best_area = area;
                }
            }
            CHECK(select_max_overlap(contours, prev) == expect);
        }
    }
}

TEST_CASE("convex_hull elementary cases") {
    SUBCASE("square corners plus center") {
        const Polygon h =
            convex_hull({{0, 0}, {4, 0}, {4, 4}, {0, 4}, {2, 2}});
        CHECK(vertex_set(h) ==
              std::set<std::pair<int, int>>{{0, 0}, {4, 0}, {4, 4}, {0, 4}});
    }
    SUBCASE("collinear points collapse to the two extremes") {
        const Polygon h = convex_hull({{1, 1}, {3, 3}, {5, 5}, {2, 2}});
        REQUIRE(h.vertices.size() == 2);
        CHECK(vertex_set(h) == std::set<std::pair<int, int>>{{1, 1}, {5, 5}});
    }
    SUBCASE("single point") {
        const Polygon h = convex_hull({{7, 2}, {7, 2}});
        REQUIRE(h.vertices.size() == 1);
        CHECK(h.vertices[0] == Point{7, 2});
    }
}

TEST_CASE("convex_hull matches the O(n^4) brute-force definition") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(12);
        std::vector<Point> pts;
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({static_cast<int>(rng.uniform_index(32)),
                           static_cast<int>(rng.uniform_index(32))});
        const Polygon h = convex_hull(pts);
        CHECK(vertex_set(h) == brute_hull_vertices(pts));
        // counterclockwise and convex: consecutive edge cross products >= 0
        const std::size_t m = h.vertices.size();
        for (std::size_t i = 0; m >= 3 && i < m; ++i)
            CHECK(cross3(h.vertices[i], h.vertices[(i + 1) % m],
                         h.vertices[(i + 2) % m]) > 0);
    }
}

TEST_CASE("fill_convex_polygon") {
    SUBCASE("one vertex -> one pixel") {
        const BinaryMask f = fill_convex_polygon(Polygon{{{3, 4}}}, 8, 8);
        CHECK(f.popcount() == 1);
        CHECK(f.at(3, 4) == 1);
    }
    SUBCASE("axis-aligned rectangle -> exact block") {
        const BinaryMask f =
            fill_convex_polygon(Polygon{{{2, 1}, {6, 1}, {6, 5}, {2, 5}}}, 10, 10);
        CHECK(f.popcount() == 5u * 5u);
        for (int y = 1; y <= 5; ++y)
            for (int x = 2; x <= 6; ++x) CHECK(f.at(x, y) == 1);
    }
    SUBCASE("random convex polygon equals the triangle-fan containment oracle") {
        Rng rng(88);
        int tested = 0;
        while (tested < 100) {
            std::vector<Point> pts;
            for (int i = 0; i < 6; ++i)
                pts.push_back({static_cast<int>(rng.uniform_index(32)),
                               static_cast<int>(rng.uniform_index(32))});
            const Polygon h = convex_hull(pts);
            if (h.vertices.size() < 3) continue;
            ++tested;
            const BinaryMask f = fill_convex_polygon(h, 32, 32);
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x)
                    CHECK(static_cast<bool>(f.at(x, y)) ==
                          in_hull_of(h.vertices, Point{x, y}));
        }
    }
    SUBCASE("fill(hull(S)) contains S for random pixel sets") {
        Rng rng(89);
        for (int trial = 0; trial < 100; ++trial) {
            const BinaryMask s = random_mask(16, 16, rng, 0.2);
            if (s.none_set()) continue;
            std::vector<Point> pts;
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    if (s.at(x, y)) pts.push_back({x, y});
            const BinaryMask f = fill_convex_polygon(convex_hull(pts), 16, 16);
            CHECK(subset_of(s, f));
        }
    }
}

TEST_CASE("post_process keeps an axis-aligned rectangle unchanged") {
    BinaryMask raw = BinaryMask::zeros(20, 20);
    for (int y = 5; y <= 12; ++y)
        for (int x = 4; x <= 10; ++x) raw.set(x, y, 1);
    BinaryMask prev = BinaryMask::zeros(20, 20);
    for (int y = 6; y <= 13; ++y)
        for (int x = 5; x <= 11; ++x) prev.set(x, y, 1);
    const PostProcessResult r = post_process(raw, prev);
    CHECK_FALSE(r.fell_back);
    CHECK(r.mask == raw);
}

TEST_CASE("post_process rebuilds the noisy-inference scenario") {
    // Main disk with interior holes and a boundary bite, two isolated
    // blobs; previous LV is a slightly shifted disk.
    const int w = 40, h = 40;
    const double cx = 16, cy = 16, r = 10;
    BinaryMask disk = BinaryMask::zeros(w, h);
    stamp_disk(disk, cx, cy, r);

    BinaryMask raw = disk;
    raw.set(16, 16, 0);  // hole
    for (int y = 14; y <= 15; ++y)
        for (int x = 12; x <= 13; ++x) raw.set(x, y, 0);  // hole
    BinaryMask bite = BinaryMask::zeros(w, h);
    for (int y = 14; y <= 18; ++y)
        for (int x = 22; x < w; ++x)
            if (raw.at(x, y)) {
                raw.set(x, y, 0);  // boundary notch
                bite.set(x, y, 1);
            }
    BinaryMask blobs = BinaryMask::zeros(w, h);
    for (int y = 4; y <= 5; ++y)
        for (int x = 33; x <= 34; ++x) blobs.set(x, y, 1);
    blobs.set(3, 33, 1);
    raw = mask_union(raw, blobs);

    BinaryMask prev = BinaryMask::zeros(w, h);
    stamp_disk(prev, 15, 16, 10);

    const PostProcessResult result = post_process(raw, prev);
    CHECK_FALSE(result.fell_back);

    // isolated blobs removed
    CHECK(mask_intersection(result.mask, blobs).none_set());
    // holes filled
    CHECK(result.mask.at(16, 16) == 1);
    CHECK(result.mask.at(12, 14) == 1);
    CHECK(result.mask.at(13, 15) == 1);
    // hull closure of a disk subset cannot leave the disk
    CHECK(subset_of(result.mask, disk));
    // everything outside the bite is kept
    BinaryMask kept = disk;
    for (std::size_t i = 0; i < kept.bits.size(); ++i)
        if (bite.bits[i]) kept.bits[i] = 0;
    CHECK(subset_of(kept, result.mask));
    // the notch core (between the surviving rows above and below) closes
    for (int y = 14; y <= 18; ++y)
        for (int x = 22; x <= 25; ++x)
            if (disk.at(x, y)) CHECK(result.mask.at(x, y) == 1);

    // output is a single hole-free component
    const auto contours = find_contours(result.mask);
    REQUIRE(contours.size() == 1);
    const auto comps = components_holes_filled(result.mask);
    CHECK(comps[0] == result.mask);

    // idempotence
    const PostProcessResult again = post_process(result.mask, prev);
    CHECK(again.mask == result.mask);
}

TEST_CASE("post_process falls back to prev when nothing overlaps") {
    BinaryMask raw = BinaryMask::zeros(16, 16);
    raw.set(1, 1, 1);
    BinaryMask prev = BinaryMask::zeros(16, 16);
    stamp_disk(prev, 11, 11, 3);
    const PostProcessResult r = post_process(raw, prev);
    CHECK(r.fell_back);
    CHECK(r.mask == prev);

    CHECK_THROWS_AS(post_process(raw, BinaryMask::zeros(8, 8)), InvalidInput);
}

TEST_CASE("post_process output is hole-free, convex-closed, idempotent on "
          "random fat blobs") {
    Rng rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        BinaryMask raw = BinaryMask::zeros(32, 32);
        for (int b = 0; b < 3; ++b)
            stamp_disk(raw, 6 + rng.uniform01() * 20, 6 + rng.uniform01() * 20,
                       2.5 + rng.uniform01() * 4.0);
        BinaryMask prev = BinaryMask::zeros(32, 32);
        stamp_disk(prev, 16, 16, 8);
        const PostProcessResult r = post_process(raw, prev);
        if (r.fell_back) continue;
        // single hole-free component
        REQUIRE(find_contours(r.mask).size() == 1);
        CHECK(components_holes_filled(r.mask)[0] == r.mask);
        // hull-fill idempotence
        CHECK(post_process(r.mask, prev).mask == r.mask);
    }
}
