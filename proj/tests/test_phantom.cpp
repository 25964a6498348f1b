#include <doctest.h>

#include <vector>

#include "sliceprop/errors.hpp"
#include "sliceprop/eval.hpp"
#include "sliceprop/phantom.hpp"
#include "sliceprop/postprocess.hpp"

using namespace sliceprop;

namespace {

BinaryMask hull_fill(const BinaryMask& m) {
    std::vector<Point> pts;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) pts.push_back({x, y});
    return fill_convex_polygon(convex_hull(pts), m.width, m.height);
}

}  // namespace

TEST_CASE("phantom parameter validation") {
    PhantomParams p;
    p.n_slices = 1;
    CHECK_THROWS_AS(generate_phantom(p), InvalidInput);
    p = PhantomParams{};
    p.shrink = 3.0;  // 22 - 3*9 < 4
    CHECK_THROWS_AS(generate_phantom(p), InvalidInput);
    p = PhantomParams{};
    p.drift = 5.0;
    CHECK_THROWS_AS(generate_phantom(p), InvalidInput);
}

TEST_CASE("zero noise, drift and shrink give identical slices") {
    PhantomParams p;
    p.noise_sd = 0.0;
    p.lv_intensity_sd = 0.0;
    p.drift = 0.0;
    p.shrink = 0.0;
    p.bg_blob_count = 0;
    p.seed = 5;
    const PhantomStack ph = generate_phantom(p);
    REQUIRE(ph.stack.count() == p.n_slices);
    for (int k = 1; k < p.n_slices; ++k) {
        CHECK(ph.stack.slices[k].intensities == ph.stack.slices[0].intensities);
        CHECK(ph.ground_truth[k] == ph.ground_truth[0]);
    }
}

TEST_CASE("ground-truth areas strictly decrease under the default shrink") {
    PhantomParams p;
    p.seed = 42;
    const PhantomStack ph = generate_phantom(p);
    for (int k = 1; k < p.n_slices; ++k)
        CHECK(ph.ground_truth[k].popcount() < ph.ground_truth[k - 1].popcount());
}

TEST_CASE("phantom is deterministic given the seed") {
    PhantomParams p;
    p.seed = 11;
    const PhantomStack a = generate_phantom(p);
    const PhantomStack b = generate_phantom(p);
    for (int k = 0; k < p.n_slices; ++k) {
        CHECK(a.stack.slices[k].intensities == b.stack.slices[k].intensities);
        CHECK(a.ground_truth[k] == b.ground_truth[k]);
    }
    p.seed = 12;
    const PhantomStack c = generate_phantom(p);
    CHECK(a.stack.slices[0].intensities != c.stack.slices[0].intensities);
}

TEST_CASE("ground truths are connected, hole-free and hull-idempotent") {
    for (std::uint64_t seed : {1ull, 42ull, 7ull}) {
        PhantomParams p;
        p.seed = seed;
        const PhantomStack ph = generate_phantom(p);
        for (const BinaryMask& gt : ph.ground_truth) {
            CHECK(gt.popcount() > 0);
            const auto contours = find_contours(gt);
            REQUIRE(contours.size() == 1);  // one 8-connected component
            CHECK(fill_contour(contours[0], gt.width, gt.height) == gt);  // no holes
            CHECK(hull_fill(gt) == gt);  // convex up to pixelization
        }
    }
}

TEST_CASE("consecutive ground truths overlap strongly (dice >= 0.85)") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PhantomParams p;
        p.seed = seed;
        const PhantomStack ph = generate_phantom(p);
        for (int k = 1; k < p.n_slices; ++k)
            CHECK(dice(ph.ground_truth[k], ph.ground_truth[k - 1]) >= 0.85);
    }
}

TEST_CASE("pixel intensities respect the 8-bit range") {
    PhantomParams p;
    p.seed = 3;
    const PhantomStack ph = generate_phantom(p);
    CHECK_NOTHROW(ph.stack.validate());
    for (const ImageSlice& s : ph.stack.slices)
        CHECK(s.bit_depth == 8);
}
