#pragma once

#include <compare>
#include <optional>
#include <vector>

#include "sliceprop/core.hpp"

namespace sliceprop {

struct Point {
    int x = 0;
    int y = 0;
    auto operator<=>(const Point&) const = default;
};

/// Ordered outer border of one 8-connected foreground component;
/// consecutive points (and last-to-first) are 8-adjacent.
struct Contour {
    std::vector<Point> points;
};

/// Vertices in counterclockwise order; convex when every cross product
/// of consecutive edges is >= 0.
struct Polygon {
    std::vector<Point> vertices;
};

/// One contour per 8-connected foreground component's outer border, in
/// raster order of each component's first pixel. Hole borders are not
/// reported; filling an outer border recovers the component with its
/// holes closed.
std::vector<Contour> find_contours(const BinaryMask& mask);

/// All pixels inside or on the contour (even-odd scanline fill against
/// the traced border). Holes enclosed by the border come out filled.
BinaryMask fill_contour(const Contour& contour, int width, int height);

/// Index of the contour whose filled area overlaps prev_lv the most.
/// Empty list or all-zero overlaps yield nullopt. Ties break by larger
/// filled area, then by list order.
std::optional<std::size_t> select_max_overlap(const std::vector<Contour>& contours,
                                              const BinaryMask& prev_lv);

/// Exact integer convex hull, counterclockwise, collinear interior
/// points excluded. One point degenerates to a single vertex, a
/// collinear set to its two extremes.
Polygon convex_hull(const std::vector<Point>& points);

/// All integer pixels inside or on the polygon (boundary inclusive).
BinaryMask fill_convex_polygon(const Polygon& poly, int width, int height);

struct PostProcessResult {
    BinaryMask mask;
    bool fell_back = false;  // no contour overlapped prev_lv
};

/// Keeps the connected region that best overlaps the previous slice's
/// LV, fills its holes, and closes concavities with the convex hull.
/// When nothing overlaps, returns prev_lv unchanged and flags it.
PostProcessResult post_process(const BinaryMask& raw, const BinaryMask& prev_lv);

}  // namespace sliceprop
