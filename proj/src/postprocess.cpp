#include "sliceprop/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "sliceprop/errors.hpp"

namespace sliceprop {

namespace {

// 8-neighborhood in clockwise order (screen frame, y down).
constexpr std::array<Point, 8> kDirs{{{1, 0},
                                      {1, 1},
                                      {0, 1},
                                      {-1, 1},
                                      {-1, 0},
                                      {-1, -1},
                                      {0, -1},
                                      {1, -1}}};

int direction_of(Point from, Point to) {
    for (int d = 0; d < 8; ++d)
        if (from.x + kDirs[d].x == to.x && from.y + kDirs[d].y == to.y) return d;
    return -1;
}

/// Labels 8-connected components; labels start at 1 in raster order of
/// each component's first pixel. Returns the label map and first pixels.
std::vector<int> label_components(const BinaryMask& mask,
                                  std::vector<Point>& firsts) {
    const int w = mask.width, h = mask.height;
    std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
    std::vector<Point> stack;
    int next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask.bits[idx] || labels[idx]) continue;
            ++next;
            firsts.push_back({x, y});
            labels[idx] = next;
            stack.assign(1, Point{x, y});
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                for (const Point& d : kDirs) {
                    const int nx = p.x + d.x, ny = p.y + d.y;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.bits[ni] && !labels[ni]) {
                        labels[ni] = next;
                        stack.push_back({nx, ny});
                    }
                }
            }
        }
    }
    return labels;
}

/// Border following around one component, starting at its raster-first
/// pixel. Emits the outer border as a closed 8-connected point sequence.
Contour trace_border(const std::vector<int>& labels, int w, int h, int comp,
                     Point start) {
    auto is_comp = [&](Point p) {
        return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h &&
               labels[static_cast<std::size_t>(p.y) * w + p.x] == comp;
    };

    Contour contour;
    // Initial clockwise sweep from the (background) west neighbor.
    Point first_move{-1, -1};
    {
        int found = -1;
        for (int i = 0; i < 8; ++i) {
            const int d = (4 + i) % 8;  // 4 = west
            const Point n{start.x + kDirs[d].x, start.y + kDirs[d].y};
            if (is_comp(n)) {
                found = d;
                first_move = n;
                break;
            }
        }
        if (found < 0) {  // isolated pixel
            contour.points.push_back(start);
            return contour;
        }
    }

    Point prev = first_move;   // where we came from
    Point current = start;
    for (;;) {
        contour.points.push_back(current);
        const int back = direction_of(current, prev);
        Point next{-1, -1};
        for (int i = 1; i <= 8; ++i) {
            const int d = (back - i + 16) % 8;  // counterclockwise sweep
            const Point n{current.x + kDirs[d].x, current.y + kDirs[d].y};
            if (is_comp(n)) {
                next = n;
                break;
            }
        }
        // Closed once we step onto the start from the same pixel as the
        // initial move did (Suzuki's stopping rule).
        if (next == start && current == first_move) break;
        prev = current;
        current = next;
        if (contour.points.size() > 4 * labels.size()) break;  // unreachable guard
    }
    return contour;
}

std::int64_t cross(Point o, Point a, Point b) {
    return static_cast<std::int64_t>(a.x - o.x) * (b.y - o.y) -
           static_cast<std::int64_t>(a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<Contour> find_contours(const BinaryMask& mask) {
    mask.validate();
    std::vector<Point> firsts;
    const std::vector<int> labels = label_components(mask, firsts);
    std::vector<Contour> out;
    out.reserve(firsts.size());
    for (std::size_t c = 0; c < firsts.size(); ++c)
        out.push_back(trace_border(labels, mask.width, mask.height,
                                   static_cast<int>(c) + 1, firsts[c]));
    return out;
}

BinaryMask fill_contour(const Contour& contour, int width, int height) {
    if (contour.points.empty()) throw InvalidInput("fill_contour: empty contour");
    for (const Point& p : contour.points)
        if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height)
            throw InvalidInput("fill_contour: point out of bounds");
    const std::size_t m = contour.points.size();
    for (std::size_t i = 0; m > 1 && i < m; ++i) {
        const Point a = contour.points[i];
        const Point b = contour.points[(i + 1) % m];
        if (std::abs(a.x - b.x) > 1 || std::abs(a.y - b.y) > 1 || a == b)
            throw InvalidInput("fill_contour: consecutive points not 8-adjacent");
    }

    BinaryMask fill = BinaryMask::zeros(width, height);
    // Even-odd parity: an edge joining rows r and r+1 crosses the scanline
    // of row r at the x of its row-r endpoint.
    std::vector<std::vector<int>> crossings(height);
    for (std::size_t i = 0; m > 1 && i < m; ++i) {
        const Point a = contour.points[i];
        const Point b = contour.points[(i + 1) % m];
        if (a.y == b.y) continue;
        const Point upper = a.y < b.y ? a : b;
        crossings[upper.y].push_back(upper.x);
    }
    for (int y = 0; y < height; ++y) {
        auto& xs = crossings[y];
        std::sort(xs.begin(), xs.end());
        bool inside = false;
        std::size_t ptr = 0;
        for (int x = 0; x < width; ++x) {
            while (ptr < xs.size() && xs[ptr] < x) {
                inside = !inside;
                ++ptr;
            }
            if (inside) fill.set(x, y, 1);
        }
    }
    for (const Point& p : contour.points) fill.set(p.x, p.y, 1);
    return fill;
}

std::optional<std::size_t> select_max_overlap(const std::vector<Contour>& contours,
                                              const BinaryMask& prev_lv) {
    std::optional<std::size_t> best;
    std::size_t best_overlap = 0, best_area = 0;
    for (std::size_t i = 0; i < contours.size(); ++i) {
        const BinaryMask filled =
            fill_contour(contours[i], prev_lv.width, prev_lv.height);
        std::size_t overlap = 0, area = 0;
        for (std::size_t k = 0; k < filled.bits.size(); ++k) {
            overlap += filled.bits[k] & prev_lv.bits[k];
            area += filled.bits[k];
        }
        if (overlap == 0) continue;
        if (!best || overlap > best_overlap ||
            (overlap == best_overlap && area > best_area)) {
            best = i;
            best_overlap = overlap;
            best_area = area;
        }
    }
    return best;
}

Polygon convex_hull(const std::vector<Point>& points) {
    if (points.empty()) throw InvalidInput("convex_hull: no points");
    std::vector<Point> pts = points;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    if (pts.size() == 1) return Polygon{{pts[0]}};

    // Monotone chain; popping on cross <= 0 drops collinear points.
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const std::size_t lower_end = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
        while (k >= lower_end && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);  // last point equals the first
    return Polygon{std::move(hull)};
}

BinaryMask fill_convex_polygon(const Polygon& poly, int width, int height) {
    if (poly.vertices.empty())
        throw InvalidInput("fill_convex_polygon: empty polygon");
    for (const Point& v : poly.vertices)
        if (v.x < 0 || v.y < 0 || v.x >= width || v.y >= height)
            throw InvalidInput("fill_convex_polygon: vertex out of bounds");

    BinaryMask out = BinaryMask::zeros(width, height);
    const std::vector<Point>& v = poly.vertices;

    // Degenerate polygons: a point, or all vertices collinear.
    std::int64_t signed_area2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        signed_area2 += cross(v[0], v[i], v[(i + 1) % v.size()]);
    if (signed_area2 == 0) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const Point a = *lo, b = *hi;
        if (a == b) {
            out.set(a.x, a.y, 1);
            return out;
        }
        const std::int64_t len2 = static_cast<std::int64_t>(b.x - a.x) * (b.x - a.x) +
                                  static_cast<std::int64_t>(b.y - a.y) * (b.y - a.y);
        for (int y = std::min(a.y, b.y); y <= std::max(a.y, b.y); ++y)
            for (int x = std::min(a.x, b.x); x <= std::max(a.x, b.x); ++x) {
                const Point q{x, y};
                const std::int64_t dot =
                    static_cast<std::int64_t>(q.x - a.x) * (b.x - a.x) +
                    static_cast<std::int64_t>(q.y - a.y) * (b.y - a.y);
                if (cross(a, b, q) == 0 && dot >= 0 && dot <= len2) out.set(x, y, 1);
            }
        return out;
    }

    std::vector<Point> verts = v;
    if (signed_area2 < 0) std::reverse(verts.begin(), verts.end());

    int xmin = verts[0].x, xmax = verts[0].x, ymin = verts[0].y, ymax = verts[0].y;
    for (const Point& p : verts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    for (int y = ymin; y <= ymax; ++y) {
        for (int x = xmin; x <= xmax; ++x) {
            const Point q{x, y};
            bool inside = true;
            for (std::size_t i = 0; i < verts.size(); ++i) {
                if (cross(verts[i], verts[(i + 1) % verts.size()], q) < 0) {
                    inside = false;
                    break;
                }
            }
            if (inside) out.set(x, y, 1);
        }
    }
    return out;
}

PostProcessResult post_process(const BinaryMask& raw, const BinaryMask& prev_lv) {
    if (!raw.same_shape(prev_lv)) throw InvalidInput("post_process: dimension mismatch");
    const std::vector<Contour> contours = find_contours(raw);
    const auto selected = select_max_overlap(contours, prev_lv);
    if (!selected) return {prev_lv, true};

    const BinaryMask region =
        fill_contour(contours[*selected], raw.width, raw.height);
    std::vector<Point> fg;
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x)
            if (region.at(x, y)) fg.push_back({x, y});
    const Polygon hull = convex_hull(fg);
    return {fill_convex_polygon(hull, raw.width, raw.height), false};
}

}  // namespace sliceprop
