#include "gcp/cutter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "gcp/error.hpp"

namespace gcp {

namespace {

// Neighbour offsets in clockwise order on screen (x right, y down),
// starting east.
constexpr std::array<Point, 8> kRing = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr int kWest = 4;

int direction_of(Point from, Point to) {
    const Point d{to.x - from.x, to.y - from.y};
    for (int i = 0; i < 8; ++i)
        if (kRing[i] == d)
            return i;
    return -1;
}

Point step(Point p, int dir) { return {p.x + kRing[dir].x, p.y + kRing[dir].y}; }

// Border following on one labelled component. `start` must be the first
// pixel of the component in raster order, so its west neighbour is outside.
Contour trace_component(const Raster<int, 1>& labels, int label, Point start) {
    auto inside = [&](Point p) { return labels.contains(p.x, p.y) && labels.at(p.x, p.y) == label; };

    Contour contour;
    contour.points.push_back(start);

    // Counter-clockwise sweep from the west neighbour finds the pixel the
    // trace will arrive from when it closes.
    Point last{};
    bool found = false;
    for (int k = 0; k < 8 && !found; ++k) {
        const Point q = step(start, (kWest - k + 8) % 8);
        if (inside(q)) {
            last = q;
            found = true;
        }
    }
    if (!found)
        return contour;

    Point prev = last;
    Point cur = start;
    for (;;) {
        const int back = direction_of(cur, prev);
        Point next = prev;
        for (int k = 1; k <= 8; ++k) {
            const Point q = step(cur, (back + k) % 8);
            if (inside(q)) {
                next = q;
                break;
            }
        }
        if (next == start && cur == last)
            break;
        prev = cur;
        cur = next;
        contour.points.push_back(cur);
    }
    return contour;
}

std::vector<Point> first_pixels(const Raster<int, 1>& labels, std::size_t components) {
    std::vector<Point> first(components, Point{-1, -1});
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            const int l = labels.at(x, y);
            if (l > 0 && first[l - 1].x < 0)
                first[l - 1] = {x, y};
        }
    return first;
}

double normalize_angle(double a) {
    constexpr double pi = std::numbers::pi;
    while (a >= pi / 2)
        a -= pi;
    while (a < -pi / 2)
        a += pi;
    return a;
}

long long cross(Point o, Point a, Point b) {
    return static_cast<long long>(a.x - o.x) * (b.y - o.y) - static_cast<long long>(a.y - o.y) * (b.x - o.x);
}

} // namespace

RgbImage object_map(const RgbImage& image, const BinaryMask& mask) {
    if (image.size() != mask.size())
        throw ValidationError("image and mask dimensions differ");
    if (!mask.any())
        throw ValidationError("object map of an empty mask");
    RgbImage out(image.size());
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (mask.at(x, y))
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = image.at(x, y, c);
    return out;
}

ComponentLabels label_components(const BinaryMask& mask) {
    ComponentLabels out{Raster<int, 1>(mask.size(), 0), {}};
    std::vector<Point> stack;
    int next_label = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y) || out.labels.at(x, y) != 0)
                continue;
            const int label = ++next_label;
            std::size_t size = 0;
            out.labels.at(x, y) = label;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                ++size;
                for (const Point d : kRing) {
                    const Point q{p.x + d.x, p.y + d.y};
                    if (mask.at_or_background(q.x, q.y) && out.labels.at(q.x, q.y) == 0) {
                        out.labels.at(q.x, q.y) = label;
                        stack.push_back(q);
                    }
                }
            }
            out.sizes.push_back(size);
        }
    }
    return out;
}

std::vector<Contour> trace_contours(const BinaryMask& mask) {
    if (!mask.any())
        throw ValidationError("cannot trace contours of an empty mask");
    const auto comps = label_components(mask);
    const auto starts = first_pixels(comps.labels, comps.sizes.size());
    std::vector<Contour> contours;
    contours.reserve(starts.size());
    for (std::size_t k = 0; k < starts.size(); ++k)
        contours.push_back(trace_component(comps.labels, static_cast<int>(k + 1), starts[k]));
    return contours;
}

std::vector<Point> convex_hull(std::vector<Point> points) {
    std::sort(points.begin(), points.end(),
              [](Point a, Point b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3)
        return points;
    std::vector<Point> hull(2 * points.size());
    std::size_t k = 0;
    for (const Point p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0)
            --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
        const Point p = points[i];
        while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0)
            --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

RotatedRect min_area_rect(const std::vector<Point>& points) {
    if (points.empty())
        throw ValidationError("minimum-area rectangle of no points");
    const auto hull = convex_hull(points);
    const std::size_t m = hull.size();
    if (m == 1)
        return RotatedRect{{double(hull[0].x), double(hull[0].y)}, 0.0, 0.0, 0.0};

    auto at = [&](std::size_t i) { return Vec2{double(hull[i % m].x), double(hull[i % m].y)}; };
    auto dot = [](Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; };

    RotatedRect best;
    double best_area = -1.0;
    // Calipers: j tracks the farthest point along the edge, k the farthest
    // from the edge line, l the farthest against the edge direction.
    std::size_t j = 1, k = 1, l = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 a = at(i), b = at(i + 1);
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        const Vec2 u{(b.x - a.x) / len, (b.y - a.y) / len};
        const Vec2 n{-u.y, u.x};

        if (i == 0) {
            for (std::size_t t = 0; t < m; ++t) {
                if (dot(at(t), u) > dot(at(j), u)) j = t;
                if (dot(at(t), n) > dot(at(k), n)) k = t;
                if (dot(at(t), u) < dot(at(l), u)) l = t;
            }
        } else {
            for (std::size_t guard = 0; guard < m && dot(at(j + 1), u) >= dot(at(j), u); ++guard) j = (j + 1) % m;
            for (std::size_t guard = 0; guard < m && dot(at(k + 1), n) >= dot(at(k), n); ++guard) k = (k + 1) % m;
            for (std::size_t guard = 0; guard < m && dot(at(l + 1), u) <= dot(at(l), u); ++guard) l = (l + 1) % m;
        }

        const double u_min = dot(at(l), u), u_max = dot(at(j), u);
        const double n_min = dot(a, n), n_max = dot(at(k), n);
        const double width = u_max - u_min;
        const double height = std::max(0.0, n_max - n_min);
        const double area = width * height;
        const double angle = normalize_angle(std::atan2(u.y, u.x));

        const double tol = 1e-9 * std::max(1.0, best_area);
        const bool better = best_area < 0 || area < best_area - tol ||
                            (area <= best_area + tol && std::abs(angle) < std::abs(best.angle) - 1e-12);
        if (better) {
            best_area = area;
            const double cu = (u_min + u_max) / 2, cn = (n_min + n_max) / 2;
            best.center = {u.x * cu + n.x * cn, u.y * cu + n.y * cn};
            best.width = width;
            best.height = height;
            best.angle = angle;
        }
    }
    return best;
}

RotatedRect min_area_rect(const Contour& contour) { return min_area_rect(contour.points); }

std::vector<Vec2> RotatedRect::corners() const {
    const Vec2 u{std::cos(angle), std::sin(angle)};
    const Vec2 n{-u.y, u.x};
    std::vector<Vec2> out;
    for (const double su : {-0.5, 0.5})
        for (const double sn : {-0.5, 0.5})
            out.push_back({center.x + u.x * width * su + n.x * height * sn,
                           center.y + u.y * width * su + n.y * height * sn});
    return out;
}

bool is_complete(const Contour& contour, Size image_size, double border_tolerance) {
    if (contour.points.empty())
        return false;
    const auto on_border = std::count_if(contour.points.begin(), contour.points.end(), [&](Point p) {
        return p.x == 0 || p.y == 0 || p.x == image_size.width - 1 || p.y == image_size.height - 1;
    });
    const double fraction = static_cast<double>(on_border) / static_cast<double>(contour.points.size());
    return !(fraction > border_tolerance);
}

namespace {

Cutout extract_component(const ImageSample& sample, const Raster<int, 1>& labels, int label,
                         const Contour& contour, const RotatedRect& rect, double border_tolerance) {
    constexpr double eps = 1e-9;
    double min_x = rect.center.x, max_x = rect.center.x, min_y = rect.center.y, max_y = rect.center.y;
    for (const Vec2 c : rect.corners()) {
        min_x = std::min(min_x, c.x);
        max_x = std::max(max_x, c.x);
        min_y = std::min(min_y, c.y);
        max_y = std::max(max_y, c.y);
    }
    int x0 = static_cast<int>(std::floor(min_x + eps));
    int y0 = static_cast<int>(std::floor(min_y + eps));
    int x1 = static_cast<int>(std::ceil(max_x - eps));
    int y1 = static_cast<int>(std::ceil(max_y - eps));

    Cutout cut;
    cut.clamped = x0 < 0 || y0 < 0 || x1 >= sample.image.width() || y1 >= sample.image.height();
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, sample.image.width() - 1);
    y1 = std::min(y1, sample.image.height() - 1);

    cut.id = sample.id;
    cut.source_id = sample.id;
    cut.label = sample.label;
    cut.rect = rect;
    cut.origin = {x0, y0};
    cut.pixels = RgbImage(x1 - x0 + 1, y1 - y0 + 1);
    cut.alpha = BinaryMask(x1 - x0 + 1, y1 - y0 + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (labels.at(x, y) != label)
                continue;
            cut.alpha.set(x - x0, y - y0);
            for (int c = 0; c < 3; ++c)
                cut.pixels.at(x - x0, y - y0, c) = sample.image.at(x, y, c);
        }
    cut.complete = is_complete(contour, sample.image.size(), border_tolerance);
    return cut;
}

} // namespace

Cutout extract_cutout(const ImageSample& sample, const Contour& contour, const RotatedRect& rect,
                      double border_tolerance) {
    if (sample.image.size() != sample.mask.size())
        throw ValidationError("sample '" + sample.id + "': image and mask dimensions differ");
    if (contour.points.empty())
        throw ValidationError("cannot cut along an empty contour");
    const auto comps = label_components(sample.mask);
    const Point seed = contour.points.front();
    if (!comps.labels.contains(seed.x, seed.y) || comps.labels.at(seed.x, seed.y) == 0)
        throw ValidationError("contour does not start on a foreground pixel of sample '" + sample.id + "'");
    return extract_component(sample, comps.labels, comps.labels.at(seed.x, seed.y), contour, rect,
                             border_tolerance);
}

CutResult cut_largest(const ImageSample& sample, double border_tolerance) {
    if (sample.image.size() != sample.mask.size())
        throw ValidationError("sample '" + sample.id + "': image and mask dimensions differ");
    if (!sample.mask.any())
        throw ValidationError("sample '" + sample.id + "' has an empty mask");
    const auto comps = label_components(sample.mask);
    const auto largest = std::max_element(comps.sizes.begin(), comps.sizes.end()) - comps.sizes.begin();
    const int label = static_cast<int>(largest) + 1;
    const auto starts = first_pixels(comps.labels, comps.sizes.size());

    CutResult result;
    result.component_count = comps.sizes.size();
    result.contour = trace_component(comps.labels, label, starts[largest]);
    const RotatedRect rect = min_area_rect(result.contour);
    result.cutout = extract_component(sample, comps.labels, label, result.contour, rect, border_tolerance);
    return result;
}

} // namespace gcp
