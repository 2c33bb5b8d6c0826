#pragma once

#include <string>
#include <vector>

#include "gcp/corpus.hpp"
#include "gcp/raster.hpp"

namespace gcp {

struct Contour {
    std::vector<Point> points; // x = column, y = row
    bool closed = true;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct RotatedRect {
    Vec2 center;
    double width = 0.0;  // extent along `angle`
    double height = 0.0; // extent along angle + pi/2
    double angle = 0.0;  // radians, [-pi/2, pi/2)

    [[nodiscard]] double area() const { return width * height; }
    [[nodiscard]] std::vector<Vec2> corners() const;
};

struct Cutout {
    std::string id;
    std::string source_id;
    std::string label;
    RgbImage pixels;    // crop of the object map
    BinaryMask alpha;   // component silhouette inside the crop
    RotatedRect rect;
    Point origin;       // top-left of the crop in the source frame
    bool complete = true;
    bool clamped = false;
};

/// O = I * M: image where the mask is set, zero elsewhere.
RgbImage object_map(const RgbImage& image, const BinaryMask& mask);

/// Per-pixel 8-connected component labels (0 = background, 1.. in raster
/// order of each component's first pixel).
struct ComponentLabels {
    Raster<int, 1> labels;
    std::vector<std::size_t> sizes; // sizes[k - 1] for label k
};

ComponentLabels label_components(const BinaryMask& mask);

/// Outer border of every 8-connected component, traced clockwise (x right,
/// y down) from the component's first pixel in raster order. Components are
/// listed in raster order of that pixel. Holes are ignored.
std::vector<Contour> trace_contours(const BinaryMask& mask);

/// Minimum-area enclosing rectangle of the contour points (pixel centres),
/// via rotating calipers over the convex hull.
RotatedRect min_area_rect(const Contour& contour);
RotatedRect min_area_rect(const std::vector<Point>& points);

std::vector<Point> convex_hull(std::vector<Point> points);

inline constexpr double kDefaultBorderTolerance = 0.02;

bool is_complete(const Contour& contour, Size image_size, double border_tolerance = kDefaultBorderTolerance);

/// Crops the axis-aligned envelope of `rect` out of the object map and keeps
/// only the component that `contour` bounds.
Cutout extract_cutout(const ImageSample& sample, const Contour& contour, const RotatedRect& rect,
                      double border_tolerance = kDefaultBorderTolerance);

struct CutResult {
    Cutout cutout;
    Contour contour;
    std::size_t component_count = 0;
};

/// Largest component of the sample's mask, cut out. Ties go to the earlier
/// component in raster order.
CutResult cut_largest(const ImageSample& sample, double border_tolerance = kDefaultBorderTolerance);

} // namespace gcp
