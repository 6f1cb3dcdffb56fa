#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

namespace cxrtask {

/// Axis-aligned box in image pixel coordinates, origin top-left.
/// Row-major ordering (y before x); max edges are exclusive.
struct BBox {
    double y_min = 0.0;
    double x_min = 0.0;
    double y_max = 0.0;
    double x_max = 0.0;

    double height() const { return y_max - y_min; }
    double width() const { return x_max - x_min; }
    double area() const { return height() * width(); }
    double centroid_y() const { return 0.5 * (y_min + y_max); }
    double centroid_x() const { return 0.5 * (x_min + x_max); }

    bool operator==(const BBox&) const = default;
};

/// Row-major bit grid. bits.size() == width * height, one byte per pixel.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int row, int col) const {
        return bits[static_cast<std::size_t>(row) * width + col];
    }
    void set(int row, int col, std::uint8_t v = 1) {
        bits[static_cast<std::size_t>(row) * width + col] = v;
    }
    std::size_t count() const;
    bool empty() const { return count() == 0; }

    bool operator==(const BinaryMask&) const = default;
};

/// Closed polygon; vertices are (x, y) pairs in pixel coordinates.
using Polygon = std::vector<std::array<double, 2>>;

/// COCO-style uncompressed RLE: column-major runs, starting with a zero run.
struct RleCounts {
    std::vector<std::uint64_t> counts;
    bool operator==(const RleCounts&) const = default;
};

/// One polygon list is rasterized as the union of its members.
using Geometry = std::variant<std::vector<Polygon>, RleCounts, BinaryMask>;

/// Rasterizes geometry onto a width x height grid.
/// Polygons are filled by the even-odd rule sampled at pixel centers;
/// RLE decodes column-major. Throws std::invalid_argument on degenerate
/// polygons (< 3 vertices), out-of-bounds vertices, or RLE runs that do
/// not sum to width * height.
BinaryMask rasterize(const Geometry& geometry, int width, int height);

/// Tightest box covering all set bits; max edges exclusive.
/// Throws std::invalid_argument on an empty mask.
BBox mask_to_bbox(const BinaryMask& mask);

/// Intersection over union of two boxes.
double iou(const BBox& a, const BBox& b);

/// Intersection over union of two masks of identical dimensions.
/// Throws std::invalid_argument on dimension mismatch.
double iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace cxrtask
