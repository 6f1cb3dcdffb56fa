#include "cxrtask/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cxrtask {

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

void fill_polygon(const Polygon& poly, BinaryMask& out) {
    if (poly.size() < 3) {
        throw std::invalid_argument("rasterize: polygon has fewer than 3 vertices");
    }
    for (const auto& v : poly) {
        if (v[0] < 0.0 || v[0] > out.width || v[1] < 0.0 || v[1] > out.height) {
            throw std::invalid_argument("rasterize: polygon vertex outside image bounds");
        }
    }
    // Scanline even-odd fill, equivalent to a per-pixel-center ray test:
    // a center is inside iff the number of edge crossings strictly to its
    // right is odd. Crossings use the half-open rule (y1 > py) != (y2 > py).
    std::vector<double> xs;
    for (int row = 0; row < out.height; ++row) {
        const double py = row + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const auto& a = poly[i];
            const auto& b = poly[(i + 1) % poly.size()];
            if ((a[1] > py) != (b[1] > py)) {
                xs.push_back(a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            // centers px with xs[k] <= px < xs[k+1]
            int c0 = static_cast<int>(std::ceil(xs[k] - 0.5));
            int c1 = static_cast<int>(std::ceil(xs[k + 1] - 0.5));
            c0 = std::max(c0, 0);
            c1 = std::min(c1, out.width);
            for (int c = c0; c < c1; ++c) {
                out.set(row, c);
            }
        }
    }
}

BinaryMask decode_rle(const RleCounts& rle, int width, int height) {
    const std::uint64_t total =
        std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
    if (total != static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height)) {
        throw std::invalid_argument("rasterize: RLE run sum does not equal width * height");
    }
    BinaryMask out(width, height);
    // COCO convention: runs alternate 0/1 starting with zeros, column-major.
    std::uint64_t pos = 0;
    std::uint8_t value = 0;
    for (std::uint64_t run : rle.counts) {
        if (value) {
            for (std::uint64_t i = pos; i < pos + run; ++i) {
                const int col = static_cast<int>(i / height);
                const int row = static_cast<int>(i % height);
                out.set(row, col);
            }
        }
        pos += run;
        value ^= 1;
    }
    return out;
}

}  // namespace

BinaryMask rasterize(const Geometry& geometry, int width, int height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("rasterize: non-positive raster dimensions");
    }
    if (const auto* polys = std::get_if<std::vector<Polygon>>(&geometry)) {
        if (polys->empty()) {
            throw std::invalid_argument("rasterize: empty polygon list");
        }
        BinaryMask out(width, height);
        for (const Polygon& p : *polys) {
            fill_polygon(p, out);
        }
        return out;
    }
    if (const auto* rle = std::get_if<RleCounts>(&geometry)) {
        return decode_rle(*rle, width, height);
    }
    const auto& mask = std::get<BinaryMask>(geometry);
    if (mask.width != width || mask.height != height) {
        throw std::invalid_argument("rasterize: mask dimensions do not match image");
    }
    return mask;
}

BBox mask_to_bbox(const BinaryMask& mask) {
    int rmin = mask.height, rmax = -1, cmin = mask.width, cmax = -1;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (mask.at(r, c)) {
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                cmin = std::min(cmin, c);
                cmax = std::max(cmax, c);
            }
        }
    }
    if (rmax < 0) {
        throw std::invalid_argument("mask_to_bbox: empty mask");
    }
    return BBox{static_cast<double>(rmin), static_cast<double>(cmin),
                static_cast<double>(rmax + 1), static_cast<double>(cmax + 1)};
}

double iou(const BBox& a, const BBox& b) {
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double inter = iy * ix;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("iou: mask dimension mismatch");
    }
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        uni += a.bits[i] | b.bits[i];
    }
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace cxrtask
