#include "cxrtask/token_codec.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cxrtask {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string render_padded(const char* prefix, int index, int digits) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s%0*d>", prefix, digits, index);
    return buf;
}

}  // namespace

std::string LocToken::render() const { return render_padded("<loc", index, 4); }

std::string SegToken::render() const { return render_padded("<seg", index, 3); }

Codebook::Codebook() {
    packed_.resize(kSegVocabulary, Packed{0, 0, 0, 0});
    auto set_bit = [](Packed& p, int row, int col) {
        const int pos = row * kPatchSize + col;
        p[pos >> 6] |= std::uint64_t{1} << (pos & 63);
    };
    // entry 0 stays all-zero
    for (int row = 0; row < kPatchSize; ++row) {
        for (int col = 0; col < kPatchSize; ++col) set_bit(packed_[1], row, col);
    }
    // half-planes: bit set iff the pixel center projects onto the normal
    // direction at >= the signed offset from the patch center
    const double center = kPatchSize / 2.0;
    int index = 2;
    for (int a = 0; a < 14; ++a) {
        const double theta = 2.0 * kPi * a / 14.0;
        const double nx = std::cos(theta);
        const double ny = std::sin(theta);
        for (int k = 0; k < 9; ++k) {
            const double offset = (k - 4) * 1.5;
            for (int row = 0; row < kPatchSize; ++row) {
                for (int col = 0; col < kPatchSize; ++col) {
                    const double proj = nx * (col + 0.5 - center) + ny * (row + 0.5 - center);
                    if (proj >= offset) set_bit(packed_[index], row, col);
                }
            }
            ++index;
        }
    }
}

const Codebook& Codebook::instance() {
    static const Codebook codebook;
    return codebook;
}

std::uint8_t Codebook::bit(int index, int row, int col) const {
    const int pos = row * kPatchSize + col;
    return (packed_[index][pos >> 6] >> (pos & 63)) & 1;
}

int Codebook::nearest(const Packed& patch) const {
    int best_index = 0;
    int best_distance = kPatchSize * kPatchSize + 1;
    for (int i = 0; i < size(); ++i) {
        int d = 0;
        for (int w = 0; w < 4; ++w) d += std::popcount(patch[w] ^ packed_[i][w]);
        if (d < best_distance) {
            best_distance = d;
            best_index = i;
        }
    }
    return best_index;
}

std::string BoxTokens::render() const {
    std::string out;
    for (const LocToken& t : tokens) out += t.render();
    return out;
}

std::string MaskTokens::render() const {
    std::string out = box.render();
    for (const SegToken& t : seg) out += t.render();
    return out;
}

namespace {

int encode_coord(double coord, int dim) {
    const int index = static_cast<int>(std::floor(coord / dim * kLocBins));
    return std::min(std::max(index, 0), kLocBins - 1);
}

double decode_coord(int index, int dim) { return (index + 0.5) / kLocBins * dim; }

}  // namespace

BoxTokens encode_box(const BBox& box, const ImageInfo& image) {
    if (!(box.y_min < box.y_max) || !(box.x_min < box.x_max)) {
        throw std::invalid_argument("encode_box: box has non-positive area");
    }
    if (box.y_min < 0 || box.x_min < 0 || box.y_max > image.height || box.x_max > image.width) {
        throw std::invalid_argument("encode_box: box outside image bounds");
    }
    return BoxTokens{{LocToken{encode_coord(box.y_min, image.height)},
                      LocToken{encode_coord(box.x_min, image.width)},
                      LocToken{encode_coord(box.y_max, image.height)},
                      LocToken{encode_coord(box.x_max, image.width)}}};
}

BBox decode_box(const BoxTokens& tokens, const ImageInfo& image) {
    const BBox box{decode_coord(tokens.tokens[0].index, image.height),
                   decode_coord(tokens.tokens[1].index, image.width),
                   decode_coord(tokens.tokens[2].index, image.height),
                   decode_coord(tokens.tokens[3].index, image.width)};
    if (!(box.y_min < box.y_max) || !(box.x_min < box.x_max)) {
        throw std::invalid_argument("decode_box: degenerate box");
    }
    return box;
}

PixelRect box_pixel_rect(const BBox& box, int width, int height) {
    PixelRect rect;
    rect.row0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
    rect.col0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
    rect.row1 = std::min(height, static_cast<int>(std::floor(box.y_max)));
    rect.col1 = std::min(width, static_cast<int>(std::floor(box.x_max)));
    return rect;
}

namespace {

// nearest-neighbor source index for destination cell i
inline int nn_source(int i, int src_dim, int dst_dim) {
    const int s = static_cast<int>((i + 0.5) * src_dim / dst_dim);
    return std::min(s, src_dim - 1);
}

}  // namespace

MaskTokens encode_mask(const BinaryMask& mask, const BBox& box, const ImageInfo& image) {
    if (mask.width != image.width || mask.height != image.height) {
        throw std::invalid_argument("encode_mask: mask dimensions do not match image");
    }
    const PixelRect rect = box_pixel_rect(box, image.width, image.height);
    if (rect.empty()) {
        throw std::invalid_argument("encode_mask: box pixel rectangle is empty");
    }
    bool crop_has_bits = false;
    for (int r = rect.row0; r < rect.row1 && !crop_has_bits; ++r) {
        for (int c = rect.col0; c < rect.col1; ++c) {
            if (mask.at(r, c)) {
                crop_has_bits = true;
                break;
            }
        }
    }
    if (!crop_has_bits) {
        throw std::invalid_argument("encode_mask: mask is empty within the box");
    }

    std::array<std::uint8_t, kMaskGridSize * kMaskGridSize> grid{};
    for (int i = 0; i < kMaskGridSize; ++i) {
        const int src_row = rect.row0 + nn_source(i, rect.rows(), kMaskGridSize);
        for (int j = 0; j < kMaskGridSize; ++j) {
            const int src_col = rect.col0 + nn_source(j, rect.cols(), kMaskGridSize);
            grid[i * kMaskGridSize + j] = mask.at(src_row, src_col);
        }
    }

    const Codebook& codebook = Codebook::instance();
    MaskTokens out;
    out.box = encode_box(box, image);
    const int patches_per_side = kMaskGridSize / kPatchSize;
    for (int p = 0; p < kSegTokensPerMask; ++p) {
        const int pr = p / patches_per_side;
        const int pc = p % patches_per_side;
        Codebook::Packed patch{0, 0, 0, 0};
        for (int u = 0; u < kPatchSize; ++u) {
            for (int v = 0; v < kPatchSize; ++v) {
                if (grid[(pr * kPatchSize + u) * kMaskGridSize + (pc * kPatchSize + v)]) {
                    const int pos = u * kPatchSize + v;
                    patch[pos >> 6] |= std::uint64_t{1} << (pos & 63);
                }
            }
        }
        out.seg[p].index = codebook.nearest(patch);
    }
    return out;
}

BinaryMask decode_mask(const MaskTokens& tokens, const ImageInfo& image) {
    for (const SegToken& t : tokens.seg) {
        if (t.index < 0 || t.index >= kSegVocabulary) {
            throw std::invalid_argument("decode_mask: segmentation token out of range");
        }
    }
    const BBox box = decode_box(tokens.box, image);
    BinaryMask canvas(image.width, image.height);
    const PixelRect rect = box_pixel_rect(box, image.width, image.height);
    if (rect.empty()) return canvas;

    const Codebook& codebook = Codebook::instance();
    const int patches_per_side = kMaskGridSize / kPatchSize;
    for (int r = 0; r < rect.rows(); ++r) {
        const int gi = nn_source(r, kMaskGridSize, rect.rows());
        for (int c = 0; c < rect.cols(); ++c) {
            const int gj = nn_source(c, kMaskGridSize, rect.cols());
            const int p = (gi / kPatchSize) * patches_per_side + (gj / kPatchSize);
            if (codebook.bit(tokens.seg[p].index, gi % kPatchSize, gj % kPatchSize)) {
                canvas.set(rect.row0 + r, rect.col0 + c);
            }
        }
    }
    return canvas;
}

namespace {

std::string render_instance(const DetectionInstance& d) { return d.box.render() + ' ' + d.label; }
std::string render_instance(const SegmentationInstance& s) {
    return s.tokens.render() + ' ' + s.label;
}

template <typename Instance>
std::string render_joined(const std::vector<Instance>& instances) {
    if (instances.empty()) {
        throw std::invalid_argument("render_suffix: empty instance list");
    }
    std::string out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (i > 0) out += " ; ";
        out += render_instance(instances[i]);
    }
    return out;
}

}  // namespace

std::string render_suffix(const std::vector<DetectionInstance>& instances) {
    return render_joined(instances);
}

std::string render_suffix(const std::vector<SegmentationInstance>& instances) {
    return render_joined(instances);
}

}  // namespace cxrtask
