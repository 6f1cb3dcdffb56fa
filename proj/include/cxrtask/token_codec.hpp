#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cxrtask/geometry.hpp"
#include "cxrtask/manifest.hpp"

namespace cxrtask {

/// One normalized box coordinate, 1000 bins. Renders as "<locNNNN>".
struct LocToken {
    int index = 0;  // [0, 999]
    std::string render() const;
    bool operator==(const LocToken&) const = default;
};

/// One codebook patch index, 128 entries. Renders as "<segNNN>".
struct SegToken {
    int index = 0;  // [0, 127]
    std::string render() const;
    bool operator==(const SegToken&) const = default;
};

inline constexpr int kLocBins = 1000;
inline constexpr int kSegVocabulary = 128;
inline constexpr int kSegTokensPerMask = 16;
inline constexpr int kMaskGridSize = 64;  // intermediate mask resolution
inline constexpr int kPatchSize = 16;     // codebook patch edge

/// Fixed set of 128 binary 16x16 patch patterns used to quantize mask
/// patches. Entry 0 is all-zero, entry 1 all-one, entries 2..127 are
/// half-planes over 14 angles x 9 signed offsets. Construction is
/// deterministic and all entries are pairwise distinct.
class Codebook {
public:
    /// 256 bits per entry, packed into four 64-bit words.
    using Packed = std::array<std::uint64_t, 4>;

    Codebook();

    static const Codebook& instance();

    int size() const { return static_cast<int>(packed_.size()); }
    const Packed& entry(int index) const { return packed_[index]; }
    std::uint8_t bit(int index, int row, int col) const;

    /// Nearest entry by Hamming distance; ties resolve to the lowest index.
    int nearest(const Packed& patch) const;

private:
    std::vector<Packed> packed_;
};

struct BoxTokens {
    std::array<LocToken, 4> tokens;  // order: y_min, x_min, y_max, x_max
    std::string render() const;
    bool operator==(const BoxTokens&) const = default;
};

struct MaskTokens {
    BoxTokens box;
    std::array<SegToken, kSegTokensPerMask> seg;
    std::string render() const;
    bool operator==(const MaskTokens&) const = default;
};

/// Token-level instances as they appear in suffix strings.
struct DetectionInstance {
    BoxTokens box;
    std::string label;
    bool operator==(const DetectionInstance&) const = default;
};

struct SegmentationInstance {
    MaskTokens tokens;
    std::string label;
    bool operator==(const SegmentationInstance&) const = default;
};

/// index = floor(coord / dim * 1000), clamped to [0, 999]; y uses H, x uses W.
/// Throws std::invalid_argument when the box is invalid or outside the image.
BoxTokens encode_box(const BBox& box, const ImageInfo& image);

/// coordinate = (index + 0.5) / 1000 * dim (bin centers).
/// Throws std::invalid_argument ("degenerate box") when the decoded area is
/// not positive.
BBox decode_box(const BoxTokens& tokens, const ImageInfo& image);

/// Crop the full-canvas mask to the box, nearest-neighbor resample to 64x64,
/// quantize the 4x4 grid of 16x16 patches against the codebook, and emit
/// 4 location + 16 segmentation tokens. Throws std::invalid_argument when the
/// crop holds no set bits.
MaskTokens encode_mask(const BinaryMask& mask, const BBox& box, const ImageInfo& image);

/// Inverse of encode_mask: assemble the 64x64 codeword grid, resample into
/// the decoded box rectangle, and paste onto an all-zero H x W canvas. A
/// degenerate box throws; a box whose pixel rectangle is empty yields an
/// all-zero canvas (callers treat that as an empty prediction).
BinaryMask decode_mask(const MaskTokens& tokens, const ImageInfo& image);

/// Pixel rectangle of a box: rows [floor(y_min), floor(y_max)), columns
/// [floor(x_min), floor(x_max)), clamped to the canvas. Shared by
/// encode_mask (crop) and decode_mask (paste) so round trips line up.
struct PixelRect {
    int row0 = 0, col0 = 0, row1 = 0, col1 = 0;
    int rows() const { return row1 - row0; }
    int cols() const { return col1 - col0; }
    bool empty() const { return rows() <= 0 || cols() <= 0; }
};
PixelRect box_pixel_rect(const BBox& box, int width, int height);

/// Canonical suffix text: instances joined by " ; ", each "tokens label".
/// Throws std::invalid_argument on an empty instance list.
std::string render_suffix(const std::vector<DetectionInstance>& instances);
std::string render_suffix(const std::vector<SegmentationInstance>& instances);

}  // namespace cxrtask
