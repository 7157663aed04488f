#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "relhoi/tensor.hpp"

namespace relhoi {

// Axis-aligned box in absolute pixel coordinates.
struct Box {
    float x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    float width() const noexcept { return x2 - x1; }
    float height() const noexcept { return y2 - y1; }
    bool operator==(const Box&) const = default;
};

struct ImageSize {
    float width = 0;
    float height = 0;
};

// Throws a validation error unless the box is finite with x2 >= x1, y2 >= y1.
void validate_box(const Box& box, const char* module);

double iou(const Box& a, const Box& b);

inline constexpr std::size_t kSpatialBaseWidth = 18;
inline constexpr std::size_t kSpatialWidth = 2 * kSpatialBaseWidth;
inline constexpr std::size_t kTripletSpatialWidth = 3 * kSpatialWidth;
inline constexpr float kSpatialEps = 1e-3f;

// Slots of the 18 base features. The log half repeats the same order.
enum SpatialSlot : std::size_t {
    kCxI, kCyI, kWI, kHI, kAreaI, kAspectI,
    kCxJ, kCyJ, kWJ, kHJ, kAreaJ, kAspectJ,
    kIou, kAreaRatio, kDx, kDy, kCenterDistance, kAspectRatioRatio,
};

// Layout version of the spatial encoding; stored alongside the weights.
inline constexpr int kSpatialLayoutVersion = 1;

using SpatialFeatures = std::array<float, kSpatialWidth>;

// 36-d pairwise encoding of (b_i, b_j): 18 base features followed by their
// log transforms. Boxes must have nonnegative coordinates so every
// normalized center/size entry is a valid log argument.
SpatialFeatures pairwise_spatial(const Box& bi, const Box& bj, ImageSize img, float eps = kSpatialEps);

using PairIndex = std::pair<std::size_t, std::size_t>;

struct TripletIndex {
    std::size_t human = 0;
    std::size_t object = 0;
    std::size_t tool = 0;
    bool operator==(const TripletIndex&) const = default;
};

// Raw encodings before the positional MLP, one row per pair / triplet.
Tensor pair_spatial_matrix(std::span<const PairIndex> pairs, std::span<const Box> boxes, ImageSize img);
Tensor triplet_spatial_matrix(std::span<const TripletIndex> triplets, std::span<const Box> boxes, ImageSize img);

// X = mlp(pairwise_spatial) per pair; result is [m x D].
Tensor binary_positions(std::span<const PairIndex> pairs, std::span<const Box> boxes, ImageSize img,
                        const Mlp& positional_mlp);

// W = mlp(sp(h,o) | sp(h,t) | sp(o,t)) per triplet; result is [r x D].
Tensor ternary_positions(std::span<const TripletIndex> triplets, std::span<const Box> boxes, ImageSize img,
                         const Mlp& positional_mlp);

}  // namespace relhoi
