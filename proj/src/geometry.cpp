#include "relhoi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "geometry";

void check_image(ImageSize img) {
    if (!(img.width > 0) || !(img.height > 0) || !std::isfinite(img.width) || !std::isfinite(img.height)) {
        fail(ErrorKind::Config, kModule, "image size must be positive");
    }
}

void check_spatial_box(const Box& b) {
    validate_box(b, kModule);
    if (b.x1 < 0 || b.y1 < 0) {
        fail(ErrorKind::Validation, kModule, "spatial encoding needs nonnegative box coordinates");
    }
}

double signed_log(double x) { return x == 0.0 ? 0.0 : std::copysign(std::log1p(std::fabs(x)), x); }

Tensor run_positional_mlp(const Tensor& encodings, const Mlp& mlp) {
    const std::size_t width = encodings.cols();
    if (mlp.first.in_features() != width) {
        fail(ErrorKind::Shape, kModule,
             "positional mlp expects " + std::to_string(mlp.first.in_features()) + " inputs, encoding has " +
                 std::to_string(width));
    }
    return ops::mlp(encodings, mlp);
}

}  // namespace

void validate_box(const Box& box, const char* module) {
    if (!std::isfinite(box.x1) || !std::isfinite(box.y1) || !std::isfinite(box.x2) || !std::isfinite(box.y2)) {
        fail(ErrorKind::Validation, module, "box has non-finite coordinates");
    }
    if (box.x2 < box.x1 || box.y2 < box.y1) {
        fail(ErrorKind::Validation, module, "box must satisfy x2 >= x1 and y2 >= y1");
    }
}

double iou(const Box& a, const Box& b) {
    const double iw = std::max(0.0, double{std::min(a.x2, b.x2)} - std::max(a.x1, b.x1));
    const double ih = std::max(0.0, double{std::min(a.y2, b.y2)} - std::max(a.y1, b.y1));
    const double inter = iw * ih;
    const double area_a = double{a.width()} * a.height();
    const double area_b = double{b.width()} * b.height();
    const double uni = area_a + area_b - inter;
    if (uni <= 0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

SpatialFeatures pairwise_spatial(const Box& bi, const Box& bj, ImageSize img, float eps) {
    check_image(img);
    check_spatial_box(bi);
    check_spatial_box(bj);

    const double W = img.width, H = img.height;
    const double e = eps;
    const double wi = bi.width(), hi = bi.height(), wj = bj.width(), hj = bj.height();
    const double cxi = (double{bi.x1} + bi.x2) / 2, cyi = (double{bi.y1} + bi.y2) / 2;
    const double cxj = (double{bj.x1} + bj.x2) / 2, cyj = (double{bj.y1} + bj.y2) / 2;
    const double ai = wi * hi, aj = wj * hj;
    const double aspect_i = wi / (hi + e), aspect_j = wj / (hj + e);

    std::array<double, kSpatialBaseWidth> base{};
    base[kCxI] = cxi / W;
    base[kCyI] = cyi / H;
    base[kWI] = wi / W;
    base[kHI] = hi / H;
    base[kAreaI] = ai / (W * H);
    base[kAspectI] = aspect_i;
    base[kCxJ] = cxj / W;
    base[kCyJ] = cyj / H;
    base[kWJ] = wj / W;
    base[kHJ] = hj / H;
    base[kAreaJ] = aj / (W * H);
    base[kAspectJ] = aspect_j;
    base[kIou] = iou(bi, bj);
    base[kAreaRatio] = ai / (aj + e);
    base[kDx] = (cxj - cxi) / (wi + e);
    base[kDy] = (cyj - cyi) / (hi + e);
    base[kCenterDistance] = std::hypot(cxj - cxi, cyj - cyi) / std::hypot(W, H);
    base[kAspectRatioRatio] = aspect_i / (aspect_j + e);

    SpatialFeatures out{};
    for (std::size_t s = 0; s < kSpatialBaseWidth; ++s) {
        out[s] = static_cast<float>(base[s]);
        const bool is_signed = s == kDx || s == kDy;
        out[kSpatialBaseWidth + s] = static_cast<float>(is_signed ? signed_log(base[s]) : std::log(base[s] + e));
    }
    return out;
}

Tensor pair_spatial_matrix(std::span<const PairIndex> pairs, std::span<const Box> boxes, ImageSize img) {
    std::vector<float> raw;
    raw.reserve(pairs.size() * kSpatialWidth);
    for (const auto& [i, j] : pairs) {
        if (i >= boxes.size() || j >= boxes.size()) fail(ErrorKind::Index, kModule, "pair index out of range");
        const auto f = pairwise_spatial(boxes[i], boxes[j], img);
        raw.insert(raw.end(), f.begin(), f.end());
    }
    return Tensor({pairs.size(), kSpatialWidth}, std::move(raw));
}

Tensor triplet_spatial_matrix(std::span<const TripletIndex> triplets, std::span<const Box> boxes, ImageSize img) {
    std::vector<float> raw;
    raw.reserve(triplets.size() * kTripletSpatialWidth);
    for (const auto& t : triplets) {
        if (t.human >= boxes.size() || t.object >= boxes.size() || t.tool >= boxes.size()) {
            fail(ErrorKind::Index, kModule, "triplet index out of range");
        }
        for (const auto& f : {pairwise_spatial(boxes[t.human], boxes[t.object], img),
                              pairwise_spatial(boxes[t.human], boxes[t.tool], img),
                              pairwise_spatial(boxes[t.object], boxes[t.tool], img)}) {
            raw.insert(raw.end(), f.begin(), f.end());
        }
    }
    return Tensor({triplets.size(), kTripletSpatialWidth}, std::move(raw));
}

Tensor binary_positions(std::span<const PairIndex> pairs, std::span<const Box> boxes, ImageSize img,
                        const Mlp& positional_mlp) {
    return run_positional_mlp(pair_spatial_matrix(pairs, boxes, img), positional_mlp);
}

Tensor ternary_positions(std::span<const TripletIndex> triplets, std::span<const Box> boxes, ImageSize img,
                         const Mlp& positional_mlp) {
    return run_positional_mlp(triplet_spatial_matrix(triplets, boxes, img), positional_mlp);
}

}  // namespace relhoi
