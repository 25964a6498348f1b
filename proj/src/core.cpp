#include "sliceprop/core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sliceprop/errors.hpp"

namespace sliceprop {

void ImageSlice::validate() const {
    if (width <= 0 || height <= 0)
        throw InvalidInput("slice has zero area");
    if (bit_depth != 8 && bit_depth != 16)
        throw InvalidInput("bit depth must be 8 or 16");
    if (intensities.size() != static_cast<std::size_t>(width) * height)
        throw InvalidInput("intensity count does not match width*height");
    const std::uint16_t cap = max_intensity_value();
    for (std::uint16_t v : intensities)
        if (v > cap) throw InvalidInput("intensity exceeds bit depth");
}

std::uint16_t CineStack::max_intensity() const {
    std::uint16_t m = 1;
    for (const ImageSlice& s : slices)
        for (std::uint16_t v : s.intensities) m = std::max(m, v);
    return m;
}

void CineStack::validate() const {
    if (count() < 2) throw InvalidInput("stack needs at least 2 slices");
    const ImageSlice& first = slices.front();
    for (const ImageSlice& s : slices) {
        s.validate();
        if (s.width != first.width || s.height != first.height ||
            s.bit_depth != first.bit_depth)
            throw InvalidInput("stack slices disagree on geometry");
    }
}

BinaryMask BinaryMask::zeros(int width, int height) {
    BinaryMask m;
    m.width = width;
    m.height = height;
    m.bits.assign(static_cast<std::size_t>(width) * height, 0);
    return m;
}

std::size_t BinaryMask::popcount() const {
    return static_cast<std::size_t>(
        std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void BinaryMask::validate() const {
    if (width <= 0 || height <= 0) throw InvalidInput("mask has zero area");
    if (bits.size() != static_cast<std::size_t>(width) * height)
        throw InvalidInput("bit count does not match width*height");
    for (std::uint8_t b : bits)
        if (b > 1) throw InvalidInput("mask values must be 0 or 1");
}

bool FeatureMatrix::fully_labeled() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const PixelSample& r) { return r.label.has_value(); });
}

FeatureMatrix extract_features(const ImageSlice& slice, int stack_max_intensity) {
    if (slice.width <= 0 || slice.height <= 0)
        throw InvalidInput("cannot extract features from a zero-area slice");
    if (slice.width == 1 || slice.height == 1)
        throw InvalidInput("slice dimensions must be at least 2 to normalize coordinates");
    if (stack_max_intensity < 1)
        throw InvalidInput("stack max intensity must be >= 1");
    const std::uint16_t actual_max =
        slice.intensities.empty()
            ? 0
            : *std::max_element(slice.intensities.begin(), slice.intensities.end());
    if (actual_max > stack_max_intensity)
        throw InvalidInput("stack max intensity is below a slice intensity");

    FeatureMatrix out;
    out.rows.reserve(static_cast<std::size_t>(slice.width) * slice.height);
    const double last_col = slice.width - 1;
    const double last_row = slice.height - 1;
    const double max_int = stack_max_intensity;
    for (int r = 0; r < slice.height; ++r)
        for (int c = 0; c < slice.width; ++c)
            out.rows.push_back(PixelSample{
                {c / last_col, r / last_row, slice.at(c, r) / max_int},
                std::nullopt});
    return out;
}

FeatureMatrix attach_labels(const FeatureMatrix& features, const BinaryMask& mask) {
    mask.validate();
    if (features.size() != mask.bits.size())
        throw InvalidInput("feature row count does not match mask size");
    FeatureMatrix out = features;
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        out.rows[i].label = mask.bits[i];
    return out;
}

BinaryMask decide_mask(const std::vector<double>& prob_lv, int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidInput("mask has zero area");
    if (prob_lv.size() != static_cast<std::size_t>(width) * height)
        throw InvalidInput("probability count does not match width*height");
    BinaryMask out = BinaryMask::zeros(width, height);
    for (std::size_t i = 0; i < prob_lv.size(); ++i) {
        const double p = prob_lv[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw InvalidInput("probability outside [0,1] at row " + std::to_string(i));
        out.bits[i] = p >= 0.5 ? 1 : 0;
    }
    return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw InvalidInput("mask_union: dimension mismatch");
    BinaryMask out = a;
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = a.bits[i] | b.bits[i];
    return out;
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw InvalidInput("mask_intersection: dimension mismatch");
    BinaryMask out = a;
    for (std::size_t i = 0; i < out.bits.size(); ++i)
        out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

}  // namespace sliceprop
