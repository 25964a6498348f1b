#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace sliceprop {

/// One 2D grayscale slice. Raw integer gray values, row-major.
struct ImageSlice {
    int width = 0;
    int height = 0;
    int bit_depth = 8;  // 8 or 16
    std::vector<std::uint16_t> intensities;

    std::uint16_t at(int x, int y) const {
        return intensities[static_cast<std::size_t>(y) * width + x];
    }
    std::uint16_t max_intensity_value() const {
        return bit_depth == 8 ? 255 : 65535;
    }
    /// Checks the size and range invariants; throws InvalidInput.
    void validate() const;
};

/// An ordered stack of slices sharing one geometry.
struct CineStack {
    std::vector<ImageSlice> slices;

    int count() const { return static_cast<int>(slices.size()); }
    int width() const { return slices.empty() ? 0 : slices.front().width; }
    int height() const { return slices.empty() ? 0 : slices.front().height; }
    /// Largest raw intensity anywhere in the stack (at least 1).
    std::uint16_t max_intensity() const;
    /// N >= 2, uniform width/height/bit_depth; throws InvalidInput.
    void validate() const;
};

/// Per-pixel foreground/background labeling of one slice.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // row-major, each 0 or 1

    static BinaryMask zeros(int width, int height);

    std::uint8_t at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
    void set(int x, int y, std::uint8_t v) {
        bits[static_cast<std::size_t>(y) * width + x] = v;
    }
    std::size_t popcount() const;
    bool none_set() const { return popcount() == 0; }
    bool same_shape(const BinaryMask& other) const {
        return width == other.width && height == other.height;
    }
    bool operator==(const BinaryMask&) const = default;
    void validate() const;
};

/// One training/inference row: three features in [0,1], optional label.
struct PixelSample {
    std::array<double, 3> features{};  // x_norm, y_norm, intensity_norm
    std::optional<std::uint8_t> label;

    double x_norm() const { return features[0]; }
    double y_norm() const { return features[1]; }
    double intensity_norm() const { return features[2]; }
};

/// Row-major feature rows for one slice; dimension fixed at 3.
struct FeatureMatrix {
    static constexpr int kDim = 3;
    std::vector<PixelSample> rows;

    std::size_t size() const { return rows.size(); }
    bool fully_labeled() const;
};

/// Builds (x_norm, y_norm, intensity_norm) rows for every pixel, row-major.
/// Coordinates are scaled by (dim - 1) and intensities by the stack-wide
/// maximum so all three features share the [0,1] range.
FeatureMatrix extract_features(const ImageSlice& slice, int stack_max_intensity);

/// Returns a copy of `features` with each row's label set from `mask`.
FeatureMatrix attach_labels(const FeatureMatrix& features, const BinaryMask& mask);

/// Thresholds P(LV) at 0.5; ties classify as LV.
BinaryMask decide_mask(const std::vector<double>& prob_lv, int width, int height);

/// Bitwise OR of two same-shaped masks.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

/// Bitwise AND; used by evaluation and tests.
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);

}  // namespace sliceprop
