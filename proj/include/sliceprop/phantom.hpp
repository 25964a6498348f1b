#pragma once

#include <cstdint>
#include <vector>

#include "sliceprop/core.hpp"

namespace sliceprop {

/// Synthetic cine-stack generator: a bright, roughly circular region
/// that drifts and shrinks across slices over a textured background
/// with distractor blobs, plus exact ground-truth masks.
struct PhantomParams {
    int size = 128;      // pixels per side
    int n_slices = 10;
    double r0 = 22.0;    // initial radius (px)
    double shrink = 1.2; // radius decrement per slice (px)
    double drift = 2.0;  // max center step per slice (px)
    double lv_intensity_mean = 190.0;
    double lv_intensity_sd = 30.0;  // strong texture: raw inference gets holes
    int bg_blob_count = 8;
    double blob_intensity_lo = 182.0;  // overlaps the LV range on purpose
    double blob_intensity_hi = 198.0;
    double bg_intensity = 80.0;
    double noise_sd = 8.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PhantomStack {
    CineStack stack;
    std::vector<BinaryMask> ground_truth;  // one exact disk mask per slice
};

PhantomStack generate_phantom(const PhantomParams& params);

}  // namespace sliceprop
