#include "sliceprop/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "sliceprop/errors.hpp"
#include "sliceprop/rng.hpp"

namespace sliceprop {

void PhantomParams::validate() const {
    if (size < 48) throw InvalidInput("phantom: size must be at least 48");
    if (n_slices < 2) throw InvalidInput("phantom: need at least 2 slices");
    if (r0 - shrink * (n_slices - 1) < 4.0)
        throw InvalidInput("phantom: LV radius would shrink below 4 px");
    if (drift < 0.0 || drift > 3.0)
        throw InvalidInput("phantom: drift must stay within [0, 3]");
    if (r0 + drift * (n_slices - 1) + 2.0 > size / 2.0)
        throw InvalidInput("phantom: LV could drift outside the image");
    if (bg_blob_count < 0) throw InvalidInput("phantom: negative blob count");
    if (noise_sd < 0.0 || lv_intensity_sd < 0.0)
        throw InvalidInput("phantom: negative noise level");
}

namespace {

struct Blob {
    double cx, cy, radius, intensity;
    int onset_slice;  // first slice (1-based) where the blob appears
};

}  // namespace

PhantomStack generate_phantom(const PhantomParams& params) {
    params.validate();
    Rng rng(params.seed);
    const int size = params.size;
    const double mid = (size - 1) / 2.0;
    const double max_drift = params.drift * (params.n_slices - 1);

    // Distractor blobs live in a ring the LV can never reach. Odd blobs
    // only appear after slice 1, so the forests never saw bright pixels
    // at those positions during training.
    std::vector<Blob> blobs;
    for (int b = 0; b < params.bg_blob_count; ++b) {
        Blob blob{};
        blob.radius = rng.uniform(4.0, 9.0);
        const double keep_out = params.r0 + max_drift + blob.radius + 4.0;
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            blob.cx = rng.uniform(blob.radius + 2.0, size - 3.0 - blob.radius);
            blob.cy = rng.uniform(blob.radius + 2.0, size - 3.0 - blob.radius);
            placed = std::hypot(blob.cx - mid, blob.cy - mid) >= keep_out;
        }
        blob.intensity = rng.uniform(params.blob_intensity_lo, params.blob_intensity_hi);
        blob.onset_slice = (b % 2 == 0) ? 1 : 2 + static_cast<int>(rng.uniform_index(2));
        if (placed) blobs.push_back(blob);  // small images may fit fewer blobs
    }

    PhantomStack out;
    double cx = mid, cy = mid;
    for (int k = 1; k <= params.n_slices; ++k) {
        const double r = params.r0 - params.shrink * (k - 1);
        if (k > 1) {
            // random step of Euclidean length <= drift
            const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double step = rng.uniform(0.0, params.drift);
            cx += step * std::cos(angle);
            cy += step * std::sin(angle);
            cx = std::clamp(cx, r + 2.0, size - 3.0 - r);
            cy = std::clamp(cy, r + 2.0, size - 3.0 - r);
        }

        ImageSlice slice;
        slice.width = size;
        slice.height = size;
        slice.bit_depth = 8;
        slice.intensities.resize(static_cast<std::size_t>(size) * size);
        BinaryMask mask = BinaryMask::zeros(size, size);

        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                double value = params.bg_intensity;
                for (const Blob& blob : blobs) {
                    if (blob.onset_slice > k) continue;
                    const double dx = x - blob.cx, dy = y - blob.cy;
                    if (dx * dx + dy * dy <= blob.radius * blob.radius)
                        value = blob.intensity;
                }
                const double dx = x - cx, dy = y - cy;
                const double dist2 = dx * dx + dy * dy;
                if (dist2 <= r * r) {
                    // partial-volume falloff: the outer ~3 px dim toward
                    // the background, so raw inference misses boundary
                    // patches the way real rim pixels are missed
                    const double edge = std::clamp(
                        (std::sqrt(dist2) - (r - 3.5)) / 3.5, 0.0, 1.0);
                    const double mean =
                        params.lv_intensity_mean -
                        0.55 * edge * (params.lv_intensity_mean - params.bg_intensity);
                    value = rng.normal(mean, params.lv_intensity_sd);
                    mask.set(x, y, 1);
                }
                value += rng.normal(0.0, params.noise_sd);
                slice.intensities[static_cast<std::size_t>(y) * size + x] =
                    static_cast<std::uint16_t>(std::clamp(value, 0.0, 255.0) + 0.5);
            }
        }
        out.stack.slices.push_back(std::move(slice));
        out.ground_truth.push_back(std::move(mask));
    }
    return out;
}

}  // namespace sliceprop
