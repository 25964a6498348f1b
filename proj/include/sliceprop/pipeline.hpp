#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sliceprop/core.hpp"
#include "sliceprop/mforest.hpp"
#include "sliceprop/rforest.hpp"

namespace sliceprop {

enum class PipelineMode { kBasic, kPostprocess, kFull };

std::string to_string(PipelineMode mode);

/// Runtime knobs for one segmentation run. The seed fields inside
/// rf_params/mf_params are ignored: each forest draws from a stream
/// derived from `seed` so the two stay independent and every retrain
/// gets its own stream.
struct PipelineConfig {
    RFParams rf_params;
    MFParams mf_params;
    PipelineMode mode = PipelineMode::kFull;
    std::uint64_t seed = 0;
};

std::uint64_t mf_stream_seed(std::uint64_t pipeline_seed);
std::uint64_t rf_stream_seed(std::uint64_t pipeline_seed, int training_slice);

struct SegmentationResult {
    std::vector<BinaryMask> masks;               // N entries; [0] = input mask
    std::vector<BinaryMask> per_slice_masks_mf;  // N-1 entries, slices 2..N
    std::vector<BinaryMask> per_slice_masks_rf;
    std::vector<std::pair<int, std::string>> warnings;  // (1-based slice, message)

    // Provenance kept for the algorithm-fidelity assertions.
    std::uint64_t mf_digest_before_loop = 0;
    std::uint64_t mf_digest_after_loop = 0;
    std::vector<int> rf_inference_training_slice;  // per inferred slice 2..N
    int final_rf_training_slice = 1;
    std::shared_ptr<const MondrianForestModel> mf_model;
    std::shared_ptr<const RandomForestModel> rf_model;  // RF after the loop
};

/// Runs the propagation loop: fit both forests on slice 1, then for each
/// following slice infer with both, post-process against the previous
/// combined mask (modes post/full), take the union, and (mode full only)
/// retrain the RF on the slice's post-processed MF mask. The MF is never
/// refit. Deterministic given config.seed.
SegmentationResult segment_stack(const CineStack& stack, const BinaryMask& first_lv,
                                 const PipelineConfig& config);

struct ExperimentResults {
    SegmentationResult basic;
    SegmentationResult postprocess;
    SegmentationResult full;
};

/// The three experiment modes with identical seeds.
ExperimentResults run_experiments(const CineStack& stack, const BinaryMask& first_lv,
                                  const PipelineConfig& base_config);

}  // namespace sliceprop
