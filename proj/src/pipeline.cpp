#include "sliceprop/pipeline.hpp"

#include <algorithm>

#include "sliceprop/errors.hpp"
#include "sliceprop/io.hpp"
#include "sliceprop/postprocess.hpp"
#include "sliceprop/rng.hpp"

namespace sliceprop {

std::string to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::kBasic: return "basic";
        case PipelineMode::kPostprocess: return "post";
        case PipelineMode::kFull: return "full";
    }
    return "?";
}

std::uint64_t mf_stream_seed(std::uint64_t pipeline_seed) {
    return mix64(pipeline_seed, 0x6d66ULL);  // "mf"
}

std::uint64_t rf_stream_seed(std::uint64_t pipeline_seed, int training_slice) {
    return mix64(mix64(pipeline_seed, 0x7266ULL),  // "rf"
                 static_cast<std::uint64_t>(training_slice));
}

SegmentationResult segment_stack(const CineStack& stack, const BinaryMask& first_lv,
                                 const PipelineConfig& config) {
    stack.validate();
    first_lv.validate();
    if (first_lv.width != stack.width() || first_lv.height != stack.height())
        throw InvalidInput("segment_stack: first mask does not match stack geometry");
    if (first_lv.none_set())
        throw InvalidInput("segment_stack: first mask is empty");

    const int n = stack.count();
    const int max_intensity = std::max<int>(1, stack.max_intensity());
    const bool with_post = config.mode != PipelineMode::kBasic;

    MFParams mf_params = config.mf_params;
    mf_params.seed = mf_stream_seed(config.seed);
    RFParams rf_params = config.rf_params;
    rf_params.seed = rf_stream_seed(config.seed, 1);

    const FeatureMatrix first_labeled = attach_labels(
        extract_features(stack.slices[0], max_intensity), first_lv);

    SegmentationResult result;
    auto mf = std::make_shared<MondrianForestModel>(mf_fit(first_labeled, mf_params));
    RandomForestModel rf = rf_fit(first_labeled, rf_params);
    int rf_training_slice = 1;
    result.mf_digest_before_loop = model_digest(*mf);

    result.masks.reserve(n);
    result.masks.push_back(first_lv);
    for (int k = 0; k + 1 < n; ++k) {
        const int slice_number = k + 2;  // 1-based index of the inferred slice
        const FeatureMatrix feats =
            extract_features(stack.slices[k + 1], max_intensity);

        BinaryMask mask_mf = decide_mask(mf_predict_proba(*mf, feats),
                                         stack.width(), stack.height());
        BinaryMask mask_rf = decide_mask(rf_predict_proba(rf, feats),
                                         stack.width(), stack.height());
        if (with_post) {
            PostProcessResult pp_mf = post_process(mask_mf, result.masks[k]);
            if (pp_mf.fell_back)
                result.warnings.emplace_back(
                    slice_number, "MF mask had no overlap; kept previous LV");
            PostProcessResult pp_rf = post_process(mask_rf, result.masks[k]);
            if (pp_rf.fell_back)
                result.warnings.emplace_back(
                    slice_number, "RF mask had no overlap; kept previous LV");
            mask_mf = std::move(pp_mf.mask);
            mask_rf = std::move(pp_rf.mask);
        } else {
            if (mask_mf.none_set())
                result.warnings.emplace_back(slice_number, "MF inferred no LV pixels");
            if (mask_rf.none_set())
                result.warnings.emplace_back(slice_number, "RF inferred no LV pixels");
        }

        result.masks.push_back(mask_union(mask_mf, mask_rf));
        result.rf_inference_training_slice.push_back(rf_training_slice);
        result.per_slice_masks_mf.push_back(std::move(mask_mf));
        result.per_slice_masks_rf.push_back(std::move(mask_rf));

        if (config.mode == PipelineMode::kFull) {
            // Self-training step: the next RF learns this slice from the
            // MF-derived labels; the MF itself is left as is.
            rf_params.seed = rf_stream_seed(config.seed, slice_number);
            rf = rf_fit(attach_labels(feats, result.per_slice_masks_mf.back()),
                        rf_params);
            rf_training_slice = slice_number;
        }
    }

    result.mf_digest_after_loop = model_digest(*mf);
    result.final_rf_training_slice = rf_training_slice;
    result.mf_model = std::move(mf);
    result.rf_model = std::make_shared<const RandomForestModel>(std::move(rf));
    return result;
}

ExperimentResults run_experiments(const CineStack& stack, const BinaryMask& first_lv,
                                  const PipelineConfig& base_config) {
    ExperimentResults out;
    PipelineConfig config = base_config;
    config.mode = PipelineMode::kBasic;
    out.basic = segment_stack(stack, first_lv, config);
    config.mode = PipelineMode::kPostprocess;
    out.postprocess = segment_stack(stack, first_lv, config);
    config.mode = PipelineMode::kFull;
    out.full = segment_stack(stack, first_lv, config);
    return out;
}

}  // namespace sliceprop
