#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sliceprop/errors.hpp"
#include "sliceprop/eval.hpp"
#include "sliceprop/io.hpp"
#include "sliceprop/phantom.hpp"
#include "sliceprop/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sliceprop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitStrictWarning = 4;

std::string slice_mask_name(int slice_number) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "lv_%04d.pgm", slice_number);
    return buf;
}

PipelineMode parse_mode(const std::string& mode) {
    if (mode == "basic") return PipelineMode::kBasic;
    if (mode == "post") return PipelineMode::kPostprocess;
    return PipelineMode::kFull;
}

struct CommonOptions {
    std::string stack_dir;
    std::string first_mask;
    std::string gt_dir;
    std::string report_path;
    int trees = 50;
    int min_leaf = 2;
    std::uint64_t seed = 0;
    bool strict = false;
};

PipelineConfig make_config(const CommonOptions& opt, PipelineMode mode) {
    PipelineConfig config;
    config.mode = mode;
    config.seed = opt.seed;
    config.rf_params.n_trees = opt.trees;
    config.rf_params.min_samples_leaf = opt.min_leaf;
    config.mf_params.n_trees = opt.trees;
    config.mf_params.min_samples_leaf = opt.min_leaf;
    return config;
}

/// Ground-truth masks for slices 2..N, matched to the stack by filename
/// order; requires at least N mask files.
std::vector<BinaryMask> gt_for_inferred_slices(const fs::path& gt_dir, int n_slices,
                                               int width, int height) {
    const auto entries = load_mask_dir(gt_dir);
    if (static_cast<int>(entries.size()) < n_slices)
        throw ValidationError("ground-truth directory " + gt_dir.string() +
                              " holds " + std::to_string(entries.size()) +
                              " masks, stack has " + std::to_string(n_slices) +
                              " slices");
    std::vector<BinaryMask> gt;
    for (int k = 1; k < n_slices; ++k) {
        const BinaryMask& m = entries[k].second;
        if (m.width != width || m.height != height)
            throw ValidationError("ground-truth mask " + entries[k].first +
                                  " does not match the stack geometry");
        gt.push_back(m);
    }
    return gt;
}

SegmentationReport report_for(const SegmentationResult& result,
                              const std::vector<BinaryMask>& gt,
                              const CommonOptions& opt, PipelineMode mode,
                              double elapsed_seconds) {
    std::vector<int> indices;
    for (std::size_t k = 0; k < gt.size(); ++k)
        indices.push_back(static_cast<int>(k) + 2);
    std::vector<BinaryMask> combined(result.masks.begin() + 1, result.masks.end());
    ReportConfig rcfg;
    rcfg.mode = to_string(mode);
    rcfg.trees = opt.trees;
    rcfg.min_leaf = opt.min_leaf;
    rcfg.seed = opt.seed;
    SegmentationReport rep =
        make_report(indices, combined, result.per_slice_masks_mf,
                    result.per_slice_masks_rf, gt, rcfg);
    for (const auto& [slice, message] : result.warnings)
        rep.warnings.push_back("slice " + std::to_string(slice) + ": " + message);
    rep.elapsed_seconds = elapsed_seconds;
    return rep;
}

void print_summary(const SegmentationReport& rep) {
    std::printf("mode=%s trees=%d min_leaf=%d seed=%llu\n", rep.config.mode.c_str(),
                rep.config.trees, rep.config.min_leaf,
                static_cast<unsigned long long>(rep.config.seed));
    for (const SliceDice& row : rep.per_slice)
        std::printf("  slice %2d  dice_mf=%s dice_rf=%s dice_combined=%.4f\n",
                    row.slice,
                    row.dice_mf ? std::to_string(*row.dice_mf).substr(0, 6).c_str()
                                : "-",
                    row.dice_rf ? std::to_string(*row.dice_rf).substr(0, 6).c_str()
                                : "-",
                    row.dice_combined);
    std::printf("  mean combined dice (slices 2..N): %.4f\n",
                rep.overall_mean.combined);
    std::printf("  pooled combined dice: %.4f\n", rep.overall_pooled.combined);
    for (const std::string& w : rep.warnings)
        std::printf("  warning: %s\n", w.c_str());
}

int run_segment(const CommonOptions& opt, const std::string& mode_name,
                const std::string& out_dir) {
    const PipelineMode mode = parse_mode(mode_name);
    const CineStack stack = load_stack(opt.stack_dir);
    const BinaryMask first = load_mask(opt.first_mask);

    const auto t0 = std::chrono::steady_clock::now();
    const SegmentationResult result =
        segment_stack(stack, first, make_config(opt, mode));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out_dir);
    for (int k = 1; k < stack.count(); ++k)
        save_mask(result.masks[k], fs::path(out_dir) / slice_mask_name(k + 1));

    if (!opt.gt_dir.empty()) {
        const auto gt = gt_for_inferred_slices(opt.gt_dir, stack.count(),
                                               stack.width(), stack.height());
        const SegmentationReport rep = report_for(result, gt, opt, mode, elapsed);
        if (!opt.report_path.empty()) write_report(rep, opt.report_path);
        print_summary(rep);
    } else {
        std::printf("segmented %d slices in %.2fs (mode %s)\n", stack.count() - 1,
                    elapsed, mode_name.c_str());
        for (const auto& [slice, message] : result.warnings)
            std::printf("  warning: slice %d: %s\n", slice, message.c_str());
    }
    if (opt.strict && !result.warnings.empty()) return kExitStrictWarning;
    return kExitOk;
}

int run_experiments_cmd(const CommonOptions& opt) {
    const CineStack stack = load_stack(opt.stack_dir);
    const BinaryMask first = load_mask(opt.first_mask);
    const auto gt = gt_for_inferred_slices(opt.gt_dir, stack.count(), stack.width(),
                                           stack.height());

    bool warned = false;
    std::vector<SegmentationReport> reports;
    for (PipelineMode mode :
         {PipelineMode::kBasic, PipelineMode::kPostprocess, PipelineMode::kFull}) {
        const auto t0 = std::chrono::steady_clock::now();
        const SegmentationResult result =
            segment_stack(stack, first, make_config(opt, mode));
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        warned = warned || !result.warnings.empty();
        reports.push_back(report_for(result, gt, opt, mode, elapsed));
        print_summary(reports.back());
    }

    if (!opt.report_path.empty()) {
        const fs::path base(opt.report_path);
        for (const SegmentationReport& rep : reports) {
            fs::path p = base;
            p.replace_filename(base.stem().string() + "_" + rep.config.mode +
                               base.extension().string());
            write_report(rep, p);
        }
        // Table-style comparison of the three modes.
        const auto rows = aggregate(reports);
        std::string table = "experiment,mf,rf,combined\n";
        for (const CohortRow& row : rows) {
            table += row.mode + ",";
            table += (row.mf ? row.mf->format() : std::string("-")) + ",";
            table += (row.rf ? row.rf->format() : std::string("-")) + ",";
            table += row.combined.format() + "\n";
        }
        fs::path table_path = base;
        table_path.replace_filename(base.stem().string() + "_table.csv");
        std::ofstream out(table_path);
        out << table;
        std::fputs(table.c_str(), stdout);
    }
    if (opt.strict && warned) return kExitStrictWarning;
    return kExitOk;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& report_path) {
    const auto pred = load_mask_dir(pred_dir);
    if (pred.empty())
        throw ValidationError("no .pgm masks found in " + pred_dir);
    const auto gt_entries = load_mask_dir(gt_dir);

    std::vector<int> indices;
    std::vector<BinaryMask> pred_masks, gt_masks;
    for (const auto& [name, mask] : pred) {
        const auto it =
            std::find_if(gt_entries.begin(), gt_entries.end(),
                         [&name = name](const auto& e) { return e.first == name; });
        if (it == gt_entries.end())
            throw ValidationError("no ground-truth mask named " + name + " in " +
                                  gt_dir);
        // slice number from the digits in the filename, else ordinal
        int slice = static_cast<int>(indices.size()) + 1;
        std::string digits;
        for (char c : name)
            if (c >= '0' && c <= '9') digits.push_back(c);
        if (!digits.empty() && digits.size() <= 8) slice = std::stoi(digits);
        indices.push_back(slice);
        pred_masks.push_back(mask);
        gt_masks.push_back(it->second);
    }

    ReportConfig rcfg;
    rcfg.mode = "eval";
    const SegmentationReport rep = make_report(indices, pred_masks, {}, {},
                                               gt_masks, rcfg);
    write_report(rep, report_path);
    for (const SliceDice& row : rep.per_slice)
        std::printf("  %s slice %d dice=%.4f\n", "eval", row.slice,
                    row.dice_combined);
    std::printf("  mean dice: %.4f  pooled dice: %.4f\n", rep.overall_mean.combined,
                rep.overall_pooled.combined);
    return kExitOk;
}

int run_phantom(const std::string& out_dir, std::uint64_t seed, int n_slices,
                int size) {
    PhantomParams params;
    params.seed = seed;
    params.n_slices = n_slices;
    params.size = size;
    const PhantomStack ph = generate_phantom(params);

    const fs::path slices_dir = fs::path(out_dir) / "slices";
    const fs::path gt_dir = fs::path(out_dir) / "gt";
    fs::create_directories(slices_dir);
    fs::create_directories(gt_dir);
    for (int k = 0; k < n_slices; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "slice_%04d.pgm", k + 1);
        save_pgm(ph.stack.slices[k], slices_dir / name);
        save_mask(ph.ground_truth[k], gt_dir / slice_mask_name(k + 1));
    }
    std::printf("phantom written to %s (%d slices, %dx%d, seed %llu)\n",
                out_dir.c_str(), n_slices, size, size,
                static_cast<unsigned long long>(seed));
    std::printf("first mask: %s\n", (gt_dir / slice_mask_name(1)).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"left-ventricle segmentation propagation from a single "
                 "labeled slice (Mondrian + Random Forest hybrid)"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string mode_name = "full";
    std::string out_dir, pred_dir;
    int phantom_slices = 10, phantom_size = 128;

    CLI::App* segment = app.add_subcommand("segment", "segment a stack from its "
                                                      "first-slice mask");
    segment->add_option("--stack", opt.stack_dir, "directory of slice PGM files")
        ->required();
    segment->add_option("--first-mask", opt.first_mask, "mask PGM for slice 1")
        ->required();
    segment->add_option("--mode", mode_name, "basic|post|full")
        ->check(CLI::IsMember({"basic", "post", "full"}))
        ->capture_default_str();
    segment->add_option("--out", out_dir, "output directory for predicted masks")
        ->required();
    segment->add_option("--gt", opt.gt_dir, "ground-truth mask directory");
    segment->add_option("--trees", opt.trees, "trees per forest")
        ->capture_default_str();
    segment->add_option("--min-leaf", opt.min_leaf, "minimum samples per leaf")
        ->capture_default_str();
    segment->add_option("--seed", opt.seed, "RNG seed")
        ->envname("SLICEPROP_SEED")
        ->capture_default_str();
    segment->add_option("--report", opt.report_path, "JSON report path (needs --gt)")
        ->needs(segment->get_option("--gt"));
    segment->add_flag("--strict", opt.strict, "exit 4 on pipeline warnings");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Dice of predicted vs "
                                                    "ground-truth masks");
    eval_cmd->add_option("--pred", pred_dir, "predicted mask directory")->required();
    eval_cmd->add_option("--gt", opt.gt_dir, "ground-truth mask directory")
        ->required();
    eval_cmd->add_option("--report", opt.report_path, "JSON report path")
        ->required();

    CLI::App* phantom = app.add_subcommand("phantom", "write a synthetic stack "
                                                      "with ground truth");
    phantom->add_option("--out", out_dir, "output directory")->required();
    phantom->add_option("--seed", opt.seed, "RNG seed")
        ->envname("SLICEPROP_SEED")
        ->capture_default_str();
    phantom->add_option("--slices", phantom_slices, "slice count")
        ->capture_default_str();
    phantom->add_option("--size", phantom_size, "pixels per side")
        ->capture_default_str();

    CLI::App* experiments = app.add_subcommand(
        "experiments", "run basic, post and full modes on one stack");
    experiments->add_option("--stack", opt.stack_dir, "directory of slice PGMs")
        ->required();
    experiments->add_option("--first-mask", opt.first_mask, "mask PGM for slice 1")
        ->required();
    experiments->add_option("--gt", opt.gt_dir, "ground-truth mask directory")
        ->required();
    experiments->add_option("--report", opt.report_path, "JSON report base path")
        ->required();
    experiments->add_option("--trees", opt.trees, "trees per forest")
        ->capture_default_str();
    experiments->add_option("--min-leaf", opt.min_leaf, "minimum samples per leaf")
        ->capture_default_str();
    experiments->add_option("--seed", opt.seed, "RNG seed")
        ->envname("SLICEPROP_SEED")
        ->capture_default_str();
    experiments->add_flag("--strict", opt.strict, "exit 4 on pipeline warnings");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (segment->parsed()) return run_segment(opt, mode_name, out_dir);
        if (eval_cmd->parsed())
            return run_eval(pred_dir, opt.gt_dir, opt.report_path);
        if (phantom->parsed())
            return run_phantom(out_dir, opt.seed, phantom_slices, phantom_size);
        if (experiments->parsed()) return run_experiments_cmd(opt);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}
