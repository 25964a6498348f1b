#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sliceprop/core.hpp"
#include "sliceprop/eval.hpp"
#include "sliceprop/mforest.hpp"
#include "sliceprop/rforest.hpp"

namespace sliceprop {

// ---- PGM (binary "P5"; maxval > 255 means 16-bit big-endian) ----

ImageSlice load_pgm(const std::filesystem::path& path);
void save_pgm(const ImageSlice& slice, const std::filesystem::path& path);

/// Masks are P5 files with maxval 255 holding only {0, 255}.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// All *.pgm files in the directory, lexicographic filename order =
/// slice order. Validates uniform geometry across the stack.
CineStack load_stack(const std::filesystem::path& dir);

/// All *.pgm mask files in a directory with their filenames, sorted.
std::vector<std::pair<std::string, BinaryMask>> load_mask_dir(
    const std::filesystem::path& dir);

// ---- Model serialization (versioned text, exact round-trip) ----

void serialize_model(const RandomForestModel& model, std::ostream& out);
void serialize_model(const MondrianForestModel& model, std::ostream& out);
RandomForestModel deserialize_rf_model(std::istream& in);
MondrianForestModel deserialize_mf_model(std::istream& in);

void save_model(const RandomForestModel& model, const std::filesystem::path& path);
void save_model(const MondrianForestModel& model, const std::filesystem::path& path);
RandomForestModel load_rf_model(const std::filesystem::path& path);
MondrianForestModel load_mf_model(const std::filesystem::path& path);

/// FNV-1a over the serialized form; used for the unchanged-model assertions.
std::uint64_t model_digest(const RandomForestModel& model);
std::uint64_t model_digest(const MondrianForestModel& model);

// ---- Run reports (JSON document + per-slice CSV companion) ----

/// Writes the JSON report to `json_path` and the per-slice CSV next to it
/// (same stem, .csv extension).
void write_report(const SegmentationReport& report,
                  const std::filesystem::path& json_path);
SegmentationReport read_report(const std::filesystem::path& json_path);

/// Serialization of one report as a JSON string (schema "1").
std::string report_to_json(const SegmentationReport& report);
SegmentationReport report_from_json(const std::string& text);

}  // namespace sliceprop
