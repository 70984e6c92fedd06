#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace capforge {

enum class AnnotationProfile { kGeneric, kMsrVtt };

std::string_view to_string(AnnotationProfile profile);
AnnotationProfile parse_annotation_profile(std::string_view name);

/// Conventional MSR-VTT partition and annotation density.
inline constexpr std::size_t kMsrVttTrainSize = 6513;
inline constexpr std::size_t kMsrVttValSize = 497;
inline constexpr std::size_t kMsrVttTestSize = 2990;
inline constexpr std::size_t kMsrVttCaptionsPerVideo = 20;

struct CaptionDataset {
  std::string name;
  /// split name -> video ids in file order
  std::map<std::string, std::vector<std::string>> splits;
  /// video id -> reference captions in file order
  std::map<std::string, std::vector<std::string>> references;

  friend bool operator==(const CaptionDataset&, const CaptionDataset&) = default;
};

struct DatasetIssue {
  enum class Severity { kError, kWarning };
  Severity severity = Severity::kError;
  std::string subject;  // video id, record index or field
  std::string message;
};

/// A parsed annotation file with everything wrong with it. The dataset is
/// only guaranteed to satisfy the CaptionDataset invariants when there are
/// no error-level issues.
struct AnnotationLoad {
  CaptionDataset dataset;
  std::vector<DatasetIssue> issues;

  bool ok() const;
  std::size_t error_count() const;
};

/// Canonical schema:
///   {"name": str?, "videos": [{"id", "split"}], "sentences": [{"video_id", "caption"}]}
/// The msrvtt profile reads the public MSR-VTT layout instead (videos carry
/// "video_id", split "validate" becomes "val") and adds split-size and
/// captions-per-video warnings. The generic profile also accepts a
/// VATEX-style array of {"videoID", "enCap": [...]} records, keeping only
/// the English captions. Throws InputError only when the text is not JSON
/// or the top-level shape is wrong.
AnnotationLoad parse_annotations(std::string_view text, AnnotationProfile profile, bool strict = false);
AnnotationLoad read_annotations(const std::filesystem::path& path, AnnotationProfile profile, bool strict = false);

/// read_annotations that throws InputError naming every error-level issue.
/// Warnings are appended to `warnings` when given.
CaptionDataset load_annotations(const std::filesystem::path& path, AnnotationProfile profile, bool strict = false,
                                std::vector<DatasetIssue>* warnings = nullptr);

/// Canonical-schema JSON; parse_annotations(..., kGeneric) restores an equal dataset.
std::string annotations_to_json(const CaptionDataset& dataset);

struct DatasetSummary {
  std::map<std::string, std::size_t> split_sizes;
  std::map<std::size_t, std::size_t> captions_per_video;  // caption count -> number of videos
  std::size_t duplicate_captions = 0;  // same normalized text repeated within one video
  bool splits_disjoint = true;
  std::size_t videos = 0;
  std::size_t captions = 0;
};

DatasetSummary summarize(const CaptionDataset& dataset);

struct PredictionEntry {
  std::string caption;
  std::vector<std::string> samples;  // optional SCST samples
  std::vector<double> logprobs;      // parallel to samples when present
  std::size_t line = 0;
};

struct PredictionSet {
  std::map<std::string, PredictionEntry> entries;
};

/// Newline-delimited JSON, one {"video_id", "caption"} record per line with
/// optional "samples" and "logprobs". Blank lines are ignored. Errors carry
/// the 1-based line number.
PredictionSet parse_predictions(std::istream& in, bool strict = false, std::string_view source = "<predictions>");
PredictionSet load_predictions(const std::filesystem::path& path, bool strict = false);

struct AlignedSet {
  std::map<std::string, std::string> candidates;
  std::map<std::string, std::vector<std::string>> references;
  std::vector<std::string> missing_ids;  // in split, no prediction
  std::vector<std::string> extra_ids;    // predicted, not in split
};

/// Pairs predictions with the references of `split`. "all" selects every
/// video when the dataset has no split of that name. Throws AlignmentError
/// for an unknown split or when nothing overlaps.
AlignedSet align(const PredictionSet& predictions, const CaptionDataset& dataset, std::string_view split);

}  // namespace capforge
