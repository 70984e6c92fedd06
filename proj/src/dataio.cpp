#include "capforge/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "capforge/errors.hpp"
#include "capforge/text_norm.hpp"

namespace capforge {

using nlohmann::json;

namespace {

constexpr std::string_view kBom = "\xEF\xBB\xBF";

std::string_view strip_bom(std::string_view s) {
  if (s.starts_with(kBom)) s.remove_prefix(kBom.size());
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Ids may be written as strings or integers.
bool read_id(const json& value, std::string& out) {
  if (value.is_string()) {
    out = value.get<std::string>();
    return !out.empty();
  }
  if (value.is_number_integer()) {
    out = std::to_string(value.get<long long>());
    return true;
  }
  return false;
}

void error(AnnotationLoad& load, std::string subject, std::string message) {
  load.issues.push_back({DatasetIssue::Severity::kError, std::move(subject), std::move(message)});
}

void warning(AnnotationLoad& load, std::string subject, std::string message) {
  load.issues.push_back({DatasetIssue::Severity::kWarning, std::move(subject), std::move(message)});
}

void check_top_level(const json& doc, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InputError("annotations: unknown top-level field '" + key + "'");
}

void parse_vatex(const json& doc, AnnotationLoad& load) {
  std::size_t index = 0;
  for (const auto& rec : doc) {
    const std::string subject = "record #" + std::to_string(index++);
    std::string id;
    if (!rec.is_object() || !rec.contains("videoID") || !read_id(rec["videoID"], id)) {
      error(load, subject, "missing videoID");
      continue;
    }
    if (load.dataset.references.contains(id)) {
      error(load, id, "duplicate video id");
      continue;
    }
    std::string split = "all";
    if (rec.contains("split") && rec["split"].is_string()) split = rec["split"].get<std::string>();
    auto& refs = load.dataset.references[id];
    load.dataset.splits[split].push_back(id);
    if (rec.contains("enCap") && rec["enCap"].is_array())
      for (const auto& c : rec["enCap"])
        if (c.is_string()) refs.push_back(c.get<std::string>());
  }
}

void parse_canonical(const json& doc, AnnotationProfile profile, AnnotationLoad& load) {
  if (doc.contains("name") && doc["name"].is_string()) load.dataset.name = doc["name"].get<std::string>();
  if (!doc.contains("videos") || !doc["videos"].is_array()) throw InputError("annotations: missing 'videos' array");
  if (!doc.contains("sentences") || !doc["sentences"].is_array()) throw InputError("annotations: missing 'sentences' array");

  const char* id_key = profile == AnnotationProfile::kMsrVtt ? "video_id" : "id";
  std::size_t index = 0;
  for (const auto& v : doc["videos"]) {
    const std::string subject = "videos[" + std::to_string(index++) + "]";
    std::string id;
    const bool has_id = v.is_object() && ((v.contains(id_key) && read_id(v[id_key], id)) || (v.contains("id") && read_id(v["id"], id)));
    if (!has_id) {
      error(load, subject, std::string("missing video id field '") + id_key + "'");
      continue;
    }
    if (!v.contains("split") || !v["split"].is_string()) {
      error(load, id, "missing split");
      continue;
    }
    std::string split = v["split"].get<std::string>();
    if (profile == AnnotationProfile::kMsrVtt && split == "validate") split = "val";
    if (load.dataset.references.contains(id)) {
      error(load, id, "duplicate video id");
      continue;
    }
    load.dataset.references[id];
    load.dataset.splits[split].push_back(id);
  }

  index = 0;
  for (const auto& s : doc["sentences"]) {
    const std::string subject = "sentences[" + std::to_string(index++) + "]";
    std::string id;
    if (!s.is_object() || !s.contains("video_id") || !read_id(s["video_id"], id)) {
      error(load, subject, "missing video_id");
      continue;
    }
    if (!s.contains("caption") || !s["caption"].is_string()) {
      error(load, subject, "missing caption for video '" + id + "'");
      continue;
    }
    const auto it = load.dataset.references.find(id);
    if (it == load.dataset.references.end()) {
      error(load, subject, "caption for unknown video '" + id + "'");
      continue;
    }
    it->second.push_back(s["caption"].get<std::string>());
  }
}

void check_msrvtt_shape(AnnotationLoad& load) {
  const std::pair<const char*, std::size_t> expected[] = {
      {"train", kMsrVttTrainSize}, {"val", kMsrVttValSize}, {"test", kMsrVttTestSize}};
  for (const auto& [split, size] : expected) {
    const auto it = load.dataset.splits.find(split);
    const std::size_t actual = it == load.dataset.splits.end() ? 0 : it->second.size();
    if (actual != size)
      warning(load, split, "split has " + std::to_string(actual) + " videos, MSR-VTT convention is " + std::to_string(size));
  }
  std::size_t off = 0;
  std::string first;
  for (const auto& [id, refs] : load.dataset.references) {
    if (refs.size() == kMsrVttCaptionsPerVideo || refs.empty()) continue;
    if (off++ == 0) first = id;
  }
  if (off > 0)
    warning(load, first, std::to_string(off) + " videos do not have " + std::to_string(kMsrVttCaptionsPerVideo) + " captions (first: '" +
                             first + "')");
}

}  // namespace

std::string_view to_string(AnnotationProfile profile) { return profile == AnnotationProfile::kMsrVtt ? "msrvtt" : "generic"; }

AnnotationProfile parse_annotation_profile(std::string_view name) {
  if (name == "msrvtt" || name == "msr-vtt") return AnnotationProfile::kMsrVtt;
  if (name == "generic" || name == "msvd" || name == "vatex") return AnnotationProfile::kGeneric;
  throw std::invalid_argument("unknown annotation profile '" + std::string(name) + "'");
}

bool AnnotationLoad::ok() const { return error_count() == 0; }

std::size_t AnnotationLoad::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [](const DatasetIssue& i) { return i.severity == DatasetIssue::Severity::kError; }));
}

AnnotationLoad parse_annotations(std::string_view text, AnnotationProfile profile, bool strict) {
  json doc;
  try {
    doc = json::parse(strip_bom(text));
  } catch (const json::parse_error& e) {
    throw InputError(std::string("annotations: ") + e.what());
  }
  AnnotationLoad load;
  if (doc.is_array() && profile == AnnotationProfile::kGeneric) {
    parse_vatex(doc, load);
  } else if (doc.is_object()) {
    if (strict) {
      if (profile == AnnotationProfile::kMsrVtt)
        check_top_level(doc, {"name", "info", "videos", "sentences"});
      else
        check_top_level(doc, {"name", "videos", "sentences"});
    }
    parse_canonical(doc, profile, load);
  } else {
    throw InputError("annotations: unexpected top-level JSON type");
  }

  for (const auto& [id, refs] : load.dataset.references) {
    if (refs.empty()) {
      error(load, id, "video has no reference captions");
      continue;
    }
    for (const auto& r : refs)
      if (tokenize(r).empty()) warning(load, id, "caption normalizes to nothing: '" + r + "'");
  }
  if (load.dataset.references.empty()) error(load, "videos", "dataset has no videos");
  if (profile == AnnotationProfile::kMsrVtt) check_msrvtt_shape(load);
  return load;
}

AnnotationLoad read_annotations(const std::filesystem::path& path, AnnotationProfile profile, bool strict) {
  AnnotationLoad load = parse_annotations(read_file(path), profile, strict);
  if (load.dataset.name.empty()) load.dataset.name = path.stem().string();
  return load;
}

CaptionDataset load_annotations(const std::filesystem::path& path, AnnotationProfile profile, bool strict,
                                std::vector<DatasetIssue>* warnings) {
  AnnotationLoad load = read_annotations(path, profile, strict);
  if (!load.ok()) {
    std::ostringstream msg;
    msg << path.string() << ": " << load.error_count() << " annotation error(s)";
    std::size_t shown = 0;
    for (const auto& issue : load.issues) {
      if (issue.severity != DatasetIssue::Severity::kError) continue;
      if (shown++ == 10) {
        msg << "; ...";
        break;
      }
      msg << "; " << issue.subject << ": " << issue.message;
    }
    throw InputError(msg.str());
  }
  if (warnings)
    for (auto& issue : load.issues) warnings->push_back(std::move(issue));
  return std::move(load.dataset);
}

std::string annotations_to_json(const CaptionDataset& dataset) {
  nlohmann::ordered_json doc;
  doc["name"] = dataset.name;
  auto videos = nlohmann::ordered_json::array();
  for (const auto& [split, ids] : dataset.splits)
    for (const auto& id : ids) {
      nlohmann::ordered_json v;
      v["id"] = id;
      v["split"] = split;
      videos.push_back(std::move(v));
    }
  auto sentences = nlohmann::ordered_json::array();
  for (const auto& [id, refs] : dataset.references)
    for (const auto& caption : refs) {
      nlohmann::ordered_json s;
      s["video_id"] = id;
      s["caption"] = caption;
      sentences.push_back(std::move(s));
    }
  doc["videos"] = std::move(videos);
  doc["sentences"] = std::move(sentences);
  return doc.dump();
}

DatasetSummary summarize(const CaptionDataset& dataset) {
  DatasetSummary s;
  std::set<std::string> seen;
  for (const auto& [split, ids] : dataset.splits) {
    s.split_sizes[split] = ids.size();
    for (const auto& id : ids)
      if (!seen.insert(id).second) s.splits_disjoint = false;
  }
  s.videos = dataset.references.size();
  for (const auto& [id, refs] : dataset.references) {
    ++s.captions_per_video[refs.size()];
    s.captions += refs.size();
    std::set<std::string> normalized;
    for (const auto& r : refs)
      if (!normalized.insert(detokenize(tokenize(r))).second) ++s.duplicate_captions;
  }
  return s;
}

PredictionSet parse_predictions(std::istream& in, bool strict, std::string_view source) {
  PredictionSet set;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) { throw InputError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg); };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1) view = strip_bom(view);
    if (view.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(view);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) fail("record must be a JSON object");
    if (strict)
      for (const auto& [key, value] : rec.items())
        if (key != "video_id" && key != "caption" && key != "samples" && key != "logprobs") fail("unknown field '" + key + "'");

    std::string id;
    if (!rec.contains("video_id") || !read_id(rec["video_id"], id)) fail("missing video_id");
    if (!rec.contains("caption") || !rec["caption"].is_string()) fail("missing caption for video '" + id + "'");
    PredictionEntry entry;
    entry.caption = rec["caption"].get<std::string>();
    entry.line = line_no;
    if (rec.contains("samples")) {
      if (!rec["samples"].is_array()) fail("'samples' must be an array of strings");
      for (const auto& s : rec["samples"]) {
        if (!s.is_string()) fail("'samples' must be an array of strings");
        entry.samples.push_back(s.get<std::string>());
      }
    }
    if (rec.contains("logprobs")) {
      if (!rec["logprobs"].is_array()) fail("'logprobs' must be an array of numbers");
      for (const auto& v : rec["logprobs"]) {
        if (!v.is_number()) fail("'logprobs' must be an array of numbers");
        const double lp = v.get<double>();
        if (!std::isfinite(lp) || lp > 0.0) fail("logprob sums must be finite and <= 0");
        entry.logprobs.push_back(lp);
      }
      if (entry.logprobs.size() != entry.samples.size())
        fail("video '" + id + "': " + std::to_string(entry.samples.size()) + " samples but " + std::to_string(entry.logprobs.size()) +
             " logprobs");
    }
    const auto [it, inserted] = set.entries.emplace(id, std::move(entry));
    if (!inserted) fail("duplicate video_id '" + id + "' (first seen at line " + std::to_string(it->second.line) + ")");
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_predictions(in, strict, path.string());
}

AlignedSet align(const PredictionSet& predictions, const CaptionDataset& dataset, std::string_view split) {
  std::vector<std::string> ids;
  if (const auto it = dataset.splits.find(std::string(split)); it != dataset.splits.end()) {
    ids = it->second;
  } else if (split == "all") {
    for (const auto& [id, refs] : dataset.references) ids.push_back(id);
  } else {
    std::string available;
    for (const auto& [name, members] : dataset.splits) available += (available.empty() ? "" : ", ") + name;
    throw AlignmentError("unknown split '" + std::string(split) + "' (available: " + available + ")");
  }

  AlignedSet out;
  const std::set<std::string> in_split(ids.begin(), ids.end());
  for (const auto& id : in_split) {
    const auto p = predictions.entries.find(id);
    if (p == predictions.entries.end()) {
      out.missing_ids.push_back(id);
      continue;
    }
    out.candidates.emplace(id, p->second.caption);
    out.references.emplace(id, dataset.references.at(id));
  }
  for (const auto& [id, entry] : predictions.entries)
    if (!in_split.contains(id)) out.extra_ids.push_back(id);
  if (out.candidates.empty())
    throw AlignmentError("no predictions overlap split '" + std::string(split) + "' (" + std::to_string(in_split.size()) + " videos, " +
                         std::to_string(predictions.entries.size()) + " predictions)");
  return out;
}

}  // namespace capforge
