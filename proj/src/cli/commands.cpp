#include "capforge/cli/commands.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "capforge/errors.hpp"
#include "capforge/ngram.hpp"

namespace capforge::cli {

namespace {

void print_warnings(const std::vector<DatasetIssue>& issues, std::ostream& diag) {
  for (const auto& issue : issues)
    if (issue.severity == DatasetIssue::Severity::kWarning) diag << "warning: " << issue.subject << ": " << issue.message << '\n';
}

std::map<std::string, std::vector<TokenSequence>> tokenized_split(const CaptionDataset& dataset, const std::string& split) {
  std::vector<std::string> ids;
  if (const auto it = dataset.splits.find(split); it != dataset.splits.end()) {
    ids = it->second;
  } else if (split == "all") {
    for (const auto& [id, refs] : dataset.references) ids.push_back(id);
  } else {
    throw AlignmentError("unknown split '" + split + "'");
  }
  std::map<std::string, std::vector<TokenSequence>> out;
  for (const auto& id : ids) {
    auto& refs = out[id];
    for (const auto& r : dataset.references.at(id)) refs.push_back(tokenize(r));
  }
  return out;
}

}  // namespace

EvaluateResult run_evaluate(const RunConfig& config, std::ostream& diag) {
  config.validate();
  std::vector<DatasetIssue> warnings;
  const CaptionDataset dataset = load_annotations(config.dataset, config.profile, config.strict, &warnings);
  print_warnings(warnings, diag);
  const PredictionSet predictions = load_predictions(config.predictions, config.strict);
  const std::string split = config.effective_split();
  const AlignedSet aligned = align(predictions, dataset, split);
  if (!aligned.missing_ids.empty())
    diag << "warning: " << aligned.missing_ids.size() << " videos in split '" << split << "' have no prediction (first: '"
         << aligned.missing_ids.front() << "')\n";
  if (!aligned.extra_ids.empty())
    diag << "warning: " << aligned.extra_ids.size() << " predictions are not in split '" << split << "' (first: '"
         << aligned.extra_ids.front() << "')\n";

  EvaluateResult result;
  EvaluationOutput& out = result.output;
  out.dataset = dataset.name;
  out.split = split;
  out.missing = aligned.missing_ids.size();
  out.extra = aligned.extra_ids.size();
  out.report = evaluate(aligned.candidates, aligned.references, config.workers);
  if (config.bootstrap_samples > 0) out.bootstrap = bootstrap(out.report, config.bootstrap_samples, config.seed);

  switch (config.format) {
    case OutputFormat::kTextTable:
      result.rendered = render_text(out);
      break;
    case OutputFormat::kJson:
      result.rendered = render_json(out);
      break;
    case OutputFormat::kCsv:
      result.rendered = render_csv(out);
      break;
  }
  return result;
}

StreamSummary run_reward_stream(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& diag) {
  config.validate();
  std::shared_ptr<const CorpusStats> stats;
  std::shared_ptr<const std::map<std::string, std::vector<std::string>>> fallback;
  std::optional<CaptionDataset> dataset;
  if (!config.dataset.empty()) {
    std::vector<DatasetIssue> warnings;
    dataset = load_annotations(config.dataset, config.profile, config.strict, &warnings);
    print_warnings(warnings, diag);
    fallback = std::make_shared<const std::map<std::string, std::vector<std::string>>>(dataset->references);
  }
  if (!config.stats.empty()) {
    stats = std::make_shared<const CorpusStats>(load_corpus_stats(config.stats, config.strict));
    diag << "reward-stream: loaded stats from " << config.stats.string();
  } else {
    stats = std::make_shared<const CorpusStats>(build_corpus_stats(tokenized_split(*dataset, config.effective_split())));
    diag << "reward-stream: built stats from split '" << config.effective_split() << "'";
  }
  diag << " (" << stats->num_videos() << " videos, " << stats->num_entries() << " n-grams), metric "
       << to_string(config.reward_metric) << '\n';

  const RewardServer server(stats, config.reward_metric, fallback, config.strict);
  const StreamSummary summary = server.serve(in, out, diag);
  diag << "reward-stream: served " << summary.requests << " requests, " << summary.errors << " rejected, mean greedy reward "
       << format_double(summary.mean_greedy_reward()) << ", mean sampled reward " << format_double(summary.mean_sampled_reward())
       << '\n';
  return summary;
}

bool run_validate_data(const RunConfig& config, std::ostream& out) {
  config.validate();
  const AnnotationLoad load = read_annotations(config.dataset, config.profile, config.strict);
  const DatasetSummary summary = summarize(load.dataset);

  if (config.format == OutputFormat::kJson) {
    nlohmann::ordered_json doc;
    doc["dataset"] = load.dataset.name;
    doc["profile"] = to_string(config.profile);
    doc["videos"] = summary.videos;
    doc["captions"] = summary.captions;
    nlohmann::ordered_json splits = nlohmann::ordered_json::object();
    for (const auto& [name, size] : summary.split_sizes) splits[name] = size;
    doc["splits"] = std::move(splits);
    nlohmann::ordered_json histogram = nlohmann::ordered_json::object();
    for (const auto& [count, videos] : summary.captions_per_video) histogram[std::to_string(count)] = videos;
    doc["captions_per_video"] = std::move(histogram);
    doc["duplicate_captions"] = summary.duplicate_captions;
    doc["splits_disjoint"] = summary.splits_disjoint;
    auto issues = nlohmann::ordered_json::array();
    for (const auto& issue : load.issues) {
      nlohmann::ordered_json j;
      j["severity"] = issue.severity == DatasetIssue::Severity::kError ? "error" : "warning";
      j["subject"] = issue.subject;
      j["message"] = issue.message;
      issues.push_back(std::move(j));
    }
    doc["issues"] = std::move(issues);
    doc["ok"] = load.ok() && summary.splits_disjoint;
    out << doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    return load.ok() && summary.splits_disjoint;
  }

  out << "dataset: " << load.dataset.name << " (profile " << to_string(config.profile) << ")\n";
  out << "videos: " << group_thousands(summary.videos) << "  captions: " << group_thousands(summary.captions) << '\n';
  std::string sizes;
  for (const auto& [name, size] : summary.split_sizes) {
    out << "split " << name << ": " << group_thousands(size) << '\n';
  }
  if (config.profile == AnnotationProfile::kMsrVtt) {
    auto size_of = [&](const char* name) {
      const auto it = summary.split_sizes.find(name);
      return group_thousands(it == summary.split_sizes.end() ? 0 : it->second);
    };
    out << "train/val/test: " << size_of("train") << "/" << size_of("val") << "/" << size_of("test") << '\n';
  }
  out << "captions per video:";
  for (const auto& [count, videos] : summary.captions_per_video) out << ' ' << count << " x " << group_thousands(videos);
  out << '\n';
  out << "duplicate captions: " << group_thousands(summary.duplicate_captions) << '\n';
  out << "splits disjoint: " << (summary.splits_disjoint ? "yes" : "no") << '\n';
  for (const auto& issue : load.issues)
    out << (issue.severity == DatasetIssue::Severity::kError ? "error: " : "warning: ") << issue.subject << ": " << issue.message << '\n';
  const bool ok = load.ok() && summary.splits_disjoint;
  out << "status: " << (ok ? "ok" : "invalid (" + std::to_string(load.error_count()) + " errors)") << '\n';
  return ok;
}

void run_fuse(const RunConfig& config, std::ostream& out) {
  config.validate();
  if (config.height) {
    const std::size_t per_frame = visual_token_count(*config.height, *config.width, config.patch);
    const std::size_t frames = config.frames.value_or(1);
    out << "visual tokens per frame: " << per_frame << " (" << *config.height << "x" << *config.width << ", patch " << config.patch
        << ")\n";
    out << "frames: " << frames << '\n';
    out << "concat length: " << frames * per_frame << '\n';
    out << "average length: " << per_frame << '\n';
  }
  if (!config.input.empty()) {
    const FrameTokenBlock block = read_tensor_file(config.input);
    const FusedTokens fused = config.fusion_mode == FusionMode::kConcat ? fuse_concat(block) : fuse_average(block);
    write_tensor_file(config.output, fused);
    out << "fused " << block.frames() << "x" << block.tokens_per_frame() << "x" << block.dim() << " -> " << fused.length << "x"
        << fused.dim << " (" << to_string(fused.mode) << ") into " << config.output.string() << '\n';
  }
}

void run_stats(const RunConfig& config, std::ostream& out) {
  config.validate();
  const CaptionDataset dataset = load_annotations(config.dataset, config.profile, config.strict);
  const CorpusStats stats = build_corpus_stats(tokenized_split(dataset, config.effective_split()));
  save_corpus_stats(stats, config.output);
  out << "stats: " << stats.num_videos() << " videos, " << stats.num_entries() << " n-grams from split '" << config.effective_split()
      << "' -> " << config.output.string() << '\n';
}

int execute(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::kEvaluate: {
        const EvaluateResult result = run_evaluate(config, err);
        if (result.output.bootstrap) err << "bootstrap seed: " << result.output.bootstrap->seed << '\n';
        out << result.rendered;
        return kExitOk;
      }
      case Command::kRewardStream:
        run_reward_stream(config, in, out, err);
        return kExitOk;
      case Command::kValidateData:
        return run_validate_data(config, out) ? kExitOk : kExitInput;
      case Command::kFuse:
        run_fuse(config, out);
        return kExitOk;
      case Command::kStats:
        run_stats(config, out);
        return kExitOk;
    }
    return kExitInternal;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const AlignmentError& e) {
    err << "alignment error: " << e.what() << '\n';
    return kExitAlignment;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace capforge::cli
