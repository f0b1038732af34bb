#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "litrev/classifier.hpp"
#include "litrev/corpus.hpp"

namespace litrev {

struct CandidateFilterConfig {
    std::string required_field = "Computer Science";
    std::vector<std::string> title_keywords = {"survey", "overview", "literature review",
                                               "a review"};
    bool require_full_text = true;
};

struct CandidateReport {
    std::vector<std::string> ids;  // stream order
    std::size_t malformed_lines = 0;
};

bool candidate_matches(const CorpusRecord& record, const CandidateFilterConfig& config);

/// Streams the corpus file and keeps ids whose field_of_study contains the
/// required field, whose lowercased title contains at least one keyword as a
/// substring, and (when required) that have body sections. Malformed lines
/// are skipped and counted.
CandidateReport extract_candidates(const std::string& corpus_path,
                                   const CandidateFilterConfig& config);

/// Keeps candidate ids the classifier scores at or above its threshold.
std::vector<std::string> filter_reviews(const std::vector<std::string>& candidate_ids,
                                        const Resolver& resolver,
                                        const ReviewClassifier& classifier);

/// One chapter per body section; chapter text joins the section's paragraphs
/// with a blank line; cited ids are the outbound citations whose markers occur
/// in the section, in order of first mention. Throws "no_chapters" when the
/// record has no body sections.
ReviewDocument split_chapters(const CorpusRecord& record);

struct SplitSpec {
    std::uint64_t seed = 0;
    std::vector<std::string> test_review_ids;
    double train_ratio = 0.95;  // of the non-designated reviews
    double max_test_overlap = 0.20;
};

struct RemovalLogEntry {
    std::string source_review_id;
    std::string chapter_title;
    std::string train_review_id;
    double ratio = 0.0;
};

struct DedupeResult {
    std::vector<std::size_t> kept_indices;  // ascending
    std::vector<RemovalLogEntry> removals;
};

/// Removes a test example iff some train review shares more than max_overlap
/// of the example's cited papers; the log records the first such review.
DedupeResult dedupe_test(const std::vector<std::vector<std::string>>& test_cited_ids,
                         const std::vector<std::string>& test_provenance,
                         const std::vector<std::string>& test_chapter_titles,
                         const std::vector<ReviewDocument>& train_reviews,
                         double max_overlap = 0.20);

struct BuildResult {
    DatasetSplit split;
    std::vector<RemovalLogEntry> removals;
    std::size_t total_chapters = 0;
    std::size_t rejected_chapters = 0;  // fewer than 2 resolvable abstracts
    std::size_t test_examples_before_dedupe = 0;
    // Cited-paper ids per surviving test example, for leakage auditing.
    std::vector<std::vector<std::string>> test_cited_ids;
};

/// Designated reviews become the test split; the rest are shuffled by the
/// seeded PRNG into train/valid at train_ratio (review-level assignment),
/// then the overlap dedupe runs against the train reviews.
BuildResult build_dataset(const std::vector<ReviewDocument>& reviews, const Resolver& resolver,
                          const SplitSpec& spec);

struct StatsRow {
    std::string view;  // "original" (review level) or "split" (chapter level)
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::size_t n_test = 0;
    double input_len = 0.0;
    double target_len = 0.0;
    double n_inputs = 0.0;
    std::array<double, 4> novel_ngram_pct{};  // n = 1..4
};

/// Means are taken over the union of the three splits; novel n-gram
/// percentages use unstemmed tokens and skip examples whose target has no
/// n-grams of that order. Throws "empty_split" when there are no examples.
std::vector<StatsRow> compute_stats(const DatasetSplit& split);

std::string stats_report_tsv(const std::vector<StatsRow>& rows);

std::string removal_log_json(const std::vector<RemovalLogEntry>& removals);

// --- CLI orchestration ---

struct BuildDatasetOptions {
    std::string corpus_path;
    std::string config_path;  // optional; defaults apply when empty
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string test_ids_path;
};

struct BuildDatasetOutcome {
    std::size_t candidates = 0;
    std::size_t malformed_lines = 0;
    std::size_t kept_reviews = 0;
    BuildResult result;
};

/// Full pipeline: extract candidates, train/apply the classifier, split
/// chapters, assemble examples, split, dedupe, and write train/valid/test
/// files plus the removal log, stats report, and a build report.
BuildDatasetOutcome run_build_dataset(const BuildDatasetOptions& options);

}  // namespace litrev
