#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace litrev {

struct BodySection {
    std::string heading;
    std::vector<std::string> paragraphs;
};

/// One scholarly paper. Cited papers usually carry only title/abstract;
/// reviews additionally have body sections and outbound citations.
struct CorpusRecord {
    std::string paper_id;
    std::string title;
    std::string abstract;  // may be empty
    std::vector<BodySection> body_sections;
    std::vector<std::string> outbound_citations;
    std::vector<std::string> field_of_study;
};

struct Chapter {
    std::string chapter_title;
    std::string text;
    std::vector<std::string> cited_ids;  // order of first in-text mention, duplicate-free
};

struct ReviewDocument {
    CorpusRecord record;
    std::vector<Chapter> chapters;
};

struct BibInput {
    std::string bib_tag;
    std::string abstract;
};

/// One summarization instance: query (review + chapter titles), tagged cited
/// abstracts, target chapter text.
struct ChapterExample {
    std::string review_title;
    std::string chapter_title;
    std::vector<BibInput> inputs;  // n >= 2
    std::string target;
};

struct DatasetSplit {
    std::vector<ChapterExample> train;
    std::vector<ChapterExample> valid;
    std::vector<ChapterExample> test;
    // Source review paper_id per example, parallel to the vectors above.
    std::vector<std::string> train_provenance;
    std::vector<std::string> valid_provenance;
    std::vector<std::string> test_provenance;
};

struct Violation {
    std::string record_id;
    std::string rule;
    std::string detail;
};

/// Checks per-record invariants plus corpus-wide id uniqueness. Returns a
/// report instead of aborting; empty report means all invariants hold.
std::vector<Violation> validate_corpus(const std::vector<CorpusRecord>& records);

/// Looks up a record by paper_id; nullptr when the referent is absent.
using Resolver = std::function<const CorpusRecord*(const std::string&)>;

struct AssembleOutcome {
    std::optional<ChapterExample> example;
    std::string rejection;  // "insufficient_abstracts" when fewer than 2 resolve

    bool ok() const { return example.has_value(); }
};

/// Builds a ChapterExample from a chapter: resolvable cited papers with
/// non-empty abstracts become BIB-tagged inputs in citation order, and the
/// chapter text's citation markers are rewritten to the matching tags
/// (markers of papers that did not survive are dropped).
AssembleOutcome assemble_example(const ReviewDocument& review, const Chapter& chapter,
                                 const Resolver& resolver);

/// "BIB001" style tags: zero-padded to 3 digits through n=999, natural width
/// beyond that.
std::string make_bib_tag(std::size_t index_one_based);

// In-text citation markers are explicit in this corpus format: "[CITE:<paper_id>]".
std::vector<std::string> scan_citation_markers(const std::string& text);
std::string rewrite_citation_markers(
    const std::string& text,
    const std::function<std::optional<std::string>(const std::string&)>& replacement);

// --- line-delimited JSON serialization ---

std::string corpus_record_to_json(const CorpusRecord& record);
CorpusRecord corpus_record_from_json(const std::string& line);

struct CorpusStreamReport {
    std::size_t parsed = 0;
    std::size_t malformed = 0;
};

/// Streams records from a corpus file, skipping (and counting) malformed lines.
CorpusStreamReport for_each_corpus_record(const std::string& path,
                                          const std::function<void(const CorpusRecord&)>& fn);

std::vector<CorpusRecord> load_corpus(const std::string& path);

std::string example_to_json(const ChapterExample& example, const std::string& source_review_id);
std::pair<ChapterExample, std::string> example_from_json(const std::string& line);

void write_dataset_file(const std::string& path, const std::vector<ChapterExample>& examples,
                        const std::vector<std::string>& provenance);
std::pair<std::vector<ChapterExample>, std::vector<std::string>> load_dataset_file(
    const std::string& path);

}  // namespace litrev
