#include "litrev/corpus.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "litrev/io.hpp"

namespace litrev {

namespace {

constexpr const char* kMarkerPrefix = "[CITE:";
constexpr char kMarkerSuffix = ']';

bool id_syntactically_valid(const std::string& id) {
    if (id.empty()) return false;
    for (const char c : id) {
        if (c == '\n' || c == '\t' || c == ' ') return false;
    }
    return true;
}

}  // namespace

std::vector<Violation> validate_corpus(const std::vector<CorpusRecord>& records) {
    std::vector<Violation> report;
    std::unordered_set<std::string> seen;
    for (const auto& record : records) {
        if (!id_syntactically_valid(record.paper_id)) {
            report.push_back({record.paper_id, "invalid_paper_id", "paper_id must be non-empty"});
        } else if (!seen.insert(record.paper_id).second) {
            report.push_back({record.paper_id, "duplicate_paper_id",
                              "paper_id occurs more than once"});
        }
        for (const auto& cited : record.outbound_citations) {
            if (!id_syntactically_valid(cited)) {
                report.push_back({record.paper_id, "malformed_citation",
                                  "outbound citation id '" + cited + "' is not a valid paper_id"});
            }
        }
    }
    return report;
}

std::string make_bib_tag(std::size_t index_one_based) {
    char buf[32];
    if (index_one_based <= 999) {
        std::snprintf(buf, sizeof(buf), "BIB%03zu", index_one_based);
    } else {
        std::snprintf(buf, sizeof(buf), "BIB%zu", index_one_based);
    }
    return std::string(buf);
}

std::vector<std::string> scan_citation_markers(const std::string& text) {
    std::vector<std::string> ids;
    std::size_t pos = 0;
    const std::string prefix(kMarkerPrefix);
    while ((pos = text.find(prefix, pos)) != std::string::npos) {
        const std::size_t id_start = pos + prefix.size();
        const std::size_t end = text.find(kMarkerSuffix, id_start);
        if (end == std::string::npos) break;
        ids.push_back(text.substr(id_start, end - id_start));
        pos = end + 1;
    }
    return ids;
}

std::string rewrite_citation_markers(
    const std::string& text,
    const std::function<std::optional<std::string>(const std::string&)>& replacement) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    const std::string prefix(kMarkerPrefix);
    while (pos < text.size()) {
        const std::size_t hit = text.find(prefix, pos);
        if (hit == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        const std::size_t id_start = hit + prefix.size();
        const std::size_t end = text.find(kMarkerSuffix, id_start);
        if (end == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, hit - pos);
        const std::string id = text.substr(id_start, end - id_start);
        const auto repl = replacement(id);
        if (repl.has_value()) {
            out += *repl;
            pos = end + 1;
        } else {
            // Dropped marker: also consume one adjacent space so the text
            // does not accumulate doubled separators.
            pos = end + 1;
            if (pos < text.size() && text[pos] == ' ') {
                ++pos;
            } else if (!out.empty() && out.back() == ' ') {
                out.pop_back();
            }
        }
    }
    return out;
}

AssembleOutcome assemble_example(const ReviewDocument& review, const Chapter& chapter,
                                 const Resolver& resolver) {
    std::vector<std::pair<std::string, const CorpusRecord*>> surviving;
    for (const auto& cited_id : chapter.cited_ids) {
        const CorpusRecord* record = resolver(cited_id);
        if (record == nullptr) continue;
        if (record->abstract.empty()) continue;  // abstracts are the sole source text
        surviving.emplace_back(cited_id, record);
    }
    if (surviving.size() < 2) {
        return {std::nullopt, "insufficient_abstracts"};
    }

    ChapterExample example;
    example.review_title = review.record.title;
    example.chapter_title = chapter.chapter_title;
    std::unordered_map<std::string, std::string> tag_of;
    for (std::size_t i = 0; i < surviving.size(); ++i) {
        const std::string tag = make_bib_tag(i + 1);
        tag_of[surviving[i].first] = tag;
        example.inputs.push_back({tag, surviving[i].second->abstract});
    }
    example.target = rewrite_citation_markers(
        chapter.text, [&tag_of](const std::string& id) -> std::optional<std::string> {
            const auto it = tag_of.find(id);
            if (it == tag_of.end()) return std::nullopt;
            return it->second;
        });
    return {std::move(example), ""};
}

// --- serialization ---

std::string corpus_record_to_json(const CorpusRecord& record) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& section : record.body_sections) {
        sections.push_back({{"heading", section.heading}, {"paragraphs", section.paragraphs}});
    }
    const nlohmann::json j = {
        {"paper_id", record.paper_id},
        {"title", record.title},
        {"abstract", record.abstract},
        {"body_sections", sections},
        {"outbound_citations", record.outbound_citations},
        {"field_of_study", record.field_of_study},
    };
    return j.dump();
}

CorpusRecord corpus_record_from_json(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    CorpusRecord record;
    record.paper_id = j.at("paper_id").get<std::string>();
    record.title = j.at("title").get<std::string>();
    record.abstract = j.value("abstract", std::string());
    if (j.contains("body_sections")) {
        for (const auto& section : j.at("body_sections")) {
            BodySection body;
            body.heading = section.at("heading").get<std::string>();
            body.paragraphs = section.at("paragraphs").get<std::vector<std::string>>();
            record.body_sections.push_back(std::move(body));
        }
    }
    record.outbound_citations = j.value("outbound_citations", std::vector<std::string>());
    record.field_of_study = j.value("field_of_study", std::vector<std::string>());
    return record;
}

CorpusStreamReport for_each_corpus_record(const std::string& path,
                                          const std::function<void(const CorpusRecord&)>& fn) {
    CorpusStreamReport report;
    for_each_line(path, [&](std::size_t, const std::string& line) {
        try {
            fn(corpus_record_from_json(line));
            ++report.parsed;
        } catch (const std::exception&) {
            ++report.malformed;
        }
    });
    return report;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
    std::vector<CorpusRecord> records;
    for_each_corpus_record(path, [&](const CorpusRecord& record) { records.push_back(record); });
    return records;
}

std::string example_to_json(const ChapterExample& example, const std::string& source_review_id) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& input : example.inputs) {
        inputs.push_back({{"bib", input.bib_tag}, {"abstract", input.abstract}});
    }
    const nlohmann::json j = {
        {"review_title", example.review_title},
        {"chapter_title", example.chapter_title},
        {"inputs", inputs},
        {"target", example.target},
        {"source_review_id", source_review_id},
    };
    return j.dump();
}

std::pair<ChapterExample, std::string> example_from_json(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    ChapterExample example;
    example.review_title = j.at("review_title").get<std::string>();
    example.chapter_title = j.at("chapter_title").get<std::string>();
    for (const auto& input : j.at("inputs")) {
        example.inputs.push_back({input.at("bib").get<std::string>(),
                                  input.at("abstract").get<std::string>()});
    }
    example.target = j.at("target").get<std::string>();
    return {std::move(example), j.value("source_review_id", std::string())};
}

void write_dataset_file(const std::string& path, const std::vector<ChapterExample>& examples,
                        const std::vector<std::string>& provenance) {
    if (examples.size() != provenance.size()) {
        throw std::invalid_argument("write_dataset_file: provenance size mismatch");
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out << example_to_json(examples[i], provenance[i]) << '\n';
    }
    atomic_write_file(path, out.str());
}

std::pair<std::vector<ChapterExample>, std::vector<std::string>> load_dataset_file(
    const std::string& path) {
    std::vector<ChapterExample> examples;
    std::vector<std::string> provenance;
    for_each_line(path, [&](std::size_t, const std::string& line) {
        auto [example, source] = example_from_json(line);
        examples.push_back(std::move(example));
        provenance.push_back(std::move(source));
    });
    return {std::move(examples), std::move(provenance)};
}

}  // namespace litrev
