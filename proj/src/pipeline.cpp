#include "litrev/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "litrev/io.hpp"
#include "litrev/metrics.hpp"

namespace litrev {

namespace {

std::string lowercase(const std::string& text) {
    std::string out = text;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::size_t token_count(const std::string& text) { return tokenize(text, false).size(); }

}  // namespace

bool candidate_matches(const CorpusRecord& record, const CandidateFilterConfig& config) {
    if (std::find(record.field_of_study.begin(), record.field_of_study.end(),
                  config.required_field) == record.field_of_study.end()) {
        return false;
    }
    if (config.require_full_text && record.body_sections.empty()) return false;
    const std::string title = lowercase(record.title);
    for (const auto& keyword : config.title_keywords) {
        if (title.find(keyword) != std::string::npos) return true;
    }
    return false;
}

CandidateReport extract_candidates(const std::string& corpus_path,
                                   const CandidateFilterConfig& config) {
    if (config.title_keywords.empty()) {
        throw std::invalid_argument("extract_candidates: keywords must be non-empty");
    }
    CandidateReport report;
    const auto stream = for_each_corpus_record(corpus_path, [&](const CorpusRecord& record) {
        if (candidate_matches(record, config)) report.ids.push_back(record.paper_id);
    });
    report.malformed_lines = stream.malformed;
    return report;
}

std::vector<std::string> filter_reviews(const std::vector<std::string>& candidate_ids,
                                        const Resolver& resolver,
                                        const ReviewClassifier& classifier) {
    std::vector<std::string> kept;
    for (const auto& id : candidate_ids) {
        const CorpusRecord* record = resolver(id);
        if (record == nullptr) continue;
        if (classifier.classify(record->title, record->abstract) >= classifier.threshold()) {
            kept.push_back(id);
        }
    }
    return kept;
}

ReviewDocument split_chapters(const CorpusRecord& record) {
    if (record.body_sections.empty()) throw std::runtime_error("no_chapters");
    const std::unordered_set<std::string> outbound(record.outbound_citations.begin(),
                                                   record.outbound_citations.end());
    ReviewDocument review;
    review.record = record;
    for (const auto& section : record.body_sections) {
        Chapter chapter;
        chapter.chapter_title = section.heading;
        std::string text;
        for (const auto& paragraph : section.paragraphs) {
            if (!text.empty()) text += "\n\n";
            text += paragraph;
        }
        chapter.text = std::move(text);
        std::unordered_set<std::string> seen;
        for (const auto& id : scan_citation_markers(chapter.text)) {
            if (!outbound.contains(id)) continue;  // marker for an uncited paper
            if (seen.insert(id).second) chapter.cited_ids.push_back(id);
        }
        review.chapters.push_back(std::move(chapter));
    }
    return review;
}

DedupeResult dedupe_test(const std::vector<std::vector<std::string>>& test_cited_ids,
                         const std::vector<std::string>& test_provenance,
                         const std::vector<std::string>& test_chapter_titles,
                         const std::vector<ReviewDocument>& train_reviews, double max_overlap) {
    std::vector<std::unordered_set<std::string>> train_cited;
    train_cited.reserve(train_reviews.size());
    for (const auto& review : train_reviews) {
        train_cited.emplace_back(review.record.outbound_citations.begin(),
                                 review.record.outbound_citations.end());
    }

    DedupeResult result;
    for (std::size_t i = 0; i < test_cited_ids.size(); ++i) {
        const auto& cited = test_cited_ids[i];
        bool removed = false;
        for (std::size_t r = 0; r < train_reviews.size() && !removed; ++r) {
            std::size_t shared = 0;
            for (const auto& id : cited) {
                if (train_cited[r].contains(id)) ++shared;
            }
            if (cited.empty()) continue;
            const double ratio =
                static_cast<double>(shared) / static_cast<double>(cited.size());
            if (ratio > max_overlap) {
                result.removals.push_back({test_provenance[i], test_chapter_titles[i],
                                           train_reviews[r].record.paper_id, ratio});
                removed = true;
            }
        }
        if (!removed) result.kept_indices.push_back(i);
    }
    return result;
}

BuildResult build_dataset(const std::vector<ReviewDocument>& reviews, const Resolver& resolver,
                          const SplitSpec& spec) {
    std::unordered_set<std::string> designated(spec.test_review_ids.begin(),
                                               spec.test_review_ids.end());
    for (const auto& id : spec.test_review_ids) {
        const bool present = std::any_of(reviews.begin(), reviews.end(), [&](const auto& review) {
            return review.record.paper_id == id;
        });
        if (!present) {
            throw std::runtime_error("designated test review not found: " + id);
        }
    }

    std::vector<std::size_t> rest;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < reviews.size(); ++i) {
        (designated.contains(reviews[i].record.paper_id) ? test_idx : rest).push_back(i);
    }

    std::mt19937_64 rng(spec.seed);
    deterministic_shuffle(rest, rng);
    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train_ratio * static_cast<double>(rest.size())));
    std::vector<std::size_t> train_idx(rest.begin(), rest.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> valid_idx(rest.begin() + static_cast<long>(n_train), rest.end());
    // File order stays corpus order within each split.
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(valid_idx.begin(), valid_idx.end());

    BuildResult result;
    std::vector<std::vector<std::string>> test_cited;
    std::vector<std::string> test_chapter_titles;

    const auto assemble_into = [&](const std::vector<std::size_t>& indices,
                                   std::vector<ChapterExample>& out,
                                   std::vector<std::string>& provenance, bool is_test) {
        for (const auto idx : indices) {
            const auto& review = reviews[idx];
            for (const auto& chapter : review.chapters) {
                ++result.total_chapters;
                auto outcome = assemble_example(review, chapter, resolver);
                if (!outcome.ok()) {
                    ++result.rejected_chapters;
                    continue;
                }
                if (is_test) {
                    std::vector<std::string> cited;
                    for (const auto& cited_id : chapter.cited_ids) {
                        const CorpusRecord* record = resolver(cited_id);
                        if (record != nullptr && !record->abstract.empty()) {
                            cited.push_back(cited_id);
                        }
                    }
                    test_cited.push_back(std::move(cited));
                    test_chapter_titles.push_back(chapter.chapter_title);
                }
                out.push_back(std::move(*outcome.example));
                provenance.push_back(review.record.paper_id);
            }
        }
    };

    assemble_into(train_idx, result.split.train, result.split.train_provenance, false);
    assemble_into(valid_idx, result.split.valid, result.split.valid_provenance, false);
    assemble_into(test_idx, result.split.test, result.split.test_provenance, true);
    result.test_examples_before_dedupe = result.split.test.size();

    std::vector<ReviewDocument> train_reviews;
    train_reviews.reserve(train_idx.size());
    for (const auto idx : train_idx) train_reviews.push_back(reviews[idx]);

    const auto dedupe = dedupe_test(test_cited, result.split.test_provenance,
                                    test_chapter_titles, train_reviews, spec.max_test_overlap);
    std::vector<ChapterExample> kept_test;
    std::vector<std::string> kept_provenance;
    for (const auto idx : dedupe.kept_indices) {
        kept_test.push_back(std::move(result.split.test[idx]));
        kept_provenance.push_back(std::move(result.split.test_provenance[idx]));
        result.test_cited_ids.push_back(std::move(test_cited[idx]));
    }
    result.split.test = std::move(kept_test);
    result.split.test_provenance = std::move(kept_provenance);
    result.removals = dedupe.removals;
    return result;
}

namespace {

struct ViewExample {
    std::vector<std::string> abstracts;
    std::string target;
    int split = 0;  // 0 train, 1 valid, 2 test
};

StatsRow stats_over(const std::string& view, const std::vector<ViewExample>& examples) {
    StatsRow row;
    row.view = view;
    double input_len_sum = 0.0;
    double target_len_sum = 0.0;
    double n_inputs_sum = 0.0;
    std::array<double, 4> novel_sum{};
    std::array<std::size_t, 4> novel_count{};
    for (const auto& example : examples) {
        switch (example.split) {
            case 0: ++row.n_train; break;
            case 1: ++row.n_valid; break;
            default: ++row.n_test; break;
        }
        std::size_t input_tokens = 0;
        for (const auto& abstract : example.abstracts) input_tokens += token_count(abstract);
        input_len_sum += static_cast<double>(input_tokens);
        target_len_sum += static_cast<double>(token_count(example.target));
        n_inputs_sum += static_cast<double>(example.abstracts.size());
        for (std::size_t n = 1; n <= 4; ++n) {
            if (token_count(example.target) < n) continue;
            novel_sum[n - 1] += novel_ngram_pct(example.target, example.abstracts, n);
            ++novel_count[n - 1];
        }
    }
    const auto total = static_cast<double>(examples.size());
    row.input_len = input_len_sum / total;
    row.target_len = target_len_sum / total;
    row.n_inputs = n_inputs_sum / total;
    for (std::size_t n = 0; n < 4; ++n) {
        row.novel_ngram_pct[n] = novel_count[n] > 0
                                     ? novel_sum[n] / static_cast<double>(novel_count[n])
                                     : 0.0;
    }
    return row;
}

}  // namespace

std::vector<StatsRow> compute_stats(const DatasetSplit& split) {
    const std::size_t total = split.train.size() + split.valid.size() + split.test.size();
    if (total == 0) throw std::runtime_error("empty_split");

    std::vector<ViewExample> chapter_view;
    chapter_view.reserve(total);
    // Review-level view groups chapter examples by source review.
    std::vector<std::string> review_order;
    std::unordered_map<std::string, ViewExample> review_view;

    const auto visit = [&](const std::vector<ChapterExample>& examples,
                           const std::vector<std::string>& provenance, int which) {
        for (std::size_t i = 0; i < examples.size(); ++i) {
            const auto& example = examples[i];
            ViewExample view;
            for (const auto& input : example.inputs) view.abstracts.push_back(input.abstract);
            view.target = example.target;
            view.split = which;
            chapter_view.push_back(view);

            const auto& review_id = provenance[i];
            auto it = review_view.find(review_id);
            if (it == review_view.end()) {
                review_order.push_back(review_id);
                it = review_view.emplace(review_id, ViewExample{{}, "", which}).first;
            }
            auto& agg = it->second;
            for (const auto& abstract : view.abstracts) {
                if (std::find(agg.abstracts.begin(), agg.abstracts.end(), abstract) ==
                    agg.abstracts.end()) {
                    agg.abstracts.push_back(abstract);
                }
            }
            if (!agg.target.empty()) agg.target += "\n\n";
            agg.target += example.target;
        }
    };
    visit(split.train, split.train_provenance, 0);
    visit(split.valid, split.valid_provenance, 1);
    visit(split.test, split.test_provenance, 2);

    std::vector<ViewExample> review_examples;
    review_examples.reserve(review_order.size());
    for (const auto& review_id : review_order) review_examples.push_back(review_view.at(review_id));

    return {stats_over("original", review_examples), stats_over("split", chapter_view)};
}

std::string stats_report_tsv(const std::vector<StatsRow>& rows) {
    std::ostringstream out;
    out << "view\tn_train\tn_valid\tn_test\tinput_len\ttarget_len\tn_inputs"
        << "\tnovel_1gram_pct\tnovel_2gram_pct\tnovel_3gram_pct\tnovel_4gram_pct\n";
    for (const auto& row : rows) {
        out << row.view << '\t' << row.n_train << '\t' << row.n_valid << '\t' << row.n_test
            << '\t' << format_fixed(row.input_len) << '\t' << format_fixed(row.target_len)
            << '\t' << format_fixed(row.n_inputs);
        for (const auto pct : row.novel_ngram_pct) out << '\t' << format_fixed(pct);
        out << '\n';
    }
    return out.str();
}

std::string removal_log_json(const std::vector<RemovalLogEntry>& removals) {
    std::ostringstream out;
    for (const auto& entry : removals) {
        const nlohmann::json j = {
            {"source_review_id", entry.source_review_id},
            {"chapter_title", entry.chapter_title},
            {"train_review_id", entry.train_review_id},
            {"ratio", entry.ratio},
        };
        out << j.dump() << '\n';
    }
    return out.str();
}

namespace {

CandidateFilterConfig filter_config_from_json(const nlohmann::json& j) {
    CandidateFilterConfig config;
    if (j.contains("required_field")) config.required_field = j.at("required_field");
    if (j.contains("title_keywords")) {
        config.title_keywords = j.at("title_keywords").get<std::vector<std::string>>();
    }
    if (j.contains("require_full_text")) config.require_full_text = j.at("require_full_text");
    if (config.title_keywords.empty()) {
        throw std::runtime_error("config: title_keywords must be non-empty");
    }
    return config;
}

std::vector<LabeledDoc> load_labeled_docs(const std::string& path) {
    std::vector<LabeledDoc> docs;
    for_each_line(path, [&](std::size_t, const std::string& line) {
        const auto j = nlohmann::json::parse(line);
        LabeledDoc doc;
        doc.title = j.at("title").get<std::string>();
        doc.abstract = j.value("abstract", std::string());
        const std::string label = j.at("label").get<std::string>();
        if (label != "suitable" && label != "unsuitable") {
            throw std::runtime_error("labels: label must be suitable|unsuitable");
        }
        doc.suitable = label == "suitable";
        docs.push_back(std::move(doc));
    });
    return docs;
}

}  // namespace

BuildDatasetOutcome run_build_dataset(const BuildDatasetOptions& options) {
    nlohmann::json config = nlohmann::json::object();
    if (!options.config_path.empty()) {
        config = nlohmann::json::parse(read_file(options.config_path));
    }

    const CandidateFilterConfig filter_config =
        config.contains("filter") ? filter_config_from_json(config.at("filter"))
                                  : CandidateFilterConfig{};

    // Corpus is loaded once for resolution; candidate extraction streams the
    // file again to keep the streaming path exercised and order well-defined.
    const std::vector<CorpusRecord> records = load_corpus(options.corpus_path);
    std::unordered_map<std::string, const CorpusRecord*> by_id;
    for (const auto& record : records) by_id.emplace(record.paper_id, &record);
    const Resolver resolver = [&by_id](const std::string& id) -> const CorpusRecord* {
        const auto it = by_id.find(id);
        return it == by_id.end() ? nullptr : it->second;
    };

    const CandidateReport candidates = extract_candidates(options.corpus_path, filter_config);

    std::unique_ptr<ReviewClassifier> classifier;
    const auto classifier_config =
        config.contains("classifier") ? config.at("classifier") : nlohmann::json::object();
    const std::string mode = classifier_config.value("mode", std::string("accept_all"));
    if (mode == "standin") {
        StandinTrainOptions train_options;
        train_options.learning_rate = classifier_config.value("learning_rate", 0.5);
        train_options.iterations = classifier_config.value("iterations", 600);
        train_options.l2 = classifier_config.value("l2", 1e-4);
        train_options.threshold = classifier_config.value("threshold", 0.5);
        // relative labels paths resolve against the config file's directory
        std::filesystem::path labels_path(
            classifier_config.at("labels_path").get<std::string>());
        if (labels_path.is_relative() && !options.config_path.empty()) {
            labels_path = std::filesystem::path(options.config_path).parent_path() / labels_path;
        }
        const auto labels = load_labeled_docs(labels_path.string());
        classifier = std::make_unique<StandinClassifier>(
            StandinClassifier::train(labels, train_options));
    } else if (mode == "accept_all") {
        classifier = std::make_unique<AcceptAllClassifier>();
    } else {
        throw std::runtime_error("config: classifier.mode must be standin|accept_all");
    }

    const std::vector<std::string> kept = filter_reviews(candidates.ids, resolver, *classifier);

    std::vector<ReviewDocument> reviews;
    reviews.reserve(kept.size());
    for (const auto& id : kept) reviews.push_back(split_chapters(*resolver(id)));

    SplitSpec spec;
    spec.seed = options.seed;
    spec.train_ratio = config.value("train_ratio", 0.95);
    spec.max_test_overlap = config.value("max_test_overlap", 0.20);
    for_each_line(options.test_ids_path, [&](std::size_t, const std::string& line) {
        spec.test_review_ids.push_back(line);
    });

    BuildDatasetOutcome outcome;
    outcome.candidates = candidates.ids.size();
    outcome.malformed_lines = candidates.malformed_lines;
    outcome.kept_reviews = kept.size();
    outcome.result = build_dataset(reviews, resolver, spec);

    const auto& split = outcome.result.split;
    write_dataset_file(options.out_dir + "/train.jsonl", split.train, split.train_provenance);
    write_dataset_file(options.out_dir + "/valid.jsonl", split.valid, split.valid_provenance);
    write_dataset_file(options.out_dir + "/test.jsonl", split.test, split.test_provenance);
    atomic_write_file(options.out_dir + "/removals.jsonl",
                      removal_log_json(outcome.result.removals));
    atomic_write_file(options.out_dir + "/stats.tsv", stats_report_tsv(compute_stats(split)));

    const nlohmann::json report = {
        {"candidates", outcome.candidates},
        {"malformed_lines", outcome.malformed_lines},
        {"kept_reviews", outcome.kept_reviews},
        {"total_chapters", outcome.result.total_chapters},
        {"rejected_chapters", outcome.result.rejected_chapters},
        {"train_examples", split.train.size()},
        {"valid_examples", split.valid.size()},
        {"test_examples_before_dedupe", outcome.result.test_examples_before_dedupe},
        {"test_examples", split.test.size()},
        {"dedupe_removals", outcome.result.removals.size()},
    };
    atomic_write_file(options.out_dir + "/build_report.json", report.dump(2) + "\n");
    return outcome;
}

}  // namespace litrev
