#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace litrev {

struct Sentence {
    std::size_t doc_index = 0;
    std::size_t sent_index = 0;
    std::string text;
};

/// Sentence split at ./!/? followed by whitespace and a capital or digit,
/// guarding a fixed abbreviation list. Trims whitespace and drops empties.
std::vector<std::string> split_sentences(const std::string& text);

/// All documents' sentences with (doc_index, sent_index) provenance.
std::vector<Sentence> collect_sentences(const std::vector<std::string>& docs);

/// First min(k, available) sentences of each document, in document order,
/// joined by single spaces. Throws "no_inputs" for an empty doc list.
std::string lead_k(const std::vector<std::string>& docs, std::size_t k);

struct LexRankConfig {
    double damping = 0.85;
    double tol = 1e-8;
    std::size_t max_iter = 1000;
    std::size_t l = 5;
};

struct LexRankResult {
    std::string summary;
    std::vector<double> scores;          // stationary distribution, sums to 1
    std::vector<std::size_t> selected;   // indices into the sentence list, source order
};

/// Damped PageRank over the sentence graph with tf-idf cosine edges
/// (idf over the sentence collection, add-one smoothed). Rows of the
/// transition matrix are normalized; all-zero rows become uniform.
/// Throws when max_iter is reached before the residual drops below tol.
LexRankResult lexrank_detailed(const std::vector<std::string>& docs, const LexRankConfig& config);
std::string lexrank(const std::vector<std::string>& docs, const LexRankConfig& config = {});

/// Greedy selection of up to l sentences maximizing stemmed ROUGE-2 F1
/// against the target. Stops early when no addition strictly improves,
/// except that an all-zero-gain frontier is filled by earliest index.
/// Output keeps source order. Throws "no_inputs" when there are no sentences.
std::string ext_oracle(const std::vector<std::string>& docs, const std::string& target,
                       std::size_t l);

/// First greedy pick only, exposed for oracle comparison in tests.
std::size_t ext_oracle_first_pick(const std::vector<std::string>& docs,
                                  const std::string& target);

// tf-idf cosine similarity matrix over the sentence collection (row-major,
// n x n), exposed for the dense-solve oracle.
std::vector<double> sentence_similarity_matrix(const std::vector<Sentence>& sentences);

}  // namespace litrev
