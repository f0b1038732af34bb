#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace litrev {

/// Lowercased tokens, never empty strings.
using TokenList = std::vector<std::string>;

/// Precision/recall/F1 for one ROUGE variant.
struct ScoreTriple {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline double f1_of(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

/// Classic Porter stemming of a single lowercase token.
std::string porter_stem(const std::string& word);

/// Lowercases and splits on runs of non-alphanumeric bytes; optionally stems
/// each token. The split granularity is the compatibility boundary with the
/// reference scorer's tokenizer.
TokenList tokenize(const std::string& text, bool stem);

/// Contiguous n-grams with multiplicity, keyed by the tokens joined with '\x1f'.
/// Empty when the sequence is shorter than n. Throws for n < 1.
std::unordered_map<std::string, std::size_t> ngram_counts(const TokenList& tokens, std::size_t n);

ScoreTriple rouge_n(const std::string& candidate, const std::string& reference, std::size_t n,
                    bool stem);

ScoreTriple rouge_l(const std::string& candidate, const std::string& reference, bool stem);

/// Percentage of target n-gram positions whose n-gram never occurs in any
/// input. Unstemmed tokens. Throws "target_too_short" when the target has
/// fewer than n tokens.
double novel_ngram_pct(const std::string& target, const std::vector<std::string>& inputs,
                       std::size_t n);

// Token-level entry points shared with callers that pre-tokenize.
ScoreTriple rouge_n_tokens(const TokenList& candidate, const TokenList& reference, std::size_t n);
ScoreTriple rouge_l_tokens(const TokenList& candidate, const TokenList& reference);

std::size_t lcs_length(const TokenList& a, const TokenList& b);

std::string join_ngram(const TokenList& tokens, std::size_t start, std::size_t n);

}  // namespace litrev
