#include "litrev/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "litrev/metrics.hpp"

namespace litrev {

namespace {

const std::vector<std::string>& abbreviation_guards() {
    static const std::vector<std::string> guards = {
        "et al.", "e.g.", "i.e.", "fig.", "figs.", "eq.", "eqs.", "sec.", "secs.",
        "ref.", "refs.", "cf.", "vs.", "resp.", "no.", "vol.", "dr.", "mr.", "ms.",
    };
    return guards;
}

bool guarded_abbreviation(const std::string& text, std::size_t period_pos) {
    for (const auto& guard : abbreviation_guards()) {
        const std::size_t len = guard.size();
        if (period_pos + 1 < len) continue;
        const std::size_t start = period_pos + 1 - len;
        bool match = true;
        for (std::size_t i = 0; i < len; ++i) {
            if (static_cast<char>(std::tolower(
                    static_cast<unsigned char>(text[start + i]))) != guard[i]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        // Word boundary so e.g. "config." does not match "fig.".
        if (start == 0 || !std::isalnum(static_cast<unsigned char>(text[start - 1]))) {
            return true;
        }
    }
    return false;
}

std::string trimmed(const std::string& text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.' && guarded_abbreviation(text, i)) continue;
        std::size_t next = i + 1;
        if (next >= text.size() || !std::isspace(static_cast<unsigned char>(text[next]))) continue;
        while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
        if (next >= text.size()) continue;
        const auto follower = static_cast<unsigned char>(text[next]);
        if (!std::isupper(follower) && !std::isdigit(follower)) continue;
        const std::string sentence = trimmed(text.substr(start, i + 1 - start));
        if (!sentence.empty()) sentences.push_back(sentence);
        start = next;
        i = next - 1;
    }
    const std::string tail = trimmed(text.substr(start));
    if (!tail.empty()) sentences.push_back(tail);
    return sentences;
}

std::vector<Sentence> collect_sentences(const std::vector<std::string>& docs) {
    std::vector<Sentence> sentences;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto split = split_sentences(docs[d]);
        for (std::size_t s = 0; s < split.size(); ++s) {
            sentences.push_back({d, s, split[s]});
        }
    }
    return sentences;
}

std::string lead_k(const std::vector<std::string>& docs, std::size_t k) {
    if (docs.empty()) throw std::runtime_error("no_inputs");
    if (k < 1) throw std::invalid_argument("lead_k: k must be >= 1");
    std::string summary;
    for (const auto& doc : docs) {
        const auto sentences = split_sentences(doc);
        const std::size_t take = std::min(k, sentences.size());
        for (std::size_t i = 0; i < take; ++i) {
            if (!summary.empty()) summary += ' ';
            summary += sentences[i];
        }
    }
    return summary;
}

std::vector<double> sentence_similarity_matrix(const std::vector<Sentence>& sentences) {
    const std::size_t n = sentences.size();
    std::vector<std::map<std::string, double>> vectors(n);
    std::map<std::string, std::size_t> df;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& token : tokenize(sentences[i].text, false)) {
            vectors[i][token] += 1.0;
        }
        for (const auto& kv : vectors[i]) ++df[kv.first];
    }
    for (auto& vec : vectors) {
        for (auto& [token, tf] : vec) {
            const double idf = std::log(static_cast<double>(n + 1) /
                                        static_cast<double>(df.at(token) + 1));
            tf *= idf;
        }
    }
    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& kv : vectors[i]) sum += kv.second * kv.second;
        norms[i] = std::sqrt(sum);
    }
    std::vector<double> sim(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            if (norms[i] == 0.0 || norms[j] == 0.0) continue;
            double dot = 0.0;
            auto a = vectors[i].cbegin();
            auto b = vectors[j].cbegin();
            while (a != vectors[i].cend() && b != vectors[j].cend()) {
                if (a->first < b->first) {
                    ++a;
                } else if (b->first < a->first) {
                    ++b;
                } else {
                    dot += a->second * b->second;
                    ++a;
                    ++b;
                }
            }
            const double value = dot / (norms[i] * norms[j]);
            sim[i * n + j] = value;
            sim[j * n + i] = value;
        }
    }
    return sim;
}

LexRankResult lexrank_detailed(const std::vector<std::string>& docs,
                               const LexRankConfig& config) {
    if (config.damping <= 0.0 || config.damping >= 1.0) {
        throw std::invalid_argument("lexrank: damping must be in (0,1)");
    }
    if (config.tol <= 0.0) throw std::invalid_argument("lexrank: tol must be positive");
    const auto sentences = collect_sentences(docs);
    const std::size_t n = sentences.size();
    if (n == 0) throw std::runtime_error("no_inputs");

    const auto sim = sentence_similarity_matrix(sentences);
    // Row-stochastic transition matrix; all-zero rows become uniform.
    std::vector<double> transition(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += sim[i * n + j];
        if (row_sum == 0.0) {
            for (std::size_t j = 0; j < n; ++j) transition[i * n + j] = 1.0 / static_cast<double>(n);
        } else {
            for (std::size_t j = 0; j < n; ++j) transition[i * n + j] = sim[i * n + j] / row_sum;
        }
    }

    const double teleport = (1.0 - config.damping) / static_cast<double>(n);
    std::vector<double> scores(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);
    double residual = 0.0;
    bool converged = false;
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += transition[i * n + j] * scores[i];
            next[j] = config.damping * acc + teleport;
        }
        residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            residual = std::max(residual, std::abs(next[j] - scores[j]));
        }
        if (residual < config.tol) {
            converged = true;
            break;
        }
        std::swap(scores, next);
    }
    if (!converged) {
        std::ostringstream message;
        message << "lexrank: power iteration did not converge; residual=" << residual;
        throw std::runtime_error(message.str());
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    std::vector<std::size_t> selected(order.begin(),
                                      order.begin() + static_cast<long>(std::min(config.l, n)));
    std::sort(selected.begin(), selected.end());

    LexRankResult result;
    result.scores = scores;
    result.selected = selected;
    for (const auto idx : selected) {
        if (!result.summary.empty()) result.summary += ' ';
        result.summary += sentences[idx].text;
    }
    return result;
}

std::string lexrank(const std::vector<std::string>& docs, const LexRankConfig& config) {
    return lexrank_detailed(docs, config).summary;
}

namespace {

double rouge2_f1_of_tokens(const TokenList& candidate, const TokenList& target) {
    return rouge_n_tokens(candidate, target, 2).f1;
}

}  // namespace

std::size_t ext_oracle_first_pick(const std::vector<std::string>& docs,
                                  const std::string& target) {
    const auto sentences = collect_sentences(docs);
    if (sentences.empty()) throw std::runtime_error("no_inputs");
    const TokenList target_tokens = tokenize(target, true);
    std::size_t best = 0;
    double best_f1 = -1.0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const double f1 = rouge2_f1_of_tokens(tokenize(sentences[i].text, true), target_tokens);
        if (f1 > best_f1) {
            best_f1 = f1;
            best = i;
        }
    }
    return best;
}

std::string ext_oracle(const std::vector<std::string>& docs, const std::string& target,
                       std::size_t l) {
    if (target.empty()) throw std::invalid_argument("ext_oracle: target must be non-empty");
    if (l < 1) throw std::invalid_argument("ext_oracle: l must be >= 1");
    const auto sentences = collect_sentences(docs);
    const std::size_t n = sentences.size();
    if (n == 0) throw std::runtime_error("no_inputs");

    std::vector<TokenList> tokens(n);
    for (std::size_t i = 0; i < n; ++i) tokens[i] = tokenize(sentences[i].text, true);
    const TokenList target_tokens = tokenize(target, true);

    std::vector<bool> chosen(n, false);
    std::size_t n_chosen = 0;
    double current_f1 = 0.0;
    const std::size_t limit = std::min(l, n);
    while (n_chosen < limit) {
        double best_f1 = -1.0;
        std::size_t best_idx = n;
        bool all_zero_gain = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            TokenList merged;
            for (std::size_t j = 0; j < n; ++j) {
                if (chosen[j] || j == i) {
                    merged.insert(merged.end(), tokens[j].begin(), tokens[j].end());
                }
            }
            const double f1 = rouge2_f1_of_tokens(merged, target_tokens);
            if (f1 - current_f1 != 0.0) all_zero_gain = false;
            if (f1 > best_f1) {
                best_f1 = f1;
                best_idx = i;
            }
        }
        if (best_f1 - current_f1 > 0.0) {
            chosen[best_idx] = true;
            current_f1 = best_f1;
            ++n_chosen;
        } else if (all_zero_gain) {
            // Nothing moves the score; fill to l by earliest index.
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    chosen[i] = true;
                    ++n_chosen;
                    break;
                }
            }
        } else {
            break;
        }
    }

    std::string summary;
    for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) continue;
        if (!summary.empty()) summary += ' ';
        summary += sentences[i].text;
    }
    return summary;
}

}  // namespace litrev
