#include "litrev/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace litrev {

std::vector<std::string> Vocabulary::model_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&]() {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c == '<') {
            if (text.compare(i, 3, "<s>") == 0) {
                flush();
                tokens.emplace_back("<s>");
                i += 2;
                continue;
            }
            if (text.compare(i, 4, "</s>") == 0) {
                flush();
                tokens.emplace_back("</s>");
                i += 3;
                continue;
            }
        }
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t size) {
    if (size < 8) throw std::invalid_argument("vocabulary size must be >= 8");
    if (texts.empty()) throw std::runtime_error("vocabulary: empty corpus");
    std::map<std::string, std::size_t> counts;  // sorted keys give the tie order
    for (const auto& text : texts) {
        for (const auto& token : model_tokenize(text)) {
            if (token == "<s>" || token == "</s>") continue;
            ++counts[token];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>", "<s>", "</s>"};
    for (const auto& [token, count] : ranked) {
        if (tokens.size() >= size) break;
        tokens.push_back(token);
    }
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < kNumSpecials) {
        throw std::invalid_argument("vocabulary: token list is missing specials");
    }
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        vocab.index_.emplace(vocab.tokens_[i], static_cast<int>(i));
    }
    return vocab;
}

int Vocabulary::id_of(const std::string& token) const {
    const auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    return tokens_.at(static_cast<std::size_t>(id));
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& token : model_tokenize(text)) {
        ids.push_back(id_of(token));
    }
    return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::string out;
    for (const int id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        if (!out.empty()) out += ' ';
        out += token_of(id);
    }
    return out;
}

}  // namespace litrev
