#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace litrev {

/// Word-level vocabulary with reserved specials. Content tokens are ranked by
/// corpus frequency with lexicographic tie-breaking, so construction is
/// deterministic.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;
    static constexpr int kSep = 4;     // "<s>"
    static constexpr int kDocSep = 5;  // "</s>"
    static constexpr std::size_t kNumSpecials = 6;

    /// Builds from corpus texts; size must be >= 8 and the corpus non-empty.
    static Vocabulary build(const std::vector<std::string>& texts, std::size_t size);
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    int id_of(const std::string& token) const;
    const std::string& token_of(int id) const;
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<int> encode(const std::string& text) const;
    /// Joins tokens with spaces, skipping pad/bos/eos.
    std::string decode(const std::vector<int>& ids) const;

    /// Splits on whitespace-delimited "<s>"/"</s>" literals and lowercase
    /// alphanumeric runs; everything else separates tokens.
    static std::vector<std::string> model_tokenize(const std::string& text);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace litrev
