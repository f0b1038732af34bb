#include "litrev/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace litrev {

namespace {

// Porter stemmer, following the published algorithm. Operates on a lowercase
// buffer with `k` the index of the last letter and `j` the end of the stem
// set by the most recent suffix match.
class PorterStemmer {
public:
    std::string stem(const std::string& word) {
        b_ = word;
        k_ = static_cast<int>(b_.size()) - 1;
        j_ = 0;
        if (k_ <= 1) return b_;  // short words are left unchanged
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        b_.resize(static_cast<std::size_t>(k_) + 1);
        return b_;
    }

private:
    std::string b_;
    int k_ = 0;
    int j_ = 0;

    bool cons(int i) const {
        switch (b_[static_cast<std::size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !cons(i - 1);
            default: return true;
        }
    }

    // Number of consonant-vowel sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool double_cons(int i) const {
        if (i < 1) return false;
        if (b_[static_cast<std::size_t>(i)] != b_[static_cast<std::size_t>(i) - 1]) return false;
        return cons(i);
    }

    // consonant-vowel-consonant ending where the final consonant is not w/x/y.
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[static_cast<std::size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(const char* s) {
        const int length = static_cast<int>(std::char_traits<char>::length(s));
        if (length > k_ + 1) return false;
        if (b_.compare(static_cast<std::size_t>(k_ - length + 1), static_cast<std::size_t>(length),
                       s) != 0)
            return false;
        j_ = k_ - length;
        return true;
    }

    void set_to(const char* s) {
        const int length = static_cast<int>(std::char_traits<char>::length(s));
        b_.replace(static_cast<std::size_t>(j_) + 1, b_.size(), s);
        k_ = j_ + length;
    }

    void replace_if_m(const char* s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b_[static_cast<std::size_t>(k_)] == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (b_[static_cast<std::size_t>(k_) - 1] != 's') {
                --k_;
            }
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_cons(k_)) {
                --k_;
                const char ch = b_[static_cast<std::size_t>(k_)];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (m() == 1 && cvc(k_)) {
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_) - 1]) {
            case 'a':
                if (ends("ational")) { replace_if_m("ate"); break; }
                if (ends("tional")) { replace_if_m("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m("ence"); break; }
                if (ends("anci")) { replace_if_m("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m("ize"); break; }
                break;
            case 'l':
                if (ends("abli")) { replace_if_m("able"); break; }
                if (ends("alli")) { replace_if_m("al"); break; }
                if (ends("entli")) { replace_if_m("ent"); break; }
                if (ends("eli")) { replace_if_m("e"); break; }
                if (ends("ousli")) { replace_if_m("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m("ize"); break; }
                if (ends("ation")) { replace_if_m("ate"); break; }
                if (ends("ator")) { replace_if_m("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { replace_if_m("al"); break; }
                if (ends("iveness")) { replace_if_m("ive"); break; }
                if (ends("fulness")) { replace_if_m("ful"); break; }
                if (ends("ousness")) { replace_if_m("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m("al"); break; }
                if (ends("iviti")) { replace_if_m("ive"); break; }
                if (ends("biliti")) { replace_if_m("ble"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        switch (b_[static_cast<std::size_t>(k_)]) {
            case 'e':
                if (ends("icate")) { replace_if_m("ic"); break; }
                if (ends("ative")) { replace_if_m(""); break; }
                if (ends("alize")) { replace_if_m("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m("ic"); break; }
                if (ends("ful")) { replace_if_m(""); break; }
                break;
            case 's':
                if (ends("ness")) { replace_if_m(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_) - 1]) {
            case 'a':
                if (ends("al")) break;
                return;
            case 'c':
                if (ends("ance")) break;
                if (ends("ence")) break;
                return;
            case 'e':
                if (ends("er")) break;
                return;
            case 'i':
                if (ends("ic")) break;
                return;
            case 'l':
                if (ends("able")) break;
                if (ends("ible")) break;
                return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 &&
                    (b_[static_cast<std::size_t>(j_)] == 's' ||
                     b_[static_cast<std::size_t>(j_)] == 't'))
                    break;
                if (ends("ou")) break;
                return;
            case 's':
                if (ends("ism")) break;
                return;
            case 't':
                if (ends("ate")) break;
                if (ends("iti")) break;
                return;
            case 'u':
                if (ends("ous")) break;
                return;
            case 'v':
                if (ends("ive")) break;
                return;
            case 'z':
                if (ends("ize")) break;
                return;
            default:
                return;
        }
        if (m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[static_cast<std::size_t>(k_)] == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[static_cast<std::size_t>(k_)] == 'l' && double_cons(k_) && m() > 1) --k_;
    }
};

}  // namespace

std::string porter_stem(const std::string& word) {
    PorterStemmer stemmer;
    return stemmer.stem(word);
}

TokenList tokenize(const std::string& text, bool stem) {
    TokenList tokens;
    std::string current;
    for (const char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    if (stem) {
        for (auto& token : tokens) token = porter_stem(token);
    }
    return tokens;
}

std::string join_ngram(const TokenList& tokens, std::size_t start, std::size_t n) {
    std::string key = tokens[start];
    for (std::size_t i = 1; i < n; ++i) {
        key.push_back('\x1f');
        key += tokens[start + i];
    }
    return key;
}

std::unordered_map<std::string, std::size_t> ngram_counts(const TokenList& tokens, std::size_t n) {
    if (n < 1) throw std::invalid_argument("ngram_counts: n must be >= 1");
    std::unordered_map<std::string, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[join_ngram(tokens, i, n)];
    }
    return counts;
}

ScoreTriple rouge_n_tokens(const TokenList& candidate, const TokenList& reference, std::size_t n) {
    if (candidate.size() < n || reference.size() < n) return {};
    const auto ref_counts = ngram_counts(reference, n);
    auto cand_counts = ngram_counts(candidate, n);
    std::size_t matches = 0;
    for (const auto& [gram, count] : cand_counts) {
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches += std::min(count, it->second);
    }
    const auto cand_total = candidate.size() - n + 1;
    const auto ref_total = reference.size() - n + 1;
    ScoreTriple score;
    score.precision = static_cast<double>(matches) / static_cast<double>(cand_total);
    score.recall = static_cast<double>(matches) / static_cast<double>(ref_total);
    score.f1 = f1_of(score.precision, score.recall);
    return score;
}

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t jj = 1; jj <= b.size(); ++jj) {
            if (a[i - 1] == b[jj - 1]) {
                curr[jj] = prev[jj - 1] + 1;
            } else {
                curr[jj] = std::max(prev[jj], curr[jj - 1]);
            }
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

ScoreTriple rouge_l_tokens(const TokenList& candidate, const TokenList& reference) {
    if (candidate.empty() || reference.empty()) return {};
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    ScoreTriple score;
    score.precision = lcs / static_cast<double>(candidate.size());
    score.recall = lcs / static_cast<double>(reference.size());
    score.f1 = f1_of(score.precision, score.recall);
    return score;
}

ScoreTriple rouge_n(const std::string& candidate, const std::string& reference, std::size_t n,
                    bool stem) {
    return rouge_n_tokens(tokenize(candidate, stem), tokenize(reference, stem), n);
}

ScoreTriple rouge_l(const std::string& candidate, const std::string& reference, bool stem) {
    return rouge_l_tokens(tokenize(candidate, stem), tokenize(reference, stem));
}

double novel_ngram_pct(const std::string& target, const std::vector<std::string>& inputs,
                       std::size_t n) {
    if (n < 1) throw std::invalid_argument("novel_ngram_pct: n must be >= 1");
    const TokenList target_tokens = tokenize(target, false);
    if (target_tokens.size() < n) throw std::runtime_error("target_too_short");
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& input : inputs) {
        for (auto& [gram, count] : ngram_counts(tokenize(input, false), n)) {
            seen[gram] += count;
        }
    }
    const std::size_t total = target_tokens.size() - n + 1;
    std::size_t novel = 0;
    for (std::size_t i = 0; i + n <= target_tokens.size(); ++i) {
        if (!seen.contains(join_ngram(target_tokens, i, n))) ++novel;
    }
    return 100.0 * static_cast<double>(novel) / static_cast<double>(total);
}

}  // namespace litrev
