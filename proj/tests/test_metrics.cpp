#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "litrev/metrics.hpp"
#include "oracles.hpp"

using namespace litrev;
namespace ts = litrev::testsupport;

TEST_CASE("tokenize splits on non-alphanumeric runs and lowercases") {
    CHECK(tokenize("The cat, sat!", false) == TokenList{"the", "cat", "sat"});
    CHECK(tokenize("", false).empty());
    CHECK(tokenize("  \t\n ", false).empty());
    CHECK(tokenize("a1-b2_c3", false) == TokenList{"a1", "b2", "c3"});
    CHECK(tokenize("Don't stop", false) == TokenList{"don", "t", "stop"});
}

TEST_CASE("tokenize with stemming") {
    CHECK(tokenize("running runs", true) == TokenList{"run", "run"});
    CHECK(tokenize("Summarization summaries", true) == tokenize("summarization summaries", true));
}

TEST_CASE("porter stemmer frozen reference pairs") {
    // Full-pipeline outputs, cross-checked against an independent
    // implementation of the same published rule tables.
    const std::vector<std::pair<std::string, std::string>> pairs = {
        {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},
        {"caress", "caress"},   {"cats", "cat"},        {"feed", "feed"},
        {"agreed", "agre"},     {"bled", "bled"},       {"motoring", "motor"},
        {"sing", "sing"},       {"sized", "size"},      {"hopping", "hop"},
        {"tanned", "tan"},      {"falling", "fall"},    {"hissing", "hiss"},
        {"fizzed", "fizz"},     {"failing", "fail"},    {"filing", "file"},
        {"happy", "happi"},     {"sky", "sky"},         {"dies", "di"},
        {"flies", "fli"},       {"mules", "mule"},      {"denied", "deni"},
        {"owned", "own"},       {"humbled", "humbl"},   {"university", "univers"},
        {"electricity", "electr"}, {"electrical", "electr"}, {"running", "run"},
        {"runs", "run"},        {"run", "run"},         {"controlling", "control"},
        {"rolled", "roll"},     {"generalization", "gener"}, {"operational", "oper"},
        {"rate", "rate"},       {"cease", "ceas"},      {"as", "as"},
        {"be", "be"},           {"summarization", "summar"}, {"evaluated", "evalu"},
        {"transformers", "transform"}, {"effectiveness", "effect"},
    };
    for (const auto& [word, stem] : pairs) {
        CAPTURE(word);
        CHECK(porter_stem(word) == stem);
    }
}

TEST_CASE("ngram_counts basics") {
    CHECK(ngram_counts({"a", "b", "a"}, 1) ==
          std::unordered_map<std::string, std::size_t>{{"a", 2}, {"b", 1}});
    const auto bigrams = ngram_counts({"a", "b", "a"}, 2);
    CHECK(bigrams.size() == 2);
    CHECK(bigrams.at(join_ngram({"a", "b"}, 0, 2)) == 1);
    CHECK(bigrams.at(join_ngram({"b", "a"}, 0, 2)) == 1);
    CHECK(ngram_counts({"a"}, 2).empty());
    CHECK_THROWS(ngram_counts({"a"}, 0));
}

TEST_CASE("rouge_n examples") {
    const auto identical = rouge_n("the cat sat", "the cat sat", 1, false);
    CHECK(identical.precision == doctest::Approx(1.0));
    CHECK(identical.recall == doctest::Approx(1.0));
    CHECK(identical.f1 == doctest::Approx(1.0));

    const auto two_thirds = rouge_n("the cat sat", "the cat ran", 1, false);
    CHECK(two_thirds.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(two_thirds.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(two_thirds.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto disjoint = rouge_n("alpha beta", "gamma delta", 1, false);
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.recall == 0.0);
    CHECK(disjoint.f1 == 0.0);

    // Clipping: repeated candidate tokens only match as often as the
    // reference provides them.
    const auto clipped = rouge_n("a a a", "a b", 1, false);
    CHECK(clipped.precision == doctest::Approx(1.0 / 3.0));
    CHECK(clipped.recall == doctest::Approx(0.5));
}

TEST_CASE("rouge_l examples") {
    const auto swapped = rouge_l("a b c d", "a c b d", false);
    CHECK(swapped.precision == doctest::Approx(0.75));
    CHECK(swapped.recall == doctest::Approx(0.75));
    CHECK(swapped.f1 == doctest::Approx(0.75));

    CHECK(rouge_l("same text here", "same text here", false).f1 == doctest::Approx(1.0));
    CHECK(rouge_l("", "anything", false).f1 == 0.0);
    CHECK(rouge_l("anything", "", false).f1 == 0.0);
}

TEST_CASE("rouge symmetry and bounds on random pairs") {
    std::mt19937_64 rng(41);
    for (int round = 0; round < 300; ++round) {
        const auto a = ts::join_tokens(ts::random_token_sequence(rng, 20, 6));
        const auto b = ts::join_tokens(ts::random_token_sequence(rng, 20, 6));
        for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
            const auto ab = rouge_n(a, b, n, false);
            const auto ba = rouge_n(b, a, n, false);
            CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
            CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
            CHECK(ab.f1 <= std::max(ab.precision, ab.recall) + 1e-12);
            CHECK(ab.precision >= 0.0);
            CHECK(ab.precision <= 1.0);
        }
        const auto lab = rouge_l(a, b, false);
        const auto lba = rouge_l(b, a, false);
        CHECK(lab.f1 == doctest::Approx(lba.f1).epsilon(1e-12));
    }
}

TEST_CASE("rouge matches naive oracles on random token sequences") {
    std::mt19937_64 rng(1234);
    for (int round = 0; round < 1000; ++round) {
        const auto a = ts::random_token_sequence(rng, 30, 8);
        const auto b = ts::random_token_sequence(rng, 30, 8);
        for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
            const auto got = rouge_n_tokens(a, b, n);
            const auto expected = ts::naive_rouge_n(a, b, n);
            CHECK(std::abs(got.precision - expected.precision) <= 1e-9);
            CHECK(std::abs(got.recall - expected.recall) <= 1e-9);
            CHECK(std::abs(got.f1 - expected.f1) <= 1e-9);
        }
        CHECK(lcs_length(a, b) == ts::quadratic_lcs(a, b));
    }
}

TEST_CASE("novel_ngram_pct") {
    CHECK(novel_ngram_pct("the cat sat", {"the cat sat on the mat"}, 1) == doctest::Approx(0.0));
    CHECK(novel_ngram_pct("the cat sat", {"the cat sat on the mat"}, 2) == doctest::Approx(0.0));
    CHECK(novel_ngram_pct("alpha beta", {"gamma delta"}, 1) == doctest::Approx(100.0));
    // target [a, b, c]; inputs contain bigram (a, b) only -> bigram novelty 50%
    CHECK(novel_ngram_pct("a b c", {"a b"}, 2) == doctest::Approx(50.0));
    CHECK_THROWS_WITH_AS(novel_ngram_pct("a", {"a b"}, 2), "target_too_short",
                         std::runtime_error);
    // duplicated target n-grams count per position
    CHECK(novel_ngram_pct("x x y", {"x"}, 1) == doctest::Approx(100.0 / 3.0));
}
