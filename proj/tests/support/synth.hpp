#pragma once

// Deterministic synthetic query-salience dataset: every passage carries a
// topic-keyed sentence, the query names one topic, and the target is the
// matching passage's keyed sentence copied verbatim. Lead-style baselines
// only see the filler sentences, so query-conditioned models can beat them.

#include <cstdint>
#include <string>
#include <vector>

#include "litrev/corpus.hpp"

namespace litrev::testsupport {

struct SynthOptions {
    std::size_t n_train = 1800;
    std::size_t n_valid = 100;
    std::size_t n_test = 100;
    std::size_t n_topics = 40;
    std::size_t n_fillers = 180;
    std::size_t min_passages = 2;
    std::size_t max_passages = 4;
    // Each topic draws its keyed sentence from a fixed pool of this size.
    std::size_t sentences_per_topic = 2;
    std::uint64_t seed = 5;
};

struct SynthDataset {
    std::vector<ChapterExample> train, valid, test;
    std::vector<std::string> train_provenance, valid_provenance, test_provenance;
};

SynthDataset make_query_salience_dataset(const SynthOptions& options);

/// Writes train/valid/test.jsonl into the directory.
void write_synth_dataset(const std::string& dir, const SynthDataset& dataset);

}  // namespace litrev::testsupport
