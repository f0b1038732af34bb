#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "litrev/baselines.hpp"
#include "litrev/beam.hpp"
#include "litrev/checkpoint.hpp"
#include "litrev/corpus.hpp"
#include "litrev/metrics.hpp"
#include "litrev/model.hpp"
#include "litrev/optimizer.hpp"

namespace litrev {

struct RunConfig {
    std::string system = "qfid";  // lead | lexrank | oracle | fid | qfid
    std::string dataset_dir;
    std::string output_dir;
    int epochs = 10;
    int batch_size = 8;
    std::uint64_t seed = 0;
    std::size_t validation_sample = 1000;
    ModelConfig model;
    AdamWConfig optimizer;
    BeamConfig beam;
    std::size_t lead_k = 1;
    std::size_t extract_l = 5;
    LexRankConfig lexrank;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
    std::string canonical_json() const;
    std::string fingerprint() const;  // content digest of the canonical form
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_rouge2 = 0.0;
};

struct TrainingResult {
    int best_epoch = 0;
    double best_val_rouge2 = 0.0;
    std::vector<EpochRecord> history;
    bool aborted = false;  // non-finite loss; best checkpoint so far retained
    std::string checkpoint_path;
    std::string history_path;
};

/// Trains for config.epochs, greedy-decoding a fixed seeded validation sample
/// after each epoch and keeping the checkpoint with the best validation
/// ROUGE-2 F1 (ties resolve to the earlier epoch).
TrainingResult run_training(const RunConfig& config);

std::string history_tsv(const TrainingResult& result, const std::string& fingerprint,
                        const std::string& system);

struct EvalRow {
    ScoreTriple r1, r2, rl;
};

struct EvalReport {
    std::string system;
    std::string fingerprint;
    std::vector<EvalRow> rows;
    EvalRow means;
    std::vector<std::string> predictions;
};

struct EvaluateOptions {
    std::string system;            // lead | lexrank | oracle | fid | qfid
    std::string dataset_path;      // one dataset split file
    std::string checkpoint_path;   // neural systems only
    std::string predictions_path;  // score pre-generated predictions instead
    std::size_t lead_k = 1;
    std::size_t extract_l = 5;
    LexRankConfig lexrank;
    BeamConfig beam;
};

/// Generates (or loads) one summary per example and scores it against the
/// target with stemmed ROUGE-1/2/L. Means are arithmetic means of the
/// per-example triples.
EvalReport evaluate_file(const EvaluateOptions& options);

std::string eval_report_tsv(const EvalReport& report);

/// Extractive summary for one example; inputs are abstracts only.
std::string baseline_summary(const std::string& method, const ChapterExample& example,
                             std::size_t lead_k, std::size_t extract_l,
                             const LexRankConfig& lexrank_config);

std::vector<std::string> generate_predictions(const Checkpoint& checkpoint,
                                              const std::vector<ChapterExample>& examples,
                                              const BeamConfig& beam);

/// Single-line form for line-aligned prediction files.
std::string flatten_line(const std::string& text);

}  // namespace litrev
