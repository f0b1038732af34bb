// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier end-to-end runs print their timings.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "litrev/baselines.hpp"
#include "litrev/beam.hpp"
#include "litrev/gradcheck.hpp"
#include "litrev/io.hpp"
#include "litrev/metrics.hpp"
#include "litrev/model.hpp"
#include "litrev/optimizer.hpp"
#include "litrev/pipeline.hpp"
#include "litrev/training.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace litrev;
namespace ts = litrev::testsupport;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw Failure(message);
}

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("litrev_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string command = std::string(LITREV_CLI_PATH) + " " + args;
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

// ---------------------------------------------------------------- 1 -------

void criterion_fusion_invariants() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240001);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::size_t singletons = 0;
    for (int round = 0; round < 1200; ++round) {
        const int n = 1 + static_cast<int>(uniform_below(rng, 16));
        const int d = 1 + static_cast<int>(uniform_below(rng, 64));
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        Vec hq(d);
        for (int i = 0; i < d; ++i) hq(i) = dist(rng) * scale;
        std::vector<Vec> pooled;
        std::vector<double> dots;
        for (int m = 0; m < n; ++m) {
            Vec h(d);
            for (int i = 0; i < d; ++i) h(i) = dist(rng) * scale;
            dots.push_back(h.dot(hq));
            pooled.push_back(std::move(h));
        }
        const auto weights = fusion_weights(pooled, hq);
        require(weights.w.size() == static_cast<std::size_t>(n), "weight count mismatch");
        double sum = 0.0;
        for (const auto w : weights.w) {
            require(w > 1.0 && w <= 2.0, "weight outside (1, 2]");
            sum += w - 1.0;
        }
        require(std::abs(sum - 1.0) < 1e-6, "sum of (w_m - 1) differs from 1");
        if (n == 1) {
            ++singletons;
            require(std::abs(weights.w[0] - 2.0) < 1e-9, "singleton weight not 2");
        }
        const auto argmax_w =
            std::max_element(weights.w.begin(), weights.w.end()) - weights.w.begin();
        const auto argmax_dot = std::max_element(dots.begin(), dots.end()) - dots.begin();
        require(argmax_w == argmax_dot, "argmax weight differs from argmax similarity");
    }
    require(singletons > 0, "no singleton instances drawn");
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    require(elapsed < 10.0, "fusion invariants exceeded 10 s");
}

// ---------------------------------------------------------------- 2 -------

void criterion_grad_check() {
    const auto start = std::chrono::steady_clock::now();
    GradCheckOptions options;
    options.config.d_model = 16;
    options.config.n_heads = 2;
    options.config.n_enc_layers = 2;
    options.config.n_dec_layers = 2;
    options.config.ffn_dim = 32;
    options.config.vocab_size = 32;
    options.config.max_passage_len = 16;
    options.config.max_target_len = 16;
    options.config.mode = FusionMode::qfid;
    options.seed = 7;
    options.coords_per_class = 200;
    options.epsilon = 1e-4;
    const auto report = grad_check(options);
    std::ostringstream detail;
    detail << "max relative error " << report.max_rel_error;
    require(report.max_rel_error < 1e-4, detail.str());
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    require(elapsed < 120.0, "gradient check exceeded 2 min");
}

// ---------------------------------------------------------------- 3 -------

void criterion_fid_qfid_unit_weights() {
    std::mt19937_64 rng(333);
    for (int round = 0; round < 100; ++round) {
        ModelConfig config;
        config.d_model = 16 + 8 * static_cast<int>(uniform_below(rng, 3));
        config.n_heads = 2;
        config.n_enc_layers = 1 + static_cast<int>(uniform_below(rng, 2));
        config.n_dec_layers = 1 + static_cast<int>(uniform_below(rng, 2));
        config.ffn_dim = config.d_model * 2;
        config.vocab_size = 48;
        config.max_passage_len = 24;
        config.max_target_len = 12;
        config.mode = FusionMode::qfid;
        const auto params = ModelParameters::init(config, 1000 + round);

        const auto random_ids = [&](std::size_t length) {
            std::vector<int> ids(length);
            for (auto& id : ids) {
                id = static_cast<int>(
                    Vocabulary::kNumSpecials +
                    uniform_below(rng, static_cast<std::uint64_t>(config.vocab_size) -
                                           Vocabulary::kNumSpecials));
            }
            return ids;
        };
        const auto n = 1 + uniform_below(rng, 4);
        std::vector<SequenceEncoding> encodings;
        for (std::size_t m = 0; m < n; ++m) {
            encodings.push_back(
                encode_sequence(params, random_ids(3 + uniform_below(rng, 6))));
        }
        const auto prefix = random_ids(uniform_below(rng, 5));

        FusionWeights unit;
        unit.w.assign(encodings.size(), 1.0);
        const Vec qfid_dist = fuse_and_decode(params, encodings, unit, prefix);

        ModelParameters fid_params = params;
        fid_params.config.mode = FusionMode::fid;
        const Vec fid_dist = fuse_and_decode(fid_params, encodings, std::nullopt, prefix);

        require((qfid_dist - fid_dist).cwiseAbs().maxCoeff() < 1e-6,
                "fid and unit-weight qfid distributions diverge");
    }
}

// ---------------------------------------------------------------- 4 -------

void criterion_permutation_invariance() {
    std::mt19937_64 rng(4444);
    for (int model_round = 0; model_round < 10; ++model_round) {
        ModelConfig config;
        config.d_model = 32;
        config.n_heads = 4;
        config.n_enc_layers = 2;
        config.n_dec_layers = 2;
        config.ffn_dim = 64;
        config.vocab_size = 64;
        config.max_passage_len = 32;
        config.max_target_len = 16;
        config.mode = FusionMode::qfid;
        const auto params = ModelParameters::init(config, 5000 + model_round);

        const auto random_ids = [&](std::size_t length) {
            std::vector<int> ids(length);
            for (auto& id : ids) {
                id = static_cast<int>(
                    Vocabulary::kNumSpecials +
                    uniform_below(rng, static_cast<std::uint64_t>(config.vocab_size) -
                                           Vocabulary::kNumSpecials));
            }
            return ids;
        };

        EncodedInstance instance;
        instance.query_ids = random_ids(4);
        for (int m = 0; m < 4; ++m) {
            auto passage = instance.query_ids;
            const auto extra = random_ids(4 + uniform_below(rng, 5));
            passage.insert(passage.end(), extra.begin(), extra.end());
            instance.passage_ids.push_back(std::move(passage));
            instance.passage_truncated.push_back(false);
        }
        instance.target_ids = random_ids(4);

        std::vector<std::string> vocab_tokens = {"<pad>", "<bos>", "<eos>",
                                                 "<unk>", "<s>", "</s>"};
        for (int i = 6; i < config.vocab_size; ++i) {
            vocab_tokens.push_back("tok" + std::to_string(i));
        }
        const auto vocab = Vocabulary::from_tokens(vocab_tokens);

        BeamConfig greedy;
        greedy.beam_size = 1;
        greedy.max_len = 12;
        const auto base = generate_beam(params, instance, vocab, greedy);

        for (int perm_round = 0; perm_round < 20; ++perm_round) {
            auto permuted = instance;
            std::vector<std::size_t> order(instance.passage_ids.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            deterministic_shuffle(order, rng);
            for (std::size_t i = 0; i < order.size(); ++i) {
                permuted.passage_ids[i] = instance.passage_ids[order[i]];
            }
            const auto decoded = generate_beam(params, permuted, vocab, greedy);
            require(decoded.token_ids == base.token_ids,
                    "greedy decode changed under passage permutation");
        }
    }
}

// ---------------------------------------------------------------- 5 -------

void criterion_metric_oracles() {
    std::mt19937_64 rng(55555);
    for (int round = 0; round < 1000; ++round) {
        const auto a = ts::random_token_sequence(rng, 30, 8);
        const auto b = ts::random_token_sequence(rng, 30, 8);
        for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
            const auto got = rouge_n_tokens(a, b, n);
            const auto expected = ts::naive_rouge_n(a, b, n);
            require(std::abs(got.precision - expected.precision) <= 1e-9 &&
                        std::abs(got.recall - expected.recall) <= 1e-9 &&
                        std::abs(got.f1 - expected.f1) <= 1e-9,
                    "rouge_n disagrees with the clipped-count oracle");
        }
        require(lcs_length(a, b) == ts::quadratic_lcs(a, b),
                "rouge_l LCS disagrees with the quadratic table");
    }
    const auto triple = rouge_n("the cat sat", "the cat ran", 1, false);
    require(std::abs(triple.precision - 2.0 / 3.0) <= 1e-9 &&
                std::abs(triple.recall - 2.0 / 3.0) <= 1e-9 &&
                std::abs(triple.f1 - 2.0 / 3.0) <= 1e-9,
            "worked unigram example is not 2/3");
}

// ---------------------------------------------------------------- 6 -------

void criterion_extractive_oracles() {
    std::mt19937_64 rng(66666);
    // ext-oracle first pick vs brute force on 50 fixtures
    for (int round = 0; round < 50; ++round) {
        std::vector<std::string> docs;
        const auto n_docs = 1 + uniform_below(rng, 3);
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::string doc;
            const auto n_sents = 2 + uniform_below(rng, 3);
            for (std::size_t s = 0; s < n_sents; ++s) {
                const auto words = ts::random_token_sequence(rng, 8, 6);
                std::string sentence = "Word";
                for (const auto& word : words) sentence += " " + word;
                sentence += ".";
                doc += (s > 0 ? " " : "") + sentence;
            }
            docs.push_back(doc);
        }
        const auto target_words = ts::random_token_sequence(rng, 12, 6);
        std::string target = "Word";
        for (const auto& word : target_words) target += " " + word;
        target += ".";

        const auto sentences = collect_sentences(docs);
        std::size_t best = 0;
        double best_f1 = -1.0;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            const double f1 = rouge_n(sentences[i].text, target, 2, true).f1;
            if (f1 > best_f1) {
                best_f1 = f1;
                best = i;
            }
        }
        require(ext_oracle_first_pick(docs, target) == best,
                "ext-oracle first pick differs from brute force");
    }

    // lexrank: residual below tol and agreement with a dense solve, 20 fixtures
    for (int round = 0; round < 20; ++round) {
        std::vector<std::string> docs;
        const auto n_docs = 1 + uniform_below(rng, 3);
        for (std::size_t d = 0; d < n_docs; ++d) {
            std::string doc;
            const auto n_sents = 1 + uniform_below(rng, 4);
            for (std::size_t s = 0; s < n_sents; ++s) {
                const auto words = ts::random_token_sequence(rng, 6, 5);
                std::string sentence = "Start";
                for (const auto& word : words) sentence += " " + word;
                sentence += ".";
                doc += (s > 0 ? " " : "") + sentence;
            }
            docs.push_back(doc);
        }
        LexRankConfig config;
        config.tol = 1e-10;
        const auto result = lexrank_detailed(docs, config);

        const auto sentences = collect_sentences(docs);
        const auto sim = sentence_similarity_matrix(sentences);
        const std::size_t n = sentences.size();
        std::vector<double> transition(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) row += sim[i * n + j];
            for (std::size_t j = 0; j < n; ++j) {
                transition[i * n + j] =
                    row == 0.0 ? 1.0 / static_cast<double>(n) : sim[i * n + j] / row;
            }
        }
        // fixed-point residual of the returned scores
        double residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += transition[i * n + j] * result.scores[i];
            }
            const double next = config.damping * acc +
                                (1.0 - config.damping) / static_cast<double>(n);
            residual = std::max(residual, std::abs(result.scores[j] - next));
        }
        require(residual < 1e-8, "lexrank stationary residual too large");

        const auto direct = ts::dense_stationary(transition, n, config.damping);
        for (std::size_t i = 0; i < n; ++i) {
            require(std::abs(result.scores[i] - direct[i]) < 1e-6,
                    "lexrank disagrees with the dense stationary solve");
        }
    }
}

// ---------------------------------------------------------------- 7 -------

void criterion_pipeline_fixture() {
    const std::string fixture_dir = LITREV_FIXTURE_DIR;
    const auto out_dir = work_dir("fixture_build");

    BuildDatasetOptions options;
    options.corpus_path = fixture_dir + "/corpus.jsonl";
    options.config_path = fixture_dir + "/pipeline_config.json";
    options.test_ids_path = fixture_dir + "/test_ids.txt";
    options.out_dir = out_dir.string();
    options.seed = 13;
    const auto outcome = run_build_dataset(options);

    const auto expected = nlohmann::json::parse(read_file(fixture_dir + "/expected.json"));
    const auto check_count = [&](const std::string& key, std::size_t got) {
        if (expected.at(key).get<std::size_t>() != got) {
            std::ostringstream message;
            message << key << ": expected " << expected.at(key) << " got " << got;
            throw Failure(message.str());
        }
    };
    check_count("candidates", outcome.candidates);
    check_count("kept_reviews", outcome.kept_reviews);
    check_count("total_chapters", outcome.result.total_chapters);
    check_count("rejected_chapters", outcome.result.rejected_chapters);
    check_count("train_examples", outcome.result.split.train.size());
    check_count("valid_examples", outcome.result.split.valid.size());
    check_count("test_examples_before_dedupe", outcome.result.test_examples_before_dedupe);
    check_count("test_examples", outcome.result.split.test.size());
    check_count("dedupe_removals", outcome.result.removals.size());

    // removal ratios match the hand-derived values
    std::vector<double> ratios;
    for (const auto& removal : outcome.result.removals) ratios.push_back(removal.ratio);
    std::sort(ratios.begin(), ratios.end());
    const auto expected_ratios = expected.at("removal_ratios").get<std::vector<double>>();
    require(ratios.size() == expected_ratios.size(), "removal ratio count");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        require(std::abs(ratios[i] - expected_ratios[i]) < 1e-12, "removal ratio value");
    }

    // post-dedupe leakage: exhaustive check over kept test examples
    const auto records = load_corpus(options.corpus_path);
    std::unordered_map<std::string, const CorpusRecord*> by_id;
    for (const auto& record : records) by_id.emplace(record.paper_id, &record);
    const std::unordered_set<std::string> train_reviews(
        outcome.result.split.train_provenance.begin(),
        outcome.result.split.train_provenance.end());
    require(!train_reviews.empty(), "no train reviews");
    for (const auto& cited : outcome.result.test_cited_ids) {
        require(!cited.empty(), "test example with no cited papers");
        for (const auto& train_id : train_reviews) {
            const auto& outbound = by_id.at(train_id)->outbound_citations;
            const std::unordered_set<std::string> outbound_set(outbound.begin(),
                                                               outbound.end());
            std::size_t shared = 0;
            for (const auto& id : cited) shared += outbound_set.contains(id) ? 1 : 0;
            const double ratio =
                static_cast<double>(shared) / static_cast<double>(cited.size());
            require(ratio <= 0.20 + 1e-12, "leakage check found a violation");
        }
    }

    // statistics match the independently computed values exactly
    const auto rows = compute_stats(outcome.result.split);
    const auto check_stats = [&](const StatsRow& row, const nlohmann::json& want) {
        require(row.n_train == want.at("n_train").get<std::size_t>(), row.view + " n_train");
        require(row.n_valid == want.at("n_valid").get<std::size_t>(), row.view + " n_valid");
        require(row.n_test == want.at("n_test").get<std::size_t>(), row.view + " n_test");
        const auto near = [&](double got, const char* key) {
            if (std::abs(got - want.at(key).get<double>()) > 1e-9) {
                std::ostringstream message;
                message << row.view << " " << key << ": expected " << want.at(key)
                        << " got " << got;
                throw Failure(message.str());
            }
        };
        near(row.input_len, "input_len");
        near(row.target_len, "target_len");
        near(row.n_inputs, "n_inputs");
        near(row.novel_ngram_pct[0], "novel_1");
        near(row.novel_ngram_pct[1], "novel_2");
        near(row.novel_ngram_pct[2], "novel_3");
        near(row.novel_ngram_pct[3], "novel_4");
    };
    require(rows.size() == 2, "expected two stats rows");
    check_stats(rows[0], expected.at("review_stats"));
    check_stats(rows[1], expected.at("chapter_stats"));
}

// ---------------------------------------------------------------- 8 -------

void criterion_miniature_end_to_end() {
    const auto dir = work_dir("synth");
    ts::SynthOptions synth_options;  // ~2k examples, vocabulary well under 500
    const auto dataset = ts::make_query_salience_dataset(synth_options);
    ts::write_synth_dataset(dir.string(), dataset);

    RunConfig config;
    config.system = "qfid";
    config.dataset_dir = dir.string();
    config.output_dir = (dir / "run").string();
    config.epochs = 20;
    config.batch_size = 8;
    config.seed = 17;
    config.validation_sample = 100;
    config.model.d_model = 64;
    config.model.n_heads = 4;
    config.model.n_enc_layers = 2;
    config.model.n_dec_layers = 2;
    config.model.ffn_dim = 128;
    config.model.vocab_size = 500;
    config.model.max_passage_len = 64;
    config.model.max_target_len = 24;
    config.optimizer.learning_rate = 1e-3;
    config.beam.beam_size = 4;
    config.beam.max_len = 16;

    const auto train_start = std::chrono::steady_clock::now();
    const auto result = run_training(config);
    const auto train_elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - train_start)
                                   .count();
    std::cout << "  [training " << train_elapsed << " s, best epoch " << result.best_epoch
              << ", val rouge2 " << result.best_val_rouge2 << "]" << std::endl;
    require(!result.aborted, "training aborted on non-finite loss");
    require(train_elapsed < 900.0, "training exceeded the 15 minute budget");

    EvaluateOptions qfid_eval;
    qfid_eval.system = "qfid";
    qfid_eval.dataset_path = (dir / "test.jsonl").string();
    qfid_eval.checkpoint_path = result.checkpoint_path;
    qfid_eval.beam = config.beam;
    const auto qfid_report = evaluate_file(qfid_eval);

    EvaluateOptions lead_eval;
    lead_eval.system = "lead";
    lead_eval.dataset_path = (dir / "test.jsonl").string();
    lead_eval.lead_k = 1;
    const auto lead_report = evaluate_file(lead_eval);

    std::cout << "  [test rouge2 f1: qfid " << qfid_report.means.r2.f1 << " vs lead "
              << lead_report.means.r2.f1 << "]" << std::endl;
    require(qfid_report.means.r2.f1 >= lead_report.means.r2.f1 + 0.05,
            "qfid does not beat lead-1 by 5 points");

    // single-batch overfit: loss below 0.05 within 500 steps
    const Checkpoint checkpoint = load_checkpoint(result.checkpoint_path);
    ModelConfig overfit_config = checkpoint.params.config;
    auto params = ModelParameters::init(overfit_config, 23);
    std::vector<EncodedInstance> batch;
    for (std::size_t i = 0; i < 4; ++i) {
        batch.push_back(encode_instance(dataset.train[i], checkpoint.vocab, overfit_config));
    }
    ModelParameters grads = ModelParameters::zeros_like(params);
    auto state = AdamWState::init(params);
    AdamWConfig optimizer;
    optimizer.learning_rate = 3e-3;
    double loss = std::numeric_limits<double>::infinity();
    int steps = 0;
    for (; steps < 500; ++steps) {
        loss = loss_and_gradients(params, batch, grads);
        if (loss < 0.05) break;
        adamw_step(params, grads, state, optimizer);
    }
    std::cout << "  [overfit loss " << loss << " after " << steps << " steps]" << std::endl;
    require(loss < 0.05, "single-batch overfit did not reach loss < 0.05");
}

// ---------------------------------------------------------------- 9 -------

void criterion_determinism() {
    const std::string fixture_dir = LITREV_FIXTURE_DIR;
    const auto base = work_dir("determinism");

    const auto same_file = [](const fs::path& a, const fs::path& b) {
        return read_file(a.string()) == read_file(b.string());
    };

    // build-dataset twice
    const auto build_a = base / "build_a";
    const auto build_b = base / "build_b";
    for (const auto& out : {build_a, build_b}) {
        fs::create_directories(out);
        require(run_cli("build-dataset --corpus " + fixture_dir + "/corpus.jsonl --config " +
                        fixture_dir + "/pipeline_config.json --test-ids " + fixture_dir +
                        "/test_ids.txt --seed 7 --out " + out.string() + " > /dev/null") == 0,
                "build-dataset failed");
    }
    for (const auto* name : {"train.jsonl", "valid.jsonl", "test.jsonl", "removals.jsonl",
                             "stats.tsv", "build_report.json"}) {
        require(same_file(build_a / name, build_b / name),
                std::string("build-dataset output differs: ") + name);
    }

    // stats twice
    for (const auto* name : {"stats_a.tsv", "stats_b.tsv"}) {
        require(run_cli("stats --data " + build_a.string() + " --out " +
                        (base / name).string()) == 0,
                "stats failed");
    }
    require(same_file(base / "stats_a.tsv", base / "stats_b.tsv"), "stats output differs");

    // baseline twice (lexrank exercises the iterative path)
    for (const auto* name : {"baseline_a.txt", "baseline_b.txt"}) {
        require(run_cli("baseline --method lexrank --dataset " +
                        (build_a / "train.jsonl").string() + " --l 2 --out " +
                        (base / name).string() + " > /dev/null") == 0,
                "baseline failed");
    }
    require(same_file(base / "baseline_a.txt", base / "baseline_b.txt"),
            "baseline output differs");

    // score twice
    for (const auto* name : {"score_a.tsv", "score_b.tsv"}) {
        require(run_cli("score --candidates " + (base / "baseline_a.txt").string() +
                        " --references " + (base / "baseline_b.txt").string() + " --out " +
                        (base / name).string()) == 0,
                "score failed");
    }
    require(same_file(base / "score_a.tsv", base / "score_b.tsv"), "score output differs");

    // train twice on a small synthetic dataset
    ts::SynthOptions tiny;
    tiny.n_train = 12;
    tiny.n_valid = 6;
    tiny.n_test = 4;
    tiny.n_topics = 8;
    tiny.n_fillers = 30;
    tiny.seed = 99;
    const auto tiny_dir = base / "tiny_data";
    fs::create_directories(tiny_dir);
    ts::write_synth_dataset(tiny_dir.string(), ts::make_query_salience_dataset(tiny));
    const nlohmann::json train_config = {
        {"system", "qfid"},
        {"dataset_dir", tiny_dir.string()},
        {"epochs", 2},
        {"batch_size", 4},
        {"seed", 3},
        {"validation_sample", 6},
        {"model",
         {{"d_model", 16},
          {"n_heads", 2},
          {"n_enc_layers", 1},
          {"n_dec_layers", 1},
          {"ffn_dim", 32},
          {"vocab_size", 300},
          {"max_passage_len", 64},
          {"max_target_len", 24}}},
        {"optimizer", {{"learning_rate", 1e-3}}},
        {"beam", {{"beam_size", 1}, {"max_len", 12}}},
    };
    atomic_write_file((base / "train_config.json").string(), train_config.dump(2));
    const auto run_a = base / "train_a";
    const auto run_b = base / "train_b";
    for (const auto& out : {run_a, run_b}) {
        require(run_cli("train --config " + (base / "train_config.json").string() +
                        " --out " + out.string() + " > /dev/null") == 0,
                "train failed");
    }
    require(same_file(run_a / "history.tsv", run_b / "history.tsv"),
            "training history differs");
    require(same_file(run_a / "checkpoint.bin", run_b / "checkpoint.bin"),
            "checkpoint bytes differ");

    // generate twice
    for (const auto* name : {"gen_a.txt", "gen_b.txt"}) {
        require(run_cli("generate --checkpoint " + (run_a / "checkpoint.bin").string() +
                        " --dataset " + (tiny_dir / "test.jsonl").string() +
                        " --beam-size 4 --max-len 12 --out " + (base / name).string() +
                        " > /dev/null") == 0,
                "generate failed");
    }
    require(same_file(base / "gen_a.txt", base / "gen_b.txt"), "generate output differs");

    // evaluate twice
    for (const auto* name : {"eval_a.tsv", "eval_b.tsv"}) {
        require(run_cli("evaluate --system lead --dataset " +
                        (build_a / "train.jsonl").string() + " --out " +
                        (base / name).string()) == 0,
                "evaluate failed");
    }
    require(same_file(base / "eval_a.tsv", base / "eval_b.tsv"), "evaluate output differs");

    // gradcheck twice
    for (const auto* name : {"gc_a.tsv", "gc_b.tsv"}) {
        require(run_cli("gradcheck --dmodel 16 --seed 7 --coords 50 --out " +
                        (base / name).string() + " > /dev/null") == 0,
                "gradcheck failed");
    }
    require(same_file(base / "gc_a.tsv", base / "gc_b.tsv"), "gradcheck output differs");
}

struct Criterion {
    int id;
    std::string name;
    std::function<void()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "fusion-weight invariants", criterion_fusion_invariants},
        {2, "gradient check", criterion_grad_check},
        {3, "fid equals qfid at unit weights", criterion_fid_qfid_unit_weights},
        {4, "passage-permutation invariance", criterion_permutation_invariance},
        {5, "metric oracle equivalence", criterion_metric_oracles},
        {6, "extractive baseline oracles", criterion_extractive_oracles},
        {7, "pipeline fixture", criterion_pipeline_fixture},
        {8, "miniature end-to-end", criterion_miniature_end_to_end},
        {9, "subcommand determinism", criterion_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool passed = true;
        try {
            criterion.run();
        } catch (const std::exception& error) {
            passed = false;
            detail = error.what();
        }
        const auto elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (passed ? "PASS" : "FAIL") << " criterion " << criterion.id << " ("
                  << criterion.name << ") [" << elapsed << " s]";
        if (!detail.empty()) std::cout << ": " << detail;
        std::cout << std::endl;
        failures += passed ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
