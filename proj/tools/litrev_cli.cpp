// Command-line surface for the literature review generation toolkit:
// dataset construction, extractive baselines, model training/generation,
// and ROUGE evaluation.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "litrev/baselines.hpp"
#include "litrev/beam.hpp"
#include "litrev/checkpoint.hpp"
#include "litrev/gradcheck.hpp"
#include "litrev/io.hpp"
#include "litrev/metrics.hpp"
#include "litrev/pipeline.hpp"
#include "litrev/training.hpp"

namespace {

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("LITREV_OUT_DIR")) return env;
    return ".";
}

int run_build_dataset_cmd(const litrev::BuildDatasetOptions& options) {
    const auto outcome = litrev::run_build_dataset(options);
    std::cout << "candidates\t" << outcome.candidates << '\n'
              << "kept_reviews\t" << outcome.kept_reviews << '\n'
              << "total_chapters\t" << outcome.result.total_chapters << '\n'
              << "rejected_chapters\t" << outcome.result.rejected_chapters << '\n'
              << "train_examples\t" << outcome.result.split.train.size() << '\n'
              << "valid_examples\t" << outcome.result.split.valid.size() << '\n'
              << "test_examples\t" << outcome.result.split.test.size() << '\n'
              << "dedupe_removals\t" << outcome.result.removals.size() << '\n';
    return 0;
}

int run_stats_cmd(const std::string& data_dir, const std::string& out_path) {
    litrev::DatasetSplit split;
    std::tie(split.train, split.train_provenance) =
        litrev::load_dataset_file(data_dir + "/train.jsonl");
    std::tie(split.valid, split.valid_provenance) =
        litrev::load_dataset_file(data_dir + "/valid.jsonl");
    std::tie(split.test, split.test_provenance) =
        litrev::load_dataset_file(data_dir + "/test.jsonl");
    const auto report = litrev::stats_report_tsv(litrev::compute_stats(split));
    if (out_path.empty()) {
        std::cout << report;
    } else {
        litrev::atomic_write_file(out_path, report);
    }
    return 0;
}

int run_baseline_cmd(const std::string& method, const std::string& dataset_path,
                     const std::string& out_path, std::size_t k, std::size_t l) {
    const auto [examples, provenance] = litrev::load_dataset_file(dataset_path);
    (void)provenance;
    litrev::LexRankConfig lexrank_config;
    lexrank_config.l = l;
    std::ostringstream out;
    for (const auto& example : examples) {
        out << litrev::flatten_line(
                   litrev::baseline_summary(method, example, k, l, lexrank_config))
            << '\n';
    }
    litrev::atomic_write_file(out_path, out.str());
    std::cout << "predictions\t" << examples.size() << '\n';
    return 0;
}

int run_train_cmd(const std::string& config_path, const std::string& out_dir,
                  const std::string& dataset_dir, long long seed, bool seed_set) {
    litrev::RunConfig config = litrev::RunConfig::from_file(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.output_dir = default_out_dir(config.output_dir);
    if (!dataset_dir.empty()) config.dataset_dir = dataset_dir;
    if (seed_set) config.seed = static_cast<std::uint64_t>(seed);
    const auto result = litrev::run_training(config);
    std::cout << "best_epoch\t" << result.best_epoch << '\n'
              << "best_val_rouge2\t" << litrev::format_fixed(result.best_val_rouge2) << '\n'
              << "checkpoint\t" << result.checkpoint_path << '\n'
              << "history\t" << result.history_path << '\n'
              << "aborted\t" << (result.aborted ? 1 : 0) << '\n';
    return 0;
}

int run_generate_cmd(const std::string& checkpoint_path, const std::string& dataset_path,
                     const std::string& out_path, const litrev::BeamConfig& beam) {
    const auto checkpoint = litrev::load_checkpoint(checkpoint_path);
    const auto [examples, provenance] = litrev::load_dataset_file(dataset_path);
    (void)provenance;
    const auto predictions = litrev::generate_predictions(checkpoint, examples, beam);
    std::ostringstream out;
    for (const auto& prediction : predictions) {
        out << litrev::flatten_line(prediction) << '\n';
    }
    litrev::atomic_write_file(out_path, out.str());
    std::cout << "predictions\t" << predictions.size() << '\n';
    return 0;
}

int run_score_cmd(const std::string& candidate_path, const std::string& reference_path,
                  const std::string& out_path) {
    const auto candidates = litrev::read_lines(candidate_path);
    const auto references = litrev::read_lines(reference_path);
    if (candidates.size() != references.size()) {
        std::ostringstream message;
        message << "score: line count mismatch (" << candidates.size() << " vs "
                << references.size() << ")";
        throw std::runtime_error(message.str());
    }
    if (candidates.empty()) throw std::runtime_error("score: empty input files");

    std::ostringstream out;
    out << "line\tr1_p\tr1_r\tr1_f\tr2_p\tr2_r\tr2_f\trl_p\trl_r\trl_f\n";
    litrev::EvalRow means;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto r1 = litrev::rouge_n(candidates[i], references[i], 1, true);
        const auto r2 = litrev::rouge_n(candidates[i], references[i], 2, true);
        const auto rl = litrev::rouge_l(candidates[i], references[i], true);
        out << i;
        for (const auto& triple : {r1, r2, rl}) {
            out << '\t' << litrev::format_fixed(triple.precision) << '\t'
                << litrev::format_fixed(triple.recall) << '\t'
                << litrev::format_fixed(triple.f1);
        }
        out << '\n';
        means.r1.precision += r1.precision;
        means.r1.recall += r1.recall;
        means.r1.f1 += r1.f1;
        means.r2.precision += r2.precision;
        means.r2.recall += r2.recall;
        means.r2.f1 += r2.f1;
        means.rl.precision += rl.precision;
        means.rl.recall += rl.recall;
        means.rl.f1 += rl.f1;
    }
    const auto count = static_cast<double>(candidates.size());
    out << "mean";
    for (const auto* triple : {&means.r1, &means.r2, &means.rl}) {
        out << '\t' << litrev::format_fixed(triple->precision / count) << '\t'
            << litrev::format_fixed(triple->recall / count) << '\t'
            << litrev::format_fixed(triple->f1 / count);
    }
    out << '\n';
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        litrev::atomic_write_file(out_path, out.str());
    }
    return 0;
}

int run_evaluate_cmd(const litrev::EvaluateOptions& options, const std::string& out_path) {
    const auto report = litrev::evaluate_file(options);
    const auto text = litrev::eval_report_tsv(report);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        litrev::atomic_write_file(out_path, text);
    }
    return 0;
}

int run_gradcheck_cmd(int d_model, long long seed, std::size_t coords,
                      const std::string& out_path) {
    litrev::GradCheckOptions options;
    options.config.d_model = d_model;
    options.config.n_heads = d_model % 4 == 0 ? 4 : 2;
    options.config.n_enc_layers = 2;
    options.config.n_dec_layers = 2;
    options.config.ffn_dim = d_model * 2;
    options.config.vocab_size = 32;
    options.config.max_passage_len = 16;
    options.config.max_target_len = 16;
    options.config.mode = litrev::FusionMode::qfid;
    options.seed = static_cast<std::uint64_t>(seed);
    options.coords_per_class = coords;
    const auto report = litrev::grad_check(options);
    const auto text = litrev::grad_check_report_text(report);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        litrev::atomic_write_file(out_path, text);
    }
    std::cout << "max_rel_error\t" << litrev::format_fixed(report.max_rel_error, 9) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"literature review generation toolkit\n"
                 "LITREV_OUT_DIR sets the default output directory for "
                 "build-dataset and train."};
    app.require_subcommand(1);

    // build-dataset
    litrev::BuildDatasetOptions build_options;
    long long build_seed = 0;
    auto* build = app.add_subcommand("build-dataset",
                                     "build train/valid/test dataset files from a corpus");
    build->add_option("--corpus", build_options.corpus_path, "corpus jsonl path")->required();
    build->add_option("--config", build_options.config_path, "pipeline config json");
    build->add_option("--out", build_options.out_dir, "output directory");
    build->add_option("--seed", build_seed, "shuffle seed")->default_val(0);
    build->add_option("--test-ids", build_options.test_ids_path,
                      "file with one designated test review id per line")
        ->required();

    // stats
    std::string stats_dir;
    std::string stats_out;
    auto* stats = app.add_subcommand("stats", "dataset statistics report");
    stats->add_option("--data", stats_dir, "dataset directory")->required();
    stats->add_option("--out", stats_out, "output path (stdout when omitted)");

    // baseline
    std::string baseline_method;
    std::string baseline_dataset;
    std::string baseline_out;
    std::size_t baseline_k = 1;
    std::size_t baseline_l = 5;
    auto* baseline = app.add_subcommand("baseline", "extractive baseline predictions");
    baseline->add_option("--method", baseline_method, "lead | lexrank | oracle")
        ->required()
        ->check(CLI::IsMember({"lead", "lexrank", "oracle"}));
    baseline->add_option("--dataset", baseline_dataset, "dataset jsonl path")->required();
    baseline->add_option("--out", baseline_out, "predictions output path")->required();
    baseline->add_option("--k", baseline_k, "sentences per document (lead)");
    baseline->add_option("--l", baseline_l, "sentences in summary (lexrank/oracle)");

    // train
    std::string train_config;
    std::string train_out;
    std::string train_data;
    long long train_seed = 0;
    auto* train = app.add_subcommand("train", "train a fid/qfid model");
    train->add_option("--config", train_config, "run config json")->required();
    train->add_option("--out", train_out, "output directory (overrides config)");
    train->add_option("--data", train_data, "dataset directory (overrides config)");
    auto* train_seed_opt = train->add_option("--seed", train_seed, "seed (overrides config)");

    // generate
    std::string gen_checkpoint;
    std::string gen_dataset;
    std::string gen_out;
    litrev::BeamConfig gen_beam;
    auto* generate = app.add_subcommand("generate", "decode predictions from a checkpoint");
    generate->add_option("--checkpoint", gen_checkpoint, "checkpoint path")->required();
    generate->add_option("--dataset", gen_dataset, "dataset jsonl path")->required();
    generate->add_option("--out", gen_out, "predictions output path")->required();
    generate->add_option("--beam-size", gen_beam.beam_size, "beam size")->default_val(4);
    generate->add_option("--max-len", gen_beam.max_len, "max generated tokens");
    generate->add_option("--length-penalty", gen_beam.length_penalty, "length penalty alpha");

    // score
    std::string score_candidates;
    std::string score_references;
    std::string score_out;
    auto* score = app.add_subcommand("score", "ROUGE scores for line-aligned files");
    score->add_option("--candidates", score_candidates, "candidate file")->required();
    score->add_option("--references", score_references, "reference file")->required();
    score->add_option("--out", score_out, "report path (stdout when omitted)");

    // evaluate
    litrev::EvaluateOptions eval_options;
    std::string eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a system on a dataset split");
    evaluate->add_option("--system", eval_options.system,
                         "lead | lexrank | oracle | fid | qfid")
        ->required();
    evaluate->add_option("--dataset", eval_options.dataset_path, "dataset jsonl path")
        ->required();
    evaluate->add_option("--checkpoint", eval_options.checkpoint_path,
                         "checkpoint (neural systems)");
    evaluate->add_option("--predictions", eval_options.predictions_path,
                         "score pre-generated predictions");
    evaluate->add_option("--k", eval_options.lead_k, "lead sentences per document");
    evaluate->add_option("--l", eval_options.extract_l, "summary sentences (lexrank/oracle)");
    evaluate->add_option("--beam-size", eval_options.beam.beam_size, "beam size")
        ->default_val(4);
    evaluate->add_option("--max-len", eval_options.beam.max_len, "max generated tokens");
    evaluate->add_option("--out", eval_out, "report path (stdout when omitted)");

    // gradcheck
    int gc_dmodel = 16;
    long long gc_seed = 0;
    std::size_t gc_coords = 200;
    std::string gc_out;
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "finite-difference check of analytic gradients");
    gradcheck->add_option("--dmodel", gc_dmodel, "model width")->default_val(16);
    gradcheck->add_option("--seed", gc_seed, "seed")->default_val(0);
    gradcheck->add_option("--coords", gc_coords, "coordinates per tensor class")
        ->default_val(200);
    gradcheck->add_option("--out", gc_out, "report path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        app.exit(help);
        return 0;
    } catch (const CLI::ParseError& parse_error) {
        app.exit(parse_error);
        return 1;  // usage errors
    }

    try {
        if (build->parsed()) {
            build_options.seed = static_cast<std::uint64_t>(build_seed);
            build_options.out_dir = default_out_dir(build_options.out_dir);
            return run_build_dataset_cmd(build_options);
        }
        if (stats->parsed()) return run_stats_cmd(stats_dir, stats_out);
        if (baseline->parsed()) {
            return run_baseline_cmd(baseline_method, baseline_dataset, baseline_out, baseline_k,
                                    baseline_l);
        }
        if (train->parsed()) {
            return run_train_cmd(train_config, train_out, train_data, train_seed,
                                 !train_seed_opt->empty());
        }
        if (generate->parsed()) {
            return run_generate_cmd(gen_checkpoint, gen_dataset, gen_out, gen_beam);
        }
        if (score->parsed()) return run_score_cmd(score_candidates, score_references, score_out);
        if (evaluate->parsed()) return run_evaluate_cmd(eval_options, eval_out);
        if (gradcheck->parsed()) return run_gradcheck_cmd(gc_dmodel, gc_seed, gc_coords, gc_out);
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << '\n';
        return 2;
    }
    return 1;
}
