#include "litrev/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "litrev/io.hpp"

namespace litrev {

namespace {

nlohmann::json beam_json(const BeamConfig& beam) {
    return {{"beam_size", beam.beam_size},
            {"max_len", beam.max_len},
            {"length_penalty", beam.length_penalty}};
}

nlohmann::json optimizer_json(const AdamWConfig& opt) {
    return {{"learning_rate", opt.learning_rate},
            {"beta1", opt.beta1},
            {"beta2", opt.beta2},
            {"weight_decay", opt.weight_decay},
            {"eps", opt.eps}};
}

nlohmann::json lexrank_json(const LexRankConfig& config) {
    return {{"damping", config.damping},
            {"tol", config.tol},
            {"max_iter", config.max_iter},
            {"l", config.l}};
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    RunConfig config;
    config.system = j.value("system", config.system);
    config.dataset_dir = j.value("dataset_dir", config.dataset_dir);
    config.output_dir = j.value("output_dir", config.output_dir);
    config.epochs = j.value("epochs", config.epochs);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.seed = j.value("seed", config.seed);
    config.validation_sample = j.value("validation_sample", config.validation_sample);
    if (j.contains("model")) {
        const auto& m = j.at("model");
        config.model.d_model = m.value("d_model", config.model.d_model);
        config.model.n_heads = m.value("n_heads", config.model.n_heads);
        config.model.n_enc_layers = m.value("n_enc_layers", config.model.n_enc_layers);
        config.model.n_dec_layers = m.value("n_dec_layers", config.model.n_dec_layers);
        config.model.ffn_dim = m.value("ffn_dim", config.model.ffn_dim);
        config.model.vocab_size = m.value("vocab_size", config.model.vocab_size);
        config.model.max_passage_len = m.value("max_passage_len", config.model.max_passage_len);
        config.model.max_target_len = m.value("max_target_len", config.model.max_target_len);
    }
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        config.optimizer.learning_rate = o.value("learning_rate", config.optimizer.learning_rate);
        config.optimizer.beta1 = o.value("beta1", config.optimizer.beta1);
        config.optimizer.beta2 = o.value("beta2", config.optimizer.beta2);
        config.optimizer.weight_decay = o.value("weight_decay", config.optimizer.weight_decay);
        config.optimizer.eps = o.value("eps", config.optimizer.eps);
    }
    if (j.contains("beam")) {
        const auto& b = j.at("beam");
        config.beam.beam_size = b.value("beam_size", config.beam.beam_size);
        config.beam.max_len = b.value("max_len", config.beam.max_len);
        config.beam.length_penalty = b.value("length_penalty", config.beam.length_penalty);
    }
    config.lead_k = j.value("lead_k", config.lead_k);
    config.extract_l = j.value("extract_l", config.extract_l);
    if (j.contains("lexrank")) {
        const auto& x = j.at("lexrank");
        config.lexrank.damping = x.value("damping", config.lexrank.damping);
        config.lexrank.tol = x.value("tol", config.lexrank.tol);
        config.lexrank.max_iter = x.value("max_iter", config.lexrank.max_iter);
        config.lexrank.l = x.value("l", config.lexrank.l);
    }
    return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

std::string RunConfig::canonical_json() const {
    // output_dir is where artifacts land, not part of the experiment identity
    const nlohmann::json j = {
        {"system", system},
        {"dataset_dir", dataset_dir},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"seed", seed},
        {"validation_sample", validation_sample},
        {"model", nlohmann::json::parse(model_config_to_json(model))},
        {"optimizer", optimizer_json(optimizer)},
        {"beam", beam_json(beam)},
        {"lead_k", lead_k},
        {"extract_l", extract_l},
        {"lexrank", lexrank_json(lexrank)},
    };
    return j.dump();
}

std::string RunConfig::fingerprint() const { return fingerprint_hex(canonical_json()); }

namespace {

Vocabulary build_training_vocab(const std::vector<ChapterExample>& train, std::size_t size) {
    std::vector<std::string> texts;
    texts.reserve(train.size() * 4);
    for (const auto& example : train) {
        texts.push_back(example.review_title);
        texts.push_back(example.chapter_title);
        for (const auto& input : example.inputs) {
            texts.push_back(input.bib_tag);
            texts.push_back(input.abstract);
        }
        texts.push_back(example.target);
    }
    return Vocabulary::build(texts, size);
}

double validation_rouge2(const ModelParameters& params, const Vocabulary& vocab,
                         const std::vector<EncodedInstance>& instances,
                         const std::vector<const ChapterExample*>& examples, int max_len) {
    if (instances.empty()) return 0.0;
    BeamConfig greedy;
    greedy.beam_size = 1;
    greedy.max_len = max_len;
    greedy.length_penalty = 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto generated = generate_beam(params, instances[i], vocab, greedy);
        sum += rouge_n(generated.text, examples[i]->target, 2, true).f1;
    }
    return sum / static_cast<double>(instances.size());
}

}  // namespace

TrainingResult run_training(const RunConfig& config) {
    if (config.system != "fid" && config.system != "qfid") {
        throw std::invalid_argument("run_training: system must be fid or qfid");
    }
    if (config.epochs < 1) throw std::invalid_argument("run_training: epochs must be >= 1");

    auto [train, train_prov] = load_dataset_file(config.dataset_dir + "/train.jsonl");
    auto [valid, valid_prov] = load_dataset_file(config.dataset_dir + "/valid.jsonl");
    (void)train_prov;
    (void)valid_prov;
    if (train.empty()) throw std::runtime_error("empty_split");

    ModelConfig model_config = config.model;
    model_config.mode = fusion_mode_from_string(config.system);
    const Vocabulary vocab = build_training_vocab(
        train, static_cast<std::size_t>(model_config.vocab_size));
    model_config.vocab_size = static_cast<int>(vocab.size());
    model_config.validate();

    std::vector<EncodedInstance> train_instances;
    train_instances.reserve(train.size());
    for (const auto& example : train) {
        train_instances.push_back(encode_instance(example, vocab, model_config));
    }

    // The validation sample is drawn once per run.
    std::mt19937_64 sample_rng(config.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    const auto sample_indices = sample_without_replacement(
        valid.size(), std::min(config.validation_sample, valid.size()), sample_rng);
    std::vector<EncodedInstance> val_instances;
    std::vector<const ChapterExample*> val_examples;
    for (const auto idx : sample_indices) {
        val_instances.push_back(encode_instance(valid[idx], vocab, model_config));
        val_examples.push_back(&valid[idx]);
    }

    ModelParameters params = ModelParameters::init(model_config, config.seed);
    ModelParameters grads = ModelParameters::zeros_like(params);
    AdamWState opt_state = AdamWState::init(params);

    TrainingResult result;
    ModelParameters best_params = params;
    double best_score = -1.0;

    std::mt19937_64 shuffle_rng(config.seed ^ 0x1234567890abcdefULL);
    std::vector<std::size_t> order(train_instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const auto batch_size = static_cast<std::size_t>(std::max(config.batch_size, 1));
    for (int epoch = 1; epoch <= config.epochs && !result.aborted; ++epoch) {
        deterministic_shuffle(order, shuffle_rng);
        double ce_weighted = 0.0;
        std::size_t token_total = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(start + batch_size, order.size());
            std::vector<EncodedInstance> batch;
            batch.reserve(end - start);
            std::size_t batch_tokens = 0;
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_instances[order[i]]);
                batch_tokens += train_instances[order[i]].target_ids.size();
            }
            // Divergence can surface either as a non-finite loss or as a
            // non-finite intermediate (similarity logits, gradients); both
            // abort the run with the best checkpoint so far retained.
            double loss = 0.0;
            try {
                loss = loss_and_gradients(params, batch, grads);
            } catch (const std::runtime_error& error) {
                if (std::string(error.what()).find("nonfinite") != std::string::npos) {
                    result.aborted = true;
                    break;
                }
                throw;
            }
            if (!std::isfinite(loss)) {
                result.aborted = true;
                break;
            }
            try {
                adamw_step(params, grads, opt_state, config.optimizer);
            } catch (const std::runtime_error& error) {
                if (std::string(error.what()).find("non-finite gradient") !=
                    std::string::npos) {
                    result.aborted = true;
                    break;
                }
                throw;
            }
            ce_weighted += loss * static_cast<double>(batch_tokens);
            token_total += batch_tokens;
        }
        if (result.aborted) break;

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = token_total > 0 ? ce_weighted / static_cast<double>(token_total) : 0.0;
        record.val_rouge2 = validation_rouge2(params, vocab, val_instances, val_examples,
                                              config.beam.max_len);
        result.history.push_back(record);
        if (record.val_rouge2 > best_score) {
            best_score = record.val_rouge2;
            best_params = params;
            result.best_epoch = epoch;
            result.best_val_rouge2 = record.val_rouge2;
        }
    }

    if (best_score < 0.0) {
        // Aborted before any epoch finished; retain the last good parameters.
        best_params = params;
        result.best_epoch = 0;
        result.best_val_rouge2 = 0.0;
    }

    result.checkpoint_path = config.output_dir + "/checkpoint.bin";
    result.history_path = config.output_dir + "/history.tsv";
    save_checkpoint(result.checkpoint_path, best_params, vocab, config.fingerprint());
    atomic_write_file(result.history_path, history_tsv(result, config.fingerprint(),
                                                       config.system));
    return result;
}

std::string history_tsv(const TrainingResult& result, const std::string& fingerprint,
                        const std::string& system) {
    std::ostringstream out;
    out << "# system=" << system << "\tfingerprint=" << fingerprint
        << "\tbest_epoch=" << result.best_epoch << "\taborted=" << (result.aborted ? 1 : 0)
        << '\n';
    out << "epoch\ttrain_loss\tval_rouge2\n";
    for (const auto& record : result.history) {
        out << record.epoch << '\t' << format_fixed(record.train_loss) << '\t'
            << format_fixed(record.val_rouge2) << '\n';
    }
    return out.str();
}

std::string flatten_line(const std::string& text) {
    std::string out = text;
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

std::string baseline_summary(const std::string& method, const ChapterExample& example,
                             std::size_t lead_k_value, std::size_t extract_l,
                             const LexRankConfig& lexrank_config) {
    std::vector<std::string> docs;
    docs.reserve(example.inputs.size());
    for (const auto& input : example.inputs) docs.push_back(input.abstract);
    if (method == "lead") return lead_k(docs, lead_k_value);
    if (method == "lexrank") return lexrank(docs, lexrank_config);
    if (method == "oracle") return ext_oracle(docs, example.target, extract_l);
    throw std::invalid_argument("unknown baseline method: " + method);
}

std::vector<std::string> generate_predictions(const Checkpoint& checkpoint,
                                              const std::vector<ChapterExample>& examples,
                                              const BeamConfig& beam) {
    std::vector<std::string> predictions;
    predictions.reserve(examples.size());
    for (const auto& example : examples) {
        const auto instance = encode_instance(example, checkpoint.vocab,
                                              checkpoint.params.config);
        predictions.push_back(
            generate_beam(checkpoint.params, instance, checkpoint.vocab, beam).text);
    }
    return predictions;
}

EvalReport evaluate_file(const EvaluateOptions& options) {
    auto [examples, provenance] = load_dataset_file(options.dataset_path);
    (void)provenance;
    if (examples.empty()) throw std::runtime_error("empty_split");

    std::vector<std::string> predictions;
    if (!options.predictions_path.empty()) {
        std::vector<std::string> lines;
        for_each_line(options.predictions_path,
                      [&](std::size_t, const std::string& line) { lines.push_back(line); });
        if (lines.size() != examples.size()) {
            std::ostringstream message;
            message << "prediction_count_mismatch: expected " << examples.size() << " got "
                    << lines.size();
            throw std::runtime_error(message.str());
        }
        predictions = std::move(lines);
    } else if (options.system == "lead" || options.system == "lexrank" ||
               options.system == "oracle") {
        for (const auto& example : examples) {
            predictions.push_back(baseline_summary(options.system, example, options.lead_k,
                                                   options.extract_l, options.lexrank));
        }
    } else if (options.system == "fid" || options.system == "qfid") {
        const Checkpoint checkpoint = load_checkpoint(options.checkpoint_path);
        if (to_string(checkpoint.params.config.mode) != options.system) {
            throw std::runtime_error("checkpoint mode does not match system " + options.system);
        }
        predictions = generate_predictions(checkpoint, examples, options.beam);
    } else {
        throw std::invalid_argument("unknown system: " + options.system);
    }

    EvalReport report;
    report.system = options.system;
    {
        nlohmann::json j = {
            {"system", options.system},
            {"dataset", options.dataset_path},
            {"checkpoint", options.checkpoint_path},
            {"predictions", options.predictions_path},
            {"lead_k", options.lead_k},
            {"extract_l", options.extract_l},
            {"beam", beam_json(options.beam)},
            {"lexrank", lexrank_json(options.lexrank)},
        };
        report.fingerprint = fingerprint_hex(j.dump());
    }
    report.predictions = predictions;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        EvalRow row;
        row.r1 = rouge_n(predictions[i], examples[i].target, 1, true);
        row.r2 = rouge_n(predictions[i], examples[i].target, 2, true);
        row.rl = rouge_l(predictions[i], examples[i].target, true);
        report.means.r1.precision += row.r1.precision;
        report.means.r1.recall += row.r1.recall;
        report.means.r1.f1 += row.r1.f1;
        report.means.r2.precision += row.r2.precision;
        report.means.r2.recall += row.r2.recall;
        report.means.r2.f1 += row.r2.f1;
        report.means.rl.precision += row.rl.precision;
        report.means.rl.recall += row.rl.recall;
        report.means.rl.f1 += row.rl.f1;
        report.rows.push_back(row);
    }
    const auto count = static_cast<double>(report.rows.size());
    report.means.r1.precision /= count;
    report.means.r1.recall /= count;
    report.means.r1.f1 /= count;
    report.means.r2.precision /= count;
    report.means.r2.recall /= count;
    report.means.r2.f1 /= count;
    report.means.rl.precision /= count;
    report.means.rl.recall /= count;
    report.means.rl.f1 /= count;
    return report;
}

namespace {

void append_triple(std::ostringstream& out, const ScoreTriple& triple) {
    out << '\t' << format_fixed(triple.precision) << '\t' << format_fixed(triple.recall) << '\t'
        << format_fixed(triple.f1);
}

}  // namespace

std::string eval_report_tsv(const EvalReport& report) {
    std::ostringstream out;
    out << "# system=" << report.system << "\tfingerprint=" << report.fingerprint << '\n';
    out << "example\tr1_p\tr1_r\tr1_f\tr2_p\tr2_r\tr2_f\trl_p\trl_r\trl_f\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        out << i;
        append_triple(out, report.rows[i].r1);
        append_triple(out, report.rows[i].r2);
        append_triple(out, report.rows[i].rl);
        out << '\n';
    }
    out << "mean";
    append_triple(out, report.means.r1);
    append_triple(out, report.means.r2);
    append_triple(out, report.means.rl);
    out << '\n';
    return out.str();
}

}  // namespace litrev
