#include <stdexcept>
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "litrev/beam.hpp"
#include "litrev/checkpoint.hpp"
#include "litrev/io.hpp"
#include "litrev/gradcheck.hpp"
#include "litrev/model.hpp"
#include "litrev/optimizer.hpp"
#include "litrev/vocab.hpp"

using namespace litrev;

namespace {

ModelConfig tiny_config(FusionMode mode = FusionMode::qfid) {
    ModelConfig config;
    config.d_model = 16;
    config.n_heads = 2;
    config.n_enc_layers = 2;
    config.n_dec_layers = 2;
    config.ffn_dim = 32;
    config.vocab_size = 32;
    config.max_passage_len = 16;
    config.max_target_len = 16;
    config.mode = mode;
    return config;
}

ChapterExample tiny_example() {
    ChapterExample example;
    example.review_title = "survey of widgets";
    example.chapter_title = "widget methods";
    example.inputs = {{"BIB001", "widgets spin fast"}, {"BIB002", "gadgets hum softly"}};
    example.target = "widgets spin fast indeed";
    return example;
}

Vocabulary tiny_vocab() {
    return Vocabulary::build({"survey of widgets widget methods", "widgets spin fast indeed",
                              "gadgets hum softly", "bib001 bib002"},
                             32);
}

}  // namespace

TEST_CASE("build_vocab ranks by frequency with lexicographic ties") {
    const auto vocab = Vocabulary::build({"a a b"}, 8);
    CHECK(vocab.size() == 8);
    CHECK(vocab.token_of(6) == "a");
    CHECK(vocab.token_of(7) == "b");
    CHECK(vocab.id_of("a") == 6);
    CHECK(vocab.id_of("never_seen") == Vocabulary::kUnk);

    // equal counts fall back to lexicographic order
    const auto tied = Vocabulary::build({"zeta alpha"}, 8);
    CHECK(tied.token_of(6) == "alpha");
    CHECK(tied.token_of(7) == "zeta");

    CHECK_THROWS(Vocabulary::build({}, 8));
    CHECK_THROWS(Vocabulary::build({"a"}, 7));
}

TEST_CASE("model tokenization keeps separator literals") {
    CHECK(Vocabulary::model_tokenize("Title <s> Chapter") ==
          std::vector<std::string>{"title", "<s>", "chapter"});
    CHECK(Vocabulary::model_tokenize("a </s> b") ==
          std::vector<std::string>{"a", "</s>", "b"});
    CHECK(Vocabulary::model_tokenize("BIB001") == std::vector<std::string>{"bib001"});
    const auto vocab = tiny_vocab();
    const auto ids = vocab.encode("widgets <s> gadgets");
    REQUIRE(ids.size() == 3);
    CHECK(ids[1] == Vocabulary::kSep);
}

TEST_CASE("format_input matches the passage template") {
    ChapterExample example;
    example.review_title = "T";
    example.chapter_title = "C";
    example.inputs = {{"BIB001", "A1"}};
    example.target = "t";
    const auto formatted = format_input(example);
    CHECK(formatted.query == "T <s> C");
    REQUIRE(formatted.passages.size() == 1);
    CHECK(formatted.passages[0] == "T <s> C <s> A1 <s> BIB001");

    example.inputs.push_back({"BIB002", "A2"});
    const auto two = format_input(example);
    REQUIRE(two.passages.size() == 2);
    CHECK(two.passages[0].rfind(two.query, 0) == 0);
    CHECK(two.passages[1].rfind(two.query, 0) == 0);

    example.chapter_title = "";
    const auto degenerate = format_input(example);
    CHECK(degenerate.passages[0] == "T <s>  <s> A1 <s> BIB001");

    example.chapter_title = "C";
    CHECK(joined_input(format_input(example)) ==
          "T <s> C <s> A1 <s> BIB001 </s> T <s> C <s> A2 <s> BIB002");
}

TEST_CASE("encode_passage shapes, determinism, and zero-parameter degeneracy") {
    const auto config = tiny_config();
    const auto params = ModelParameters::init(config, 3);
    const std::vector<int> query = {6, 7, 8};
    const std::vector<int> body = {9, 10, 11, 12};

    const auto encoding = encode_passage(params, query, body);
    CHECK(encoding.hidden.rows() == config.d_model);
    CHECK(encoding.hidden.cols() == static_cast<int>(query.size() + body.size()));
    CHECK_FALSE(encoding.truncated);

    const auto again = encode_passage(params, query, body);
    CHECK((encoding.hidden - again.hidden).norm() == 0.0);

    // pooled is the column mean
    const Vec mean = encoding.hidden.rowwise().mean();
    CHECK((encoding.pooled - mean).norm() < 1e-12);

    // zeroed parameters: all columns identical (no positional signal remains)
    ModelParameters zeros = ModelParameters::zeros_like(params);
    zeros.config = config;
    const auto flat = encode_passage(zeros, query, body);
    for (int c = 1; c < flat.hidden.cols(); ++c) {
        CHECK((flat.hidden.col(c) - flat.hidden.col(0)).norm() == 0.0);
    }

    // truncation removes body tail, never the query
    ModelConfig small = config;
    small.max_passage_len = 5;
    const auto small_params = ModelParameters::init(small, 3);
    const auto truncated = encode_passage(small_params, query, body);
    CHECK(truncated.truncated);
    CHECK(truncated.hidden.cols() == 5);
    CHECK_THROWS(encode_passage(small_params, {1, 2, 3, 4, 5, 6}, {}));
}

TEST_CASE("encode_instance records truncation and keeps the query prefix") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    config.max_passage_len = 12;  // second passage is exactly 12 tokens
    auto example = tiny_example();
    example.inputs[0].abstract =
        "widgets spin fast and hum softly over many long rows of gadgets";
    const auto instance = encode_instance(example, vocab, config);
    REQUIRE(instance.passage_truncated.size() == 2);
    CHECK(instance.passage_truncated[0]);
    CHECK_FALSE(instance.passage_truncated[1]);
    CHECK(instance.passage_ids[0].size() == 12);
    // the query tokens survive as the prefix of the truncated passage
    for (std::size_t i = 0; i < instance.query_ids.size(); ++i) {
        CHECK(instance.passage_ids[0][i] == instance.query_ids[i]);
    }
}

TEST_CASE("encode_query shares the encoder with encode_passage") {
    const auto params = ModelParameters::init(tiny_config(), 5);
    const std::vector<int> ids = {6, 7, 8, 9};
    const auto as_query = encode_query(params, ids);
    const auto as_passage = encode_passage(params, ids, {});
    CHECK((as_query.hidden - as_passage.hidden).norm() == 0.0);
    CHECK(as_query.hidden.cols() == 4);
    CHECK(as_query.pooled.allFinite());
}

TEST_CASE("fusion_weights") {
    SUBCASE("singleton softmax gives exactly 2") {
        const Vec pooled = Vec::Ones(4);
        const auto weights = fusion_weights({pooled}, pooled);
        REQUIRE(weights.w.size() == 1);
        CHECK(std::abs(weights.w[0] - 2.0) < 1e-9);
    }
    SUBCASE("equal pooled vectors split evenly") {
        Vec h = Vec::Ones(8);
        const auto weights = fusion_weights({h, h}, h);
        CHECK(weights.w[0] == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(weights.w[1] == doctest::Approx(1.5).epsilon(1e-12));
    }
    SUBCASE("two-dimensional worked example") {
        Vec hq(2), h1(2), h2(2);
        hq << 1, 0;
        h1 << 1, 0;
        h2 << 0, 1;
        const auto weights = fusion_weights({h1, h2}, hq);
        CHECK(weights.w[0] == doctest::Approx(1.7310585786300049).epsilon(1e-9));
        CHECK(weights.w[1] == doctest::Approx(1.2689414213699951).epsilon(1e-9));
    }
    SUBCASE("non-finite similarity is rejected") {
        Vec huge = Vec::Constant(2, 1e200);
        CHECK_THROWS_WITH_AS(fusion_weights({huge}, huge), "nonfinite_similarity",
                             std::runtime_error);
    }
    SUBCASE("invariants over random instances") {
        std::mt19937_64 rng(99);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (int round = 0; round < 200; ++round) {
            const int n = 1 + static_cast<int>(rng() % 16);
            const int d = 1 + static_cast<int>(rng() % 64);
            // pooled-representation scale: entries ~ N(0, 1/sqrt(d)) keep the
            // similarity logits O(1), as encoder pooling does
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
            double sum = 0.0;
            for (const auto w : weights.w) {
                CHECK(w > 1.0);
                CHECK(w <= 2.0);
                sum += w - 1.0;
            }
            CHECK(std::abs(sum - 1.0) < 1e-6);
            const auto argmax_w = std::max_element(weights.w.begin(), weights.w.end()) -
                                  weights.w.begin();
            const auto argmax_dot = std::max_element(dots.begin(), dots.end()) - dots.begin();
            CHECK(argmax_w == argmax_dot);
        }
    }
}

TEST_CASE("fuse_and_decode modes and distribution") {
    const auto vocab = tiny_vocab();
    const auto example = tiny_example();

    ModelConfig qfid_config = tiny_config(FusionMode::qfid);
    qfid_config.vocab_size = static_cast<int>(vocab.size());
    const auto qfid_params = ModelParameters::init(qfid_config, 17);
    const auto instance = encode_instance(example, vocab, qfid_config);

    std::vector<SequenceEncoding> encodings;
    for (const auto& ids : instance.passage_ids) {
        encodings.push_back(encode_sequence(qfid_params, ids));
    }
    std::vector<Vec> pooled;
    for (const auto& enc : encodings) pooled.push_back(enc.pooled);
    const auto query_enc = encode_sequence(qfid_params, instance.query_ids);
    const auto weights = fusion_weights(pooled, query_enc.pooled);

    const Vec dist = fuse_and_decode(qfid_params, encodings, weights, {6, 7});
    CHECK(std::abs(dist.sum() - 1.0) < 1e-6);
    CHECK(dist.minCoeff() >= 0.0);

    // qfid requires weights; fid forbids them
    CHECK_THROWS_AS(fuse_and_decode(qfid_params, encodings, std::nullopt, {6}),
                    std::invalid_argument);
    ModelParameters fid_params = qfid_params;
    fid_params.config.mode = FusionMode::fid;
    CHECK_THROWS_AS(fuse_and_decode(fid_params, encodings, weights, {6}),
                    std::invalid_argument);

    SUBCASE("fid equals qfid with unit weights") {
        FusionWeights unit;
        unit.w.assign(encodings.size(), 1.0);
        const Vec qfid_unit = fuse_and_decode(qfid_params, encodings, unit, {6, 7});
        const Vec fid = fuse_and_decode(fid_params, encodings, std::nullopt, {6, 7});
        CHECK((qfid_unit - fid).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("scaling a single passage changes the output") {
        const std::vector<SequenceEncoding> single = {encodings[0]};
        FusionWeights doubled;
        doubled.w = {2.0};
        FusionWeights unit;
        unit.w = {1.0};
        const Vec with_two = fuse_and_decode(qfid_params, single, doubled, {6});
        const Vec with_one = fuse_and_decode(qfid_params, single, unit, {6});
        CHECK((with_two - with_one).cwiseAbs().maxCoeff() > 1e-9);
    }
    SUBCASE("cross-attention memory spans all passages") {
        const auto memory = prepare_memory(qfid_params, instance);
        Eigen::Index expected = 0;
        for (const auto& ids : instance.passage_ids) {
            expected += static_cast<Eigen::Index>(ids.size());
        }
        CHECK(memory.fused.cols() == expected);
        REQUIRE(memory.weights.has_value());
        CHECK(memory.weights->w.size() == instance.passage_ids.size());
    }
}

TEST_CASE("loss against the uniform-distribution oracle") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    auto params = ModelParameters::init(config, 23);
    const auto instance = encode_instance(tiny_example(), vocab, config);

    SUBCASE("uniform output layer forces loss = ln(vocab)") {
        params.out_proj.setZero();
        params.out_bias.setZero();
        const double loss = loss_only(params, {instance});
        CHECK(loss == doctest::Approx(std::log(static_cast<double>(config.vocab_size)))
                          .epsilon(1e-12));
    }
    SUBCASE("loss is nonnegative") {
        CHECK(loss_only(params, {instance}) >= 0.0);
    }
    SUBCASE("empty target is an error") {
        auto broken = instance;
        broken.target_ids.clear();
        CHECK_THROWS_WITH_AS(loss_only(params, {broken}), "loss: empty target",
                             std::runtime_error);
    }
}

TEST_CASE("batch loss is the token-weighted mean over instances") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    const auto params = ModelParameters::init(config, 29);

    auto first = tiny_example();
    auto second = tiny_example();
    second.target = "gadgets hum softly";
    const auto a = encode_instance(first, vocab, config);
    const auto b = encode_instance(second, vocab, config);

    const double combined = loss_only(params, {a, b});
    const double separate_a = loss_only(params, {a});
    const double separate_b = loss_only(params, {b});
    const auto ta = static_cast<double>(a.target_ids.size());
    const auto tb = static_cast<double>(b.target_ids.size());
    CHECK(combined == doctest::Approx((separate_a * ta + separate_b * tb) / (ta + tb))
                          .epsilon(1e-12));
}

TEST_CASE("gradient check on a d_model=16 model") {
    GradCheckOptions options;
    options.config = tiny_config();
    options.seed = 7;
    options.coords_per_class = 60;
    const auto report = grad_check(options);
    CAPTURE(grad_check_report_text(report));
    CHECK(report.max_rel_error < 1e-4);
    CHECK(report.classes.size() >= 8);
}

TEST_CASE("gradient check is deterministic and detects corrupted gradients") {
    GradCheckOptions options;
    options.config = tiny_config();
    options.seed = 11;
    options.coords_per_class = 40;

    const auto batch = grad_check_batch(options.config, options.seed);
    const auto params = ModelParameters::init(options.config, options.seed);
    ModelParameters grads = ModelParameters::zeros_like(params);
    loss_and_gradients(params, batch, grads);

    const auto clean_a = grad_check_against(params, batch, grads, options);
    const auto clean_b = grad_check_against(params, batch, grads, options);
    CHECK(clean_a.max_rel_error == clean_b.max_rel_error);
    CHECK(clean_a.max_rel_error < 1e-4);

    // corrupt one gradient path: scale the first decoder ffn weight gradient
    for (auto& tensor : grads.tensors()) {
        if (tensor.name == "dec.0.ffn.w1") {
            for (std::size_t i = 0; i < tensor.size(); ++i) tensor.data[i] *= 1.5;
        }
    }
    const auto corrupted = grad_check_against(params, batch, grads, options);
    CHECK(corrupted.max_rel_error > 1e-2);
}

TEST_CASE("adamw") {
    const auto config = tiny_config();
    auto params = ModelParameters::init(config, 31);
    const auto grads = ModelParameters::zeros_like(params);
    auto state = AdamWState::init(params);

    SUBCASE("defaults match the stated optimizer settings") {
        const AdamWConfig defaults;
        CHECK(defaults.beta1 == 0.9);
        CHECK(defaults.beta2 == 0.999);
        CHECK(defaults.learning_rate == 5e-5);
    }
    SUBCASE("zero gradients and zero decay leave parameters unchanged") {
        AdamWConfig opt;
        opt.weight_decay = 0.0;
        const Mat before = params.embedding;
        adamw_step(params, grads, state, opt);
        CHECK((params.embedding - before).norm() == 0.0);
    }
    SUBCASE("non-finite gradients name the offending tensor") {
        auto bad = ModelParameters::zeros_like(params);
        bad.enc_pos(0, 0) = std::numeric_limits<double>::infinity();
        AdamWConfig opt;
        CHECK_THROWS_WITH_AS(adamw_step(params, bad, state, opt),
                             "non-finite gradient in tensor: enc_pos", std::runtime_error);
    }
    SUBCASE("weight decay shrinks parameters even without gradients") {
        AdamWConfig opt;
        opt.weight_decay = 0.5;
        opt.learning_rate = 0.1;
        const double before = params.embedding(0, 0);
        adamw_step(params, grads, state, opt);
        CHECK(params.embedding(0, 0) == doctest::Approx(before * (1.0 - 0.05)));
    }
}

TEST_CASE("single-batch overfit drives the loss under 0.05 in 500 steps") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    auto params = ModelParameters::init(config, 41);
    const std::vector<EncodedInstance> batch = {encode_instance(tiny_example(), vocab, config)};

    ModelParameters grads = ModelParameters::zeros_like(params);
    auto state = AdamWState::init(params);
    AdamWConfig opt;
    opt.learning_rate = 3e-3;  // overfit run; the paper-scale default is far too slow here
    double loss = 0.0;
    for (int step = 0; step < 500; ++step) {
        loss = loss_and_gradients(params, batch, grads);
        adamw_step(params, grads, state, opt);
        if (loss < 0.04) break;
    }
    CHECK(loss < 0.05);
}

TEST_CASE("beam search") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    const auto params = ModelParameters::init(config, 47);
    const auto instance = encode_instance(tiny_example(), vocab, config);

    SUBCASE("beam size one equals greedy argmax decoding") {
        BeamConfig greedy;
        greedy.beam_size = 1;
        greedy.max_len = 8;
        const auto generated = generate_beam(params, instance, vocab, greedy);

        const auto memory = prepare_memory(params, instance);
        std::vector<int> manual;
        for (int step = 0; step < 8; ++step) {
            const Vec dist = next_token_distribution(params, memory.fused, manual);
            int best = 0;
            for (int i = 1; i < dist.size(); ++i) {
                if (dist(i) > dist(best)) best = i;
            }
            manual.push_back(best);
            if (best == Vocabulary::kEos) break;
        }
        CHECK(generated.token_ids == manual);
    }
    SUBCASE("default beam size is 4") {
        const BeamConfig defaults;
        CHECK(defaults.beam_size == 4);
    }
    SUBCASE("output respects the cap") {
        BeamConfig config4;
        config4.beam_size = 4;
        config4.max_len = 5;
        const auto generated = generate_beam(params, instance, vocab, config4);
        CHECK(generated.token_ids.size() <= 5);
    }
    SUBCASE("decoding is deterministic across runs") {
        BeamConfig beam;
        beam.beam_size = 4;
        beam.max_len = 8;
        const auto a = generate_beam(params, instance, vocab, beam);
        const auto b = generate_beam(params, instance, vocab, beam);
        CHECK(a.token_ids == b.token_ids);
        CHECK(a.text == b.text);
    }
}

TEST_CASE("greedy decode is invariant to passage permutation") {
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    const auto params = ModelParameters::init(config, 53);

    auto example = tiny_example();
    example.inputs.push_back({"BIB003", "sprockets turn slowly"});
    const auto instance = encode_instance(example, vocab, config);

    BeamConfig greedy;
    greedy.beam_size = 1;
    greedy.max_len = 8;
    const auto base = generate_beam(params, instance, vocab, greedy);

    auto permuted = instance;
    std::swap(permuted.passage_ids[0], permuted.passage_ids[2]);
    const auto swapped = generate_beam(params, permuted, vocab, greedy);
    CHECK(base.token_ids == swapped.token_ids);
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    const auto vocab = tiny_vocab();
    ModelConfig config = tiny_config();
    config.vocab_size = static_cast<int>(vocab.size());
    const auto params = ModelParameters::init(config, 61);

    const auto path = (fs::temp_directory_path() / "litrev_ckpt_test.bin").string();
    save_checkpoint(path, params, vocab, "fingerprint123");
    const auto loaded = load_checkpoint(path);

    CHECK(loaded.fingerprint == "fingerprint123");
    CHECK(loaded.vocab.tokens() == vocab.tokens());
    CHECK(loaded.params.config.d_model == config.d_model);
    CHECK(to_string(loaded.params.config.mode) == to_string(config.mode));

    const auto original_tensors = params.tensors();
    const auto loaded_tensors = loaded.params.tensors();
    REQUIRE(original_tensors.size() == loaded_tensors.size());
    for (std::size_t t = 0; t < original_tensors.size(); ++t) {
        REQUIRE(original_tensors[t].size() == loaded_tensors[t].size());
        for (std::size_t i = 0; i < original_tensors[t].size(); ++i) {
            CHECK(original_tensors[t].data[i] == loaded_tensors[t].data[i]);
        }
    }

    SUBCASE("corrupted magic is rejected") {
        auto bytes = read_file(path);
        bytes[0] = 'X';
        const auto broken = (fs::temp_directory_path() / "litrev_ckpt_broken.bin").string();
        atomic_write_file(broken, bytes);
        CHECK_THROWS_AS(load_checkpoint(broken), std::runtime_error);
        fs::remove(broken);
    }
    fs::remove(path);
}
