#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "concord/checkpoint.hpp"
#include "concord/model.hpp"
#include "concord/nn.hpp"
#include "test_support.hpp"

using namespace concord;
using namespace concord_test;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("/tmp/concord_model_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("build_model is deterministic per seed") {
    const ModelConfig c = tiny_config();
    Rng a(5), b(5), other(6);
    SiameseModel m1 = build_model(c, a, layout_for(c));
    SiameseModel m2 = build_model(c, b, layout_for(c));
    SiameseModel m3 = build_model(c, other, layout_for(c));
    CHECK(checkpoint_bytes(m1) == checkpoint_bytes(m2));
    CHECK(checkpoint_bytes(m1) != checkpoint_bytes(m3));
}

TEST_CASE("feature modes size the model correctly") {
    const ModelConfig both = tiny_config();
    CHECK(both.concat_width() == 2 * (4 + 4));

    ModelConfig lex = tiny_config(FeatureMode::lex_only);
    Rng rng(1);
    SiameseModel m = build_model(lex, rng, layout_for(lex));
    CHECK(m.gru.Wz.size() == 0);  // no GRU parameters allocated
    CHECK(m.config.concat_width() == 2 * 4);
    bool saw_gru = false;
    for (const NamedParam& p : all_parameters(m))
        if (p.name.rfind("gru.", 0) == 0) saw_gru = true;
    CHECK_FALSE(saw_gru);

    ModelConfig gru_only = tiny_config(FeatureMode::gru_only);
    CHECK(gru_only.concat_width() == 2 * 4);
    // both = lex_only width + gru_only width
    CHECK(both.concat_width() == lex.concat_width() + gru_only.concat_width());

    ModelConfig defaults;  // stock widths: hidden 64 plus the lexicon block
    defaults.lex_dim = 8;
    CHECK(defaults.concat_width() == 2 * (64 + 8));
}

TEST_CASE("config validation") {
    ModelConfig c = tiny_config();
    c.num_classes = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.dense_sizes = {100};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config(FeatureMode::lex_only);
    c.lex_dim = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny_config();
    c.dropout_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("forward emits a 3-way distribution") {
    const ModelConfig c = tiny_config();
    Rng rng(5);
    SiameseModel m = build_model(c, rng, layout_for(c));
    Rng data(9);
    for (int trial = 0; trial < 10; ++trial) {
        const PairFeatures p = random_pair(data, c);
        const Tensor probs = forward(m, p);
        REQUIRE(probs.size() == 3);
        double sum = 0.0;
        for (double v : probs.data) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("swapping quote and response changes the prediction in general") {
    const ModelConfig c = tiny_config();
    Rng rng(15);
    SiameseModel m = build_model(c, rng, layout_for(c));
    Rng data(16);
    const PairFeatures p = random_pair(data, c);
    PairFeatures swapped;
    swapped.quote = p.response;
    swapped.response = p.quote;
    swapped.quote_lex = p.response_lex;
    swapped.response_lex = p.quote_lex;
    const Tensor a = forward(m, p);
    const Tensor b = forward(m, swapped);
    CHECK(a.data != b.data);  //(Q,R) is an ordered pair
}

TEST_CASE("shared weights: both branches run the identical tensors") {
    const ModelConfig c = tiny_config();
    Rng rng(17);
    SiameseModel m = build_model(c, rng, layout_for(c));
    Rng data(18);
    const PairFeatures p = random_pair(data, c);
    const auto [hq, cq] = gru_forward(m.gru, p.quote.matrix);
    const auto [hq2, cq2] = gru_forward(m.gru, p.quote.matrix);
    CHECK(hq.data == hq2.data);  // one parameter set, bit-equal encodings
    // identical Q and R inputs produce identical embeddings through forward
    PairFeatures same;
    same.quote = p.quote;
    same.response = p.quote;
    same.quote_lex = p.quote_lex;
    same.response_lex = p.quote_lex;
    const Tensor probs = forward(m, same);
    CHECK(probs.size() == 3);
}

TEST_CASE("loss_and_grads with every layer frozen computes loss, no grads") {
    const ModelConfig c = tiny_config();
    Rng rng(19);
    SiameseModel m = build_model(c, rng, layout_for(c));
    m.trainable.gru = m.trainable.dense1 = m.trainable.dense2 = m.trainable.out = false;
    Rng data(20), drop(21);
    const auto batch = random_batch(data, c, 4);
    const ModelGrads g = loss_and_grads(m, batch, cycling_labels(4), drop);
    CHECK(g.grads.empty());
    CHECK(g.loss > 0.0);
    CHECK(std::isfinite(g.loss));
}

TEST_CASE("loss_and_grads matches finite differences on a 4-pair batch") {
    ModelConfig c = tiny_config();
    c.dropout_rate = 0.5;  // exercised through fixed masks
    Rng rng(22);
    SiameseModel m = build_model(c, rng, layout_for(c));
    Rng data(23);
    const auto batch = random_batch(data, c, 4);
    const auto labels = cycling_labels(4);

    const std::uint64_t drop_seed = 77;
    Rng drop(drop_seed);
    const ModelGrads analytic = loss_and_grads(m, batch, labels, drop, false);
    std::vector<std::pair<std::string, Tensor*>> params;
    std::vector<const Tensor*> grads;
    const auto trainable = trainable_parameters(m);
    REQUIRE(trainable.size() == analytic.grads.size());
    for (std::size_t i = 0; i < trainable.size(); ++i) {
        CHECK(trainable[i].name == analytic.names[i]);
        params.emplace_back(trainable[i].name, trainable[i].tensor);
        grads.push_back(&analytic.grads[i]);
    }
    const GradCheckReport report = gradient_check(
        params, grads, [&]() { return training_loss(m, batch, labels, drop_seed); });
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("duplicating the batch leaves the mean loss unchanged") {
    ModelConfig c = tiny_config();  // dropout 0 keeps the paths comparable
    Rng rng(24);
    SiameseModel m = build_model(c, rng, layout_for(c));
    Rng data(25);
    auto batch = random_batch(data, c, 3);
    auto labels = cycling_labels(3);
    const double single = training_loss(m, batch, labels, 1);
    std::vector<PairFeatures> doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    std::vector<int> doubled_labels = labels;
    doubled_labels.insert(doubled_labels.end(), labels.begin(), labels.end());
    const double twice = training_loss(m, doubled, doubled_labels, 1);
    CHECK(single == doctest::Approx(twice).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip is byte-identical and forward-exact") {
    const ModelConfig c = tiny_config();
    Rng rng(26);
    SiameseModel m = build_model(c, rng, layout_for(c));
    // make running stats non-trivial so they must survive the trip
    Rng data(27), drop(28);
    auto batch = random_batch(data, c, 4);
    loss_and_grads(m, batch, cycling_labels(4), drop);

    const std::string bytes = checkpoint_bytes(m);
    LoadedCheckpoint loaded = load_checkpoint_bytes(bytes);
    CHECK(checkpoint_bytes(loaded.model) == bytes);  // save -> load -> save
    CHECK_FALSE(loaded.adam.has_value());
    CHECK(loaded.model.lex_layout == m.lex_layout);

    const PairFeatures p = random_pair(data, c);
    const Tensor before = forward(m, p);
    const Tensor after = forward(loaded.model, p);
    CHECK(before.data == after.data);  // 0 ulp
}

TEST_CASE("checkpoint round trip carries Adam state") {
    const ModelConfig c = tiny_config();
    Rng rng(29);
    SiameseModel m = build_model(c, rng, layout_for(c));
    AdamSnapshot adam;
    for (const NamedParam& p : trainable_parameters(m)) {
        adam.names.push_back(p.name);
        AdamState s = AdamState::init(*p.tensor);
        s.t = 17;
        Rng fill(31);
        for (double& v : s.m.data) v = fill.next_uniform(-1, 1);
        for (double& v : s.v.data) v = fill.next_uniform(0, 1);
        adam.states.push_back(std::move(s));
    }
    const std::string bytes = checkpoint_bytes(m, &adam);
    LoadedCheckpoint loaded = load_checkpoint_bytes(bytes);
    REQUIRE(loaded.adam.has_value());
    CHECK(loaded.adam->names == adam.names);
    CHECK(loaded.adam->states[0].t == 17);
    CHECK(loaded.adam->states[0].m.data == adam.states[0].m.data);
    CHECK(checkpoint_bytes(loaded.model, &*loaded.adam) == bytes);
}

TEST_CASE("checkpoint file save/load") {
    const ModelConfig c = tiny_config();
    Rng rng(32);
    SiameseModel m = build_model(c, rng, layout_for(c));
    TempPath f("roundtrip.ckpt");
    save_checkpoint(m, f.path);
    const std::string bytes = read_file(f.path);
    CHECK(bytes.substr(0, 8) == "CONCORD1");
    LoadedCheckpoint loaded = load_checkpoint(f.path);
    CHECK(checkpoint_bytes(loaded.model) == bytes);
}

TEST_CASE("corrupted checkpoints raise distinct errors") {
    const ModelConfig c = tiny_config();
    Rng rng(33);
    SiameseModel m = build_model(c, rng, layout_for(c));
    const std::string bytes = checkpoint_bytes(m);

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(load_checkpoint_bytes(bad), BadMagicError);
        CHECK_THROWS_AS(load_checkpoint_bytes("short"), BadMagicError);
    }
    SUBCASE("truncated payload") {
        const std::string cut = bytes.substr(0, bytes.size() - 8);
        CHECK_THROWS_AS(load_checkpoint_bytes(cut), TruncatedPayloadError);
    }
    SUBCASE("truncated header") {
        const std::string cut = bytes.substr(0, 20);
        CHECK_THROWS_AS(load_checkpoint_bytes(cut), TruncatedPayloadError);
    }
    SUBCASE("trailing bytes") {
        CHECK_THROWS_AS(load_checkpoint_bytes(bytes + "x"), CheckpointError);
    }
    SUBCASE("header shape disagrees with config, error names the layer") {
        // byte surgery: rewrite the declared shape of gru.Wz
        const std::size_t header_len =
            static_cast<std::size_t>(static_cast<unsigned char>(bytes[8])) |
            (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
        nlohmann::json header = nlohmann::json::parse(bytes.substr(16, header_len));
        header["params"][0]["shape"] = {9, 9};
        const std::string new_header = header.dump();
        std::string patched = bytes.substr(0, 8);
        for (int i = 0; i < 8; ++i)
            patched.push_back(static_cast<char>((new_header.size() >> (8 * i)) & 0xFF));
        patched += new_header;
        patched += bytes.substr(16 + header_len);
        CHECK_THROWS_WITH_AS(load_checkpoint_bytes(patched), doctest::Contains("gru.Wz"),
                             ShapeMismatchError);
    }
}

TEST_CASE("surgery replaces the head and keeps the encoder") {
    const ModelConfig c = tiny_config();
    Rng rng(34);
    SiameseModel m = build_model(c, rng, layout_for(c));
    const SiameseModel before = m;
    Rng surgery_rng(35);
    surgery_replace_head(m, surgery_rng);

    CHECK(same_bytes(m.gru.Wz, before.gru.Wz));
    CHECK(same_bytes(m.gru.Uh, before.gru.Uh));
    CHECK(same_bytes(m.input_bn.gamma, before.input_bn.gamma));
    CHECK(same_bytes(m.input_bn.running_var, before.input_bn.running_var));
    CHECK(m.dense1.out_dim() == 100);
    CHECK(m.dense2.out_dim() == 50);
    CHECK(m.out.in_dim() == 50);
    CHECK(m.out.out_dim() == 3);
    CHECK(m.dense1.in_dim() == c.concat_width());
    CHECK_FALSE(same_bytes(m.out.W, before.out.W));  // fresh head
    CHECK(m.trainable.gru);
    CHECK(m.trainable.out);
    // fresh batch norms
    for (double v : m.bn1.running_mean.data) CHECK(v == 0.0);
}

TEST_CASE("set_trainable_last_k maps onto the layer stack") {
    const ModelConfig c = tiny_config();
    Rng rng(36);
    SiameseModel m = build_model(c, rng, layout_for(c));
    set_trainable_last_k(m, 2);
    CHECK_FALSE(m.trainable.gru);
    CHECK_FALSE(m.trainable.dense1);
    CHECK(m.trainable.dense2);
    CHECK(m.trainable.out);
    set_trainable_last_k(m, 3);
    CHECK_FALSE(m.trainable.gru);
    CHECK(m.trainable.dense1);
    set_trainable_last_k(m, 1);
    CHECK_FALSE(m.trainable.dense2);
    CHECK(m.trainable.out);
    set_trainable_last_k(m, 4);
    CHECK(m.trainable.gru);
    CHECK_THROWS_AS(set_trainable_last_k(m, 0), ConfigError);
    CHECK_THROWS_AS(set_trainable_last_k(m, 5), ConfigError);
}

TEST_CASE("frozen layers stay byte-identical under training updates") {
    const ModelConfig c = tiny_config();
    Rng rng(37);
    SiameseModel m = build_model(c, rng, layout_for(c));
    set_trainable_last_k(m, 2);
    const SiameseModel before = m;

    Rng data(38), drop(39);
    const auto batch = random_batch(data, c, 4);
    const auto labels = cycling_labels(4);
    std::vector<NamedParam> params = trainable_parameters(m);
    std::vector<AdamState> slots;
    for (const NamedParam& p : params) slots.push_back(AdamState::init(*p.tensor));
    for (int step = 0; step < 5; ++step) {
        const ModelGrads g = loss_and_grads(m, batch, labels, drop);
        for (std::size_t i = 0; i < params.size(); ++i)
            adam_update(slots[i], *params[i].tensor, g.grads[i]);
    }
    // frozen: gru, input_bn (incl. running stats), dense1, bn1
    CHECK(same_bytes(m.gru.Wz, before.gru.Wz));
    CHECK(same_bytes(m.gru.bh, before.gru.bh));
    CHECK(same_bytes(m.input_bn.gamma, before.input_bn.gamma));
    CHECK(same_bytes(m.input_bn.running_mean, before.input_bn.running_mean));
    CHECK(same_bytes(m.dense1.W, before.dense1.W));
    CHECK(same_bytes(m.bn1.gamma, before.bn1.gamma));
    CHECK(same_bytes(m.bn1.running_var, before.bn1.running_var));
    // trainable: dense2, bn2, out moved
    CHECK_FALSE(same_bytes(m.dense2.W, before.dense2.W));
    CHECK_FALSE(same_bytes(m.out.W, before.out.W));
    // trainable bn2 also updates its running statistics
    CHECK_FALSE(same_bytes(m.bn2.running_mean, before.bn2.running_mean));
}

TEST_CASE("model config json round trip") {
    ModelConfig c = tiny_config(FeatureMode::gru_only);
    c.maxlen = 128;
    const ModelConfig back = model_config_from_json(model_config_to_json(c));
    CHECK(back.maxlen == 128);
    CHECK(back.feature_mode == FeatureMode::gru_only);
    CHECK(back.dense_sizes == c.dense_sizes);
    CHECK(model_config_to_json(back) == model_config_to_json(c));
}
