#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "concord/error.hpp"
#include "concord/nn.hpp"
#include "concord/tensor.hpp"
#include "concord/textprep.hpp"

namespace concord {

// --------------------------- configuration -----------------------------

enum class FeatureMode { lex_only, gru_only, both };

inline const char* feature_mode_name(FeatureMode m) {
    switch (m) {
        case FeatureMode::lex_only: return "lex_only";
        case FeatureMode::gru_only: return "gru_only";
        default: return "both";
    }
}

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "lex_only") return FeatureMode::lex_only;
    if (s == "gru_only") return FeatureMode::gru_only;
    if (s == "both") return FeatureMode::both;
    throw ConfigError("unknown feature_mode '" + s + "' (lex_only|gru_only|both)");
}

struct ModelConfig {
    std::size_t embed_dim = 300;
    std::size_t gru_hidden = 64;
    std::vector<std::size_t> dense_sizes{100, 50};
    std::size_t num_classes = 3;
    std::size_t maxlen = 64;
    double dropout_rate = 0.5;
    std::size_t lex_dim = 0;
    FeatureMode feature_mode = FeatureMode::both;

    bool gru_active() const { return feature_mode != FeatureMode::lex_only; }
    bool lex_active() const { return feature_mode != FeatureMode::gru_only; }

    // Width of the concatenated feature vector: both branches contribute
    // their sentence embedding and lexicon features.
    std::size_t concat_width() const {
        return 2 * ((gru_active() ? gru_hidden : 0) + (lex_active() ? lex_dim : 0));
    }

    void validate() const {
        if (num_classes != 3) throw ConfigError("num_classes must be 3");
        if (dense_sizes.size() != 2 || dense_sizes[0] == 0 || dense_sizes[1] == 0)
            throw ConfigError("dense_sizes must list exactly two positive widths");
        if (maxlen == 0) throw ConfigError("maxlen must be >= 1");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw ConfigError("dropout_rate must be in [0,1)");
        if (gru_active() && (embed_dim == 0 || gru_hidden == 0))
            throw ConfigError("embed_dim and gru_hidden must be positive when the GRU is active");
        if (feature_mode == FeatureMode::lex_only && lex_dim == 0)
            throw ConfigError("feature_mode=lex_only requires lex_dim > 0");
        if (concat_width() == 0) throw ConfigError("feature configuration yields empty input");
    }
};

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["embed_dim"] = c.embed_dim;
    j["gru_hidden"] = c.gru_hidden;
    j["dense_sizes"] = c.dense_sizes;
    j["num_classes"] = c.num_classes;
    j["maxlen"] = c.maxlen;
    j["dropout_rate"] = c.dropout_rate;
    j["lex_dim"] = c.lex_dim;
    j["feature_mode"] = feature_mode_name(c.feature_mode);
    return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.gru_hidden = j.at("gru_hidden").get<std::size_t>();
    c.dense_sizes = j.at("dense_sizes").get<std::vector<std::size_t>>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.maxlen = j.at("maxlen").get<std::size_t>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.lex_dim = j.at("lex_dim").get<std::size_t>();
    c.feature_mode = feature_mode_from_string(j.at("feature_mode").get<std::string>());
    return c;
}

// ------------------------------ model ----------------------------------

// Siamese fusion classifier: ONE GRU encodes both quote and response (the
// branches share parameter tensors by construction), the concatenated
// features pass through batch norm and two relu dense blocks with dropout,
// and a 3-way softmax head.
struct SiameseModel {
    ModelConfig config;
    std::vector<std::string> lex_layout;  // feature slot keys, for compat checks

    GRULayer gru;             // empty tensors when feature_mode == lex_only
    BatchNormLayer input_bn;  // over the concatenated feature vector
    DenseLayer dense1, dense2, out;
    BatchNormLayer bn1, bn2;

    // Freezing granularity: batch-norm layers share their host's flag and
    // input_bn groups with the gru. A frozen batch norm also stops updating
    // its running statistics and normalizes by them instead.
    struct Trainable {
        bool gru = true, dense1 = true, dense2 = true, out = true;
    } trainable;

    bool has_gru() const { return config.gru_active(); }
};

struct NamedParam {
    std::string name;
    Tensor* tensor;
};

struct NamedParamConst {
    std::string name;
    const Tensor* tensor;
};

namespace detail {

// Fixed declared order; the checkpoint payload and the Adam slots follow it.
template <typename ModelT, typename Visit>
void visit_all_params(ModelT& m, Visit&& visit) {
    if (m.has_gru()) {
        visit("gru.Wz", m.gru.Wz);
        visit("gru.Wr", m.gru.Wr);
        visit("gru.Wh", m.gru.Wh);
        visit("gru.Uz", m.gru.Uz);
        visit("gru.Ur", m.gru.Ur);
        visit("gru.Uh", m.gru.Uh);
        visit("gru.bz", m.gru.bz);
        visit("gru.br", m.gru.br);
        visit("gru.bh", m.gru.bh);
    }
    visit("input_bn.gamma", m.input_bn.gamma);
    visit("input_bn.beta", m.input_bn.beta);
    visit("input_bn.running_mean", m.input_bn.running_mean);
    visit("input_bn.running_var", m.input_bn.running_var);
    visit("dense1.W", m.dense1.W);
    visit("dense1.b", m.dense1.b);
    visit("bn1.gamma", m.bn1.gamma);
    visit("bn1.beta", m.bn1.beta);
    visit("bn1.running_mean", m.bn1.running_mean);
    visit("bn1.running_var", m.bn1.running_var);
    visit("dense2.W", m.dense2.W);
    visit("dense2.b", m.dense2.b);
    visit("bn2.gamma", m.bn2.gamma);
    visit("bn2.beta", m.bn2.beta);
    visit("bn2.running_mean", m.bn2.running_mean);
    visit("bn2.running_var", m.bn2.running_var);
    visit("out.W", m.out.W);
    visit("out.b", m.out.b);
}

// Gradient targets: same order, running stats excluded, frozen layers
// filtered out.
template <typename ModelT, typename Visit>
void visit_trainable_params(ModelT& m, Visit&& visit) {
    if (m.has_gru() && m.trainable.gru) {
        visit("gru.Wz", m.gru.Wz);
        visit("gru.Wr", m.gru.Wr);
        visit("gru.Wh", m.gru.Wh);
        visit("gru.Uz", m.gru.Uz);
        visit("gru.Ur", m.gru.Ur);
        visit("gru.Uh", m.gru.Uh);
        visit("gru.bz", m.gru.bz);
        visit("gru.br", m.gru.br);
        visit("gru.bh", m.gru.bh);
    }
    if (m.trainable.gru) {
        visit("input_bn.gamma", m.input_bn.gamma);
        visit("input_bn.beta", m.input_bn.beta);
    }
    if (m.trainable.dense1) {
        visit("dense1.W", m.dense1.W);
        visit("dense1.b", m.dense1.b);
        visit("bn1.gamma", m.bn1.gamma);
        visit("bn1.beta", m.bn1.beta);
    }
    if (m.trainable.dense2) {
        visit("dense2.W", m.dense2.W);
        visit("dense2.b", m.dense2.b);
        visit("bn2.gamma", m.bn2.gamma);
        visit("bn2.beta", m.bn2.beta);
    }
    if (m.trainable.out) {
        visit("out.W", m.out.W);
        visit("out.b", m.out.b);
    }
}

}  // namespace detail

inline std::vector<NamedParam> all_parameters(SiameseModel& m) {
    std::vector<NamedParam> out;
    detail::visit_all_params(m, [&](const char* n, Tensor& t) { out.push_back({n, &t}); });
    return out;
}

inline std::vector<NamedParamConst> all_parameters(const SiameseModel& m) {
    std::vector<NamedParamConst> out;
    detail::visit_all_params(m, [&](const char* n, const Tensor& t) { out.push_back({n, &t}); });
    return out;
}

inline std::vector<NamedParam> trainable_parameters(SiameseModel& m) {
    std::vector<NamedParam> out;
    detail::visit_trainable_params(m, [&](const char* n, Tensor& t) { out.push_back({n, &t}); });
    return out;
}

// ------------------------------ building -------------------------------

// Initialization order is fixed (gru matrices, then dense1, dense2, out)
// so one seed always yields one parameter set.
inline SiameseModel build_model(const ModelConfig& config, Rng& rng,
                                std::vector<std::string> lex_layout = {}) {
    config.validate();
    if (!lex_layout.empty() && lex_layout.size() != config.lex_dim)
        throw ConfigError("lexicon layout has " + std::to_string(lex_layout.size()) +
                          " slots but config.lex_dim is " + std::to_string(config.lex_dim));
    SiameseModel m;
    m.config = config;
    m.lex_layout = std::move(lex_layout);
    if (config.gru_active()) m.gru = GRULayer::init(config.embed_dim, config.gru_hidden, rng);
    const std::size_t width = config.concat_width();
    m.input_bn = BatchNormLayer::init(width);
    m.dense1 = DenseLayer::init(width, config.dense_sizes[0], rng);
    m.bn1 = BatchNormLayer::init(config.dense_sizes[0]);
    m.dense2 = DenseLayer::init(config.dense_sizes[0], config.dense_sizes[1], rng);
    m.bn2 = BatchNormLayer::init(config.dense_sizes[1]);
    m.out = DenseLayer::init(config.dense_sizes[1], config.num_classes, rng);
    return m;
}

// ------------------------------ forward --------------------------------

// Vectorized (quote, response) pair. Token windows are ignored when the
// GRU branch is off; lexicon tensors likewise when the branch is off.
struct PairFeatures {
    TokenWindow quote, response;
    Tensor quote_lex, response_lex;  // [lex_dim]
};

namespace detail {

inline void check_pair(const ModelConfig& c, const PairFeatures& p) {
    if (c.gru_active()) {
        for (const TokenWindow* w : {&p.quote, &p.response})
            if (w->matrix.rows() != c.maxlen || w->matrix.cols() != c.embed_dim)
                throw DimensionError("pair window " + shape_str(w->matrix) +
                                     " does not match config [" + std::to_string(c.maxlen) + "x" +
                                     std::to_string(c.embed_dim) + "]");
    }
    if (c.lex_active()) {
        for (const Tensor* t : {&p.quote_lex, &p.response_lex})
            if (!t->is_vector() || t->size() != c.lex_dim)
                throw DimensionError("pair lexicon features " + shape_str(*t) +
                                     " do not match lex_dim=" + std::to_string(c.lex_dim));
    }
}

struct BNApplied {
    bool trained = false;   // ran in batch-statistics mode
    BatchNormCache cache;   // when trained
    Tensor x;               // input copy, for the inference-mode gradient
    Tensor y;
};

template <typename BN>
BNApplied apply_bn(BN& layer, const Tensor& x, bool train_mode, bool update_running) {
    BNApplied a;
    a.x = x;
    if (train_mode) {
        auto [y, cache] = batchnorm_forward_train(layer, x, update_running);
        a.trained = true;
        a.cache = std::move(cache);
        a.y = std::move(y);
    } else {
        a.y = batchnorm_forward_infer(layer, x);
    }
    return a;
}

inline BatchNormGrads bn_grads(const BatchNormLayer& layer, const BNApplied& a, const Tensor& dy) {
    if (a.trained) return batchnorm_backward(layer, a.cache, dy);
    return batchnorm_backward_infer(layer, a.x, dy);
}

struct ForwardCache {
    std::vector<GRUCache> q_caches, r_caches;
    Tensor concat;
    BNApplied bn0, bn1a, bn2a;
    Tensor z1, relu1, mask1, drop1;
    Tensor z2, relu2, mask2, drop2;
    Tensor logits;
};

// Shared forward path. In training mode, trainable batch-norm layers use
// batch statistics (and update running stats when asked); frozen ones stay
// in inference mode so frozen layers are byte-stable under training.
inline Tensor forward_impl(SiameseModel& m, const std::vector<PairFeatures>& batch, bool training,
                           Rng& rng, bool update_running, ForwardCache* cache) {
    if (batch.empty()) throw ConfigError("forward: empty batch");
    const ModelConfig& c = m.config;
    for (const PairFeatures& p : batch) check_pair(c, p);

    const std::size_t n = batch.size();
    const std::size_t width = c.concat_width();
    Tensor concat = Tensor::zeros({n, width});
    if (cache) {
        cache->q_caches.clear();
        cache->r_caches.clear();
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t col = 0;
        auto put = [&](const Tensor& v) {
            for (std::size_t j = 0; j < v.size(); ++j) concat.at(i, col + j) = v.data[j];
            col += v.size();
        };
        if (c.gru_active()) {
            auto [hq, qc] = gru_forward(m.gru, batch[i].quote.matrix);
            put(hq);
            if (c.lex_active()) put(batch[i].quote_lex);
            auto [hr, rc] = gru_forward(m.gru, batch[i].response.matrix);
            put(hr);
            if (c.lex_active()) put(batch[i].response_lex);
            if (cache) {
                cache->q_caches.push_back(std::move(qc));
                cache->r_caches.push_back(std::move(rc));
            }
        } else {
            put(batch[i].quote_lex);
            put(batch[i].response_lex);
        }
    }

    BNApplied bn0 = apply_bn(m.input_bn, concat, training && m.trainable.gru, update_running);
    Tensor z1 = dense_forward(m.dense1, bn0.y);
    BNApplied bn1a = apply_bn(m.bn1, z1, training && m.trainable.dense1, update_running);
    Tensor relu1 = relu(bn1a.y);
    DropoutResult d1 = dropout_forward({c.dropout_rate}, relu1, training, rng);
    Tensor z2 = dense_forward(m.dense2, d1.y);
    BNApplied bn2a = apply_bn(m.bn2, z2, training && m.trainable.dense2, update_running);
    Tensor relu2 = relu(bn2a.y);
    DropoutResult d2 = dropout_forward({c.dropout_rate}, relu2, training, rng);
    Tensor logits = dense_forward(m.out, d2.y);

    if (cache) {
        cache->concat = std::move(concat);
        cache->bn0 = std::move(bn0);
        cache->z1 = std::move(z1);
        cache->bn1a = std::move(bn1a);
        cache->relu1 = std::move(relu1);
        cache->mask1 = std::move(d1.mask);
        cache->drop1 = std::move(d1.y);
        cache->z2 = std::move(z2);
        cache->bn2a = std::move(bn2a);
        cache->relu2 = std::move(relu2);
        cache->mask2 = std::move(d2.mask);
        cache->drop2 = std::move(d2.y);
        cache->logits = logits;
    }
    return logits;
}

}  // namespace detail

// Inference forward for one pair: dropout off, batch norm on running stats.
inline Tensor forward(const SiameseModel& model, const PairFeatures& pair) {
    Rng unused(0);
    auto& m = const_cast<SiameseModel&>(model);  // inference path never mutates
    Tensor logits = detail::forward_impl(m, {pair}, /*training=*/false, unused,
                                         /*update_running=*/false, nullptr);
    Tensor probs = softmax(logits);
    return Tensor::vector_of(std::vector<double>(probs.data.begin(), probs.data.end()));
}

// Mode-selectable entry point; training mode requires a batch (see the loss
// path), so a single-pair training call fails the batch-norm minimum.
inline Tensor forward(SiameseModel& model, const PairFeatures& pair, bool training, Rng& rng) {
    Tensor logits =
        detail::forward_impl(model, {pair}, training, rng, /*update_running=*/training, nullptr);
    Tensor probs = softmax(logits);
    return Tensor::vector_of(std::vector<double>(probs.data.begin(), probs.data.end()));
}

// ---------------------------- loss + grads -----------------------------

struct ModelGrads {
    double loss = 0.0;
    std::vector<std::string> names;  // aligned with trainable_parameters order
    std::vector<Tensor> grads;
};

namespace detail {

inline Tensor relu_backward(const Tensor& relu_out, const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (relu_out.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
}

}  // namespace detail

// Mean cross-entropy over the batch plus gradients for every trainable
// layer. The shared GRU accumulates the quote-branch and response-branch
// contributions of every sample into one gradient.
inline ModelGrads loss_and_grads(SiameseModel& m, const std::vector<PairFeatures>& batch,
                                 const std::vector<int>& labels, Rng& rng,
                                 bool update_running = true) {
    if (batch.empty()) throw ConfigError("loss_and_grads: empty batch");
    if (labels.size() != batch.size())
        throw ConfigError("loss_and_grads: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(batch.size()) + " pairs");
    detail::ForwardCache fc;
    Tensor logits = detail::forward_impl(m, batch, /*training=*/true, rng, update_running, &fc);
    XentResult xent = softmax_xent(logits, labels);

    // head
    DenseGrads g_out = dense_backward(m.out, fc.drop2, xent.dlogits);
    Tensor d_relu2 = dropout_backward(fc.mask2, g_out.dx);
    Tensor d_bn2y = detail::relu_backward(fc.relu2, d_relu2);
    BatchNormGrads g_bn2 = detail::bn_grads(m.bn2, fc.bn2a, d_bn2y);
    DenseGrads g_d2 = dense_backward(m.dense2, fc.drop1, g_bn2.dx);
    Tensor d_relu1 = dropout_backward(fc.mask1, g_d2.dx);
    Tensor d_bn1y = detail::relu_backward(fc.relu1, d_relu1);
    BatchNormGrads g_bn1 = detail::bn_grads(m.bn1, fc.bn1a, d_bn1y);
    DenseGrads g_d1 = dense_backward(m.dense1, fc.bn0.y, g_bn1.dx);
    BatchNormGrads g_bn0 = detail::bn_grads(m.input_bn, fc.bn0, g_d1.dx);

    // shared encoder: sum of both branches over all samples
    GRUGrads gru_acc;
    const ModelConfig& c = m.config;
    if (c.gru_active() && m.trainable.gru) {
        gru_acc = GRUGrads::zeros_like(m.gru, 1);
        const std::size_t h = c.gru_hidden;
        const std::size_t l = c.lex_active() ? c.lex_dim : 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            Tensor dh_q = Tensor::zeros({h}), dh_r = Tensor::zeros({h});
            for (std::size_t j = 0; j < h; ++j) {
                dh_q.data[j] = g_bn0.dx.at(i, j);
                dh_r.data[j] = g_bn0.dx.at(i, h + l + j);
            }
            gru_acc.accumulate(gru_backward(m.gru, fc.q_caches[i], dh_q));
            gru_acc.accumulate(gru_backward(m.gru, fc.r_caches[i], dh_r));
        }
    }

    ModelGrads result;
    result.loss = xent.loss;
    auto push = [&](const char* name, Tensor g) {
        result.names.emplace_back(name);
        result.grads.push_back(std::move(g));
    };
    if (c.gru_active() && m.trainable.gru) {
        push("gru.Wz", std::move(gru_acc.dWz));
        push("gru.Wr", std::move(gru_acc.dWr));
        push("gru.Wh", std::move(gru_acc.dWh));
        push("gru.Uz", std::move(gru_acc.dUz));
        push("gru.Ur", std::move(gru_acc.dUr));
        push("gru.Uh", std::move(gru_acc.dUh));
        push("gru.bz", std::move(gru_acc.dbz));
        push("gru.br", std::move(gru_acc.dbr));
        push("gru.bh", std::move(gru_acc.dbh));
    }
    if (m.trainable.gru) {
        push("input_bn.gamma", std::move(g_bn0.dgamma));
        push("input_bn.beta", std::move(g_bn0.dbeta));
    }
    if (m.trainable.dense1) {
        push("dense1.W", std::move(g_d1.dW));
        push("dense1.b", std::move(g_d1.db));
        push("bn1.gamma", std::move(g_bn1.dgamma));
        push("bn1.beta", std::move(g_bn1.dbeta));
    }
    if (m.trainable.dense2) {
        push("dense2.W", std::move(g_d2.dW));
        push("dense2.b", std::move(g_d2.db));
        push("bn2.gamma", std::move(g_bn2.dgamma));
        push("bn2.beta", std::move(g_bn2.dbeta));
    }
    if (m.trainable.out) {
        push("out.W", std::move(g_out.dW));
        push("out.b", std::move(g_out.db));
    }
    return result;
}

// Training-mode loss as a pure function of the parameters: dropout masks
// come from a fresh stream of the given seed and running stats are left
// untouched. This is what the finite-difference checker evaluates.
inline double training_loss(SiameseModel& m, const std::vector<PairFeatures>& batch,
                            const std::vector<int>& labels, std::uint64_t dropout_seed) {
    Rng rng(dropout_seed);
    Tensor logits = detail::forward_impl(m, batch, /*training=*/true, rng,
                                         /*update_running=*/false, nullptr);
    return softmax_xent(logits, labels).loss;
}

// --------------------------- transfer surgery --------------------------

// Strips the classifier stack (dense1, dense2, out and their batch norms)
// and installs freshly initialized dense layers of width 100 and 50 plus a
// new 3-way output layer. The shared encoder and input batch norm are kept
// byte-identical; the rebuilt model is fully trainable.
inline void surgery_replace_head(SiameseModel& m, Rng& rng) {
    m.config.dense_sizes = {100, 50};
    const std::size_t width = m.config.concat_width();
    m.dense1 = DenseLayer::init(width, 100, rng);
    m.bn1 = BatchNormLayer::init(100);
    m.dense2 = DenseLayer::init(100, 50, rng);
    m.bn2 = BatchNormLayer::init(50);
    m.out = DenseLayer::init(50, m.config.num_classes, rng);
    m.trainable = {};
}

// The ordered trainable-layer list is [gru, dense1, dense2, out]; only the
// last k stay trainable. Batch norms share their host's flag.
inline void set_trainable_last_k(SiameseModel& m, std::size_t k) {
    if (k < 1 || k > 4)
        throw ConfigError("set_trainable_last_k: k must be in 1..4, got " + std::to_string(k));
    m.trainable.gru = k >= 4;
    m.trainable.dense1 = k >= 3;
    m.trainable.dense2 = k >= 2;
    m.trainable.out = k >= 1;
}

}  // namespace concord
