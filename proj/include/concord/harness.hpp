#pragma once

#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/checkpoint.hpp"
#include "concord/datasets.hpp"
#include "concord/error.hpp"
#include "concord/lexicon.hpp"
#include "concord/model.hpp"
#include "concord/nn.hpp"
#include "concord/textprep.hpp"

namespace concord {

// ----------------------------- metrics ---------------------------------

using Confusion = std::array<std::array<long long, 3>, 3>;  // [truth][predicted]

struct Metrics {
    Confusion confusion{};
    std::array<double, 3> precision{}, recall{}, f1{};
    std::array<long long, 3> support{};  // true instances per class (row sums)
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

// Per-class precision/recall/F1 with the zero-denominator convention of 0,
// plus support-weighted averages.
inline Metrics compute_metrics(const Confusion& confusion) {
    long long total = 0;
    for (const auto& row : confusion)
        for (long long v : row) {
            if (v < 0) throw ConfigError("compute_metrics: negative confusion entry");
            total += v;
        }
    if (total == 0) throw Error("compute_metrics: empty evaluation (all-zero confusion matrix)");
    Metrics m;
    m.confusion = confusion;
    for (int c = 0; c < 3; ++c) {
        long long col = 0, row = 0;
        for (int k = 0; k < 3; ++k) {
            col += confusion[k][c];
            row += confusion[c][k];
        }
        const double diag = static_cast<double>(confusion[c][c]);
        m.support[c] = row;
        m.precision[c] = col == 0 ? 0.0 : diag / static_cast<double>(col);
        m.recall[c] = row == 0 ? 0.0 : diag / static_cast<double>(row);
        m.f1[c] = (m.precision[c] + m.recall[c]) == 0.0
                      ? 0.0
                      : 2.0 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c]);
        m.weighted_precision += static_cast<double>(row) * m.precision[c];
        m.weighted_recall += static_cast<double>(row) * m.recall[c];
        m.weighted_f1 += static_cast<double>(row) * m.f1[c];
    }
    m.weighted_precision /= static_cast<double>(total);
    m.weighted_recall /= static_cast<double>(total);
    m.weighted_f1 /= static_cast<double>(total);
    return m;
}

// --------------------------- vectorization -----------------------------

struct Example {
    PairFeatures features;
    int label = 0;
    std::string id;
};

// Turns raw pairs into model inputs: tokenize, embed + pad to the config's
// window, and featurize against the lexicon set. The embedding table may be
// null when the GRU branch is off, the lexicon set when the branch is off.
inline std::vector<Example> vectorize(const std::vector<QRPair>& pairs,
                                      const EmbeddingTable* embeddings,
                                      const LexiconSet* lexicons, const ModelConfig& config) {
    if (config.gru_active() && !embeddings)
        throw ConfigError("vectorize: feature mode needs embeddings");
    if (config.lex_active() && config.lex_dim > 0 && !lexicons)
        throw ConfigError("vectorize: feature mode needs lexicons");
    if (lexicons && config.lex_active() && lexicons->dim() != config.lex_dim)
        throw CompatibilityError("lexicon layout has " + std::to_string(lexicons->dim()) +
                                 " slots, config.lex_dim is " + std::to_string(config.lex_dim));
    std::vector<Example> out;
    out.reserve(pairs.size());
    for (const QRPair& p : pairs) {
        Example e;
        e.id = p.source_id;
        e.label = static_cast<int>(p.label);
        const std::vector<std::string> q_tokens = tokenize(p.quote_text);
        const std::vector<std::string> r_tokens = tokenize(p.response_text);
        if (config.gru_active()) {
            e.features.quote = embed_and_pad(q_tokens, *embeddings, config.maxlen);
            e.features.response = embed_and_pad(r_tokens, *embeddings, config.maxlen);
        }
        if (config.lex_active() && config.lex_dim > 0) {
            e.features.quote_lex = featurize(q_tokens, *lexicons).as_tensor();
            e.features.response_lex = featurize(r_tokens, *lexicons).as_tensor();
        } else {
            e.features.quote_lex = Tensor::zeros({0});
            e.features.response_lex = Tensor::zeros({0});
        }
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------- evaluation -------------------------------

inline int predict_class(const Tensor& probs) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(probs.size()); ++c)
        if (probs.data[static_cast<std::size_t>(c)] > probs.data[static_cast<std::size_t>(best)])
            best = c;  // ties break toward the lowest class index
    return best;
}

// Argmax over inference-mode probabilities (dropout off, running stats).
inline Metrics evaluate(const SiameseModel& model, const std::vector<Example>& examples) {
    if (examples.empty()) throw ConfigError("evaluate: empty dataset");
    Confusion confusion{};
    for (const Example& e : examples) {
        const Tensor probs = forward(model, e.features);
        confusion[static_cast<std::size_t>(e.label)]
                 [static_cast<std::size_t>(predict_class(probs))] += 1;
    }
    return compute_metrics(confusion);
}

// ----------------------------- training --------------------------------

struct TrainConfig {
    std::size_t batch_size = 64;
    double lr = 0.001;
    std::size_t max_epochs = 50;
    std::size_t patience = 5;  // epochs without dev weighted-F1 improvement
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    Metrics dev;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_dev_weighted_f1 = 0.0;
};

// Epoch loop with deterministic shuffling, Adam on every trainable
// parameter, per-epoch dev evaluation, and early stopping that restores
// the best-dev model (never the last). One splitmix64 stream drives both
// the shuffles and the dropout draws, in that order within an epoch.
inline TrainHistory train(SiameseModel& model, const std::vector<Example>& train_set,
                          const std::vector<Example>& dev_set, const TrainConfig& config,
                          AdamSnapshot* adam_out = nullptr) {
    if (train_set.size() < 2)
        throw ConfigError("train: need at least 2 training examples, got " +
                          std::to_string(train_set.size()));
    if (dev_set.empty()) throw ConfigError("train: empty dev set");
    if (config.batch_size < 2) throw ConfigError("train: batch_size must be >= 2 (batch norm)");
    if (config.patience < 1) throw ConfigError("train: patience must be >= 1");
    if (config.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");

    std::vector<NamedParam> params = trainable_parameters(model);
    std::vector<AdamState> slots;
    slots.reserve(params.size());
    for (const NamedParam& p : params) slots.push_back(AdamState::init(*p.tensor, config.lr));

    Rng rng(config.seed);
    TrainHistory history;
    SiameseModel best_model = model;
    AdamSnapshot best_adam;
    double best_f1 = -1.0;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        if (config.shuffle) {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[static_cast<std::size_t>(rng.next_below(i))]);
        }
        // chunk into batches; a trailing single example joins the previous
        // batch to satisfy the batch-norm minimum
        std::vector<std::pair<std::size_t, std::size_t>> batches;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size)
            batches.emplace_back(start, std::min(start + config.batch_size, order.size()));
        if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
            batches[batches.size() - 2].second = batches.back().second;
            batches.pop_back();
        }

        double loss_sum = 0.0;
        for (const auto& [lo, hi] : batches) {
            std::vector<PairFeatures> batch;
            std::vector<int> labels;
            batch.reserve(hi - lo);
            labels.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                batch.push_back(train_set[order[i]].features);
                labels.push_back(train_set[order[i]].label);
            }
            ModelGrads grads = loss_and_grads(model, batch, labels, rng);
            for (std::size_t p = 0; p < params.size(); ++p)
                adam_update(slots[p], *params[p].tensor, grads.grads[p]);
            loss_sum += grads.loss * static_cast<double>(hi - lo);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(train_set.size());
        rec.dev = evaluate(model, dev_set);
        history.epochs.push_back(rec);

        if (rec.dev.weighted_f1 > best_f1) {
            best_f1 = rec.dev.weighted_f1;
            history.best_epoch = epoch;
            best_model = model;
            best_adam.names.clear();
            best_adam.states = slots;
            for (const NamedParam& p : params) best_adam.names.push_back(p.name);
            since_best = 0;
        } else {
            ++since_best;
            if (since_best >= config.patience) break;
        }
    }
    history.best_dev_weighted_f1 = best_f1;
    model = std::move(best_model);
    if (adam_out) *adam_out = std::move(best_adam);
    return history;
}

inline nlohmann::json history_to_json(const TrainHistory& h) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const EpochRecord& r : h.epochs) {
        epochs.push_back({{"epoch", r.epoch},
                          {"train_loss", r.train_loss},
                          {"dev_precision", r.dev.weighted_precision},
                          {"dev_recall", r.dev.weighted_recall},
                          {"dev_weighted_f1", r.dev.weighted_f1}});
    }
    return nlohmann::json{{"epochs", epochs},
                          {"best_epoch", h.best_epoch},
                          {"best_dev_weighted_f1", h.best_dev_weighted_f1}};
}

// --------------------------- report formats ----------------------------

namespace detail {

inline std::string fmt_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

struct ReportRow {
    std::string system;  // row label: feature set, transfer mode, or maxlen
    Metrics metrics;
};

inline std::string report_csv(const std::vector<ReportRow>& rows,
                              const std::string& key_column = "system") {
    std::ostringstream out;
    out << key_column << ",precision,recall,weighted_f1\n";
    for (const ReportRow& r : rows)
        out << r.system << "," << detail::fmt_metric(r.metrics.weighted_precision) << ","
            << detail::fmt_metric(r.metrics.weighted_recall) << ","
            << detail::fmt_metric(r.metrics.weighted_f1) << "\n";
    return out.str();
}

// Per-class breakdown plus the weighted row, for single-model evaluation.
inline std::string metrics_csv(const Metrics& m) {
    std::ostringstream out;
    out << "class,precision,recall,f1,support\n";
    const char* names[3] = {"agree", "disagree", "none"};
    long long total = 0;
    for (int c = 0; c < 3; ++c) total += m.support[c];
    for (int c = 0; c < 3; ++c)
        out << names[c] << "," << detail::fmt_metric(m.precision[c]) << ","
            << detail::fmt_metric(m.recall[c]) << "," << detail::fmt_metric(m.f1[c]) << ","
            << m.support[c] << "\n";
    out << "weighted," << detail::fmt_metric(m.weighted_precision) << ","
        << detail::fmt_metric(m.weighted_recall) << "," << detail::fmt_metric(m.weighted_f1) << ","
        << total << "\n";
    return out.str();
}

// ---------------------------- experiments ------------------------------

// Bundles everything one training run needs.
struct RunData {
    std::vector<QRPair> train, dev, test;
    const EmbeddingTable* embeddings = nullptr;
    const LexiconSet* lexicons = nullptr;
};

namespace detail {

inline ReportRow run_one(const std::string& label, const RunData& data, ModelConfig mc,
                         const TrainConfig& tc, TrainHistory* history_out = nullptr,
                         SiameseModel* model_out = nullptr) {
    mc.lex_dim = mc.lex_active() && data.lexicons ? data.lexicons->dim() : 0;
    mc.validate();
    std::vector<std::string> layout;
    if (mc.lex_active() && data.lexicons) layout = data.lexicons->layout().keys();
    Rng init_rng(tc.seed);
    SiameseModel model = build_model(mc, init_rng, layout);
    const std::vector<Example> train_ex = vectorize(data.train, data.embeddings, data.lexicons, mc);
    const std::vector<Example> dev_ex = vectorize(data.dev, data.embeddings, data.lexicons, mc);
    const std::vector<Example> test_ex = vectorize(data.test, data.embeddings, data.lexicons, mc);
    TrainHistory history = train(model, train_ex, dev_ex, tc);
    ReportRow row{label, evaluate(model, test_ex)};
    if (history_out) *history_out = std::move(history);
    if (model_out) *model_out = std::move(model);
    return row;
}

}  // namespace detail

// Trains the three feature variants under identical seeds and reports
// test metrics for each.
inline std::vector<ReportRow> run_feature_ablation(const RunData& data, const ModelConfig& base,
                                                   const TrainConfig& tc) {
    std::vector<ReportRow> rows;
    const std::pair<const char*, FeatureMode> systems[3] = {
        {"Lexicons", FeatureMode::lex_only},
        {"GRU", FeatureMode::gru_only},
        {"GRU + Lexicons", FeatureMode::both},
    };
    for (const auto& [name, mode] : systems) {
        ModelConfig mc = base;
        mc.feature_mode = mode;
        rows.push_back(detail::run_one(name, data, mc, tc));
    }
    return rows;
}

// Trains one model per maximum sequence length under identical seeds.
inline std::vector<ReportRow> run_seqlen_sweep(const RunData& data, const ModelConfig& base,
                                               const TrainConfig& tc,
                                               const std::vector<std::size_t>& lengths = {32, 64,
                                                                                          128}) {
    std::vector<ReportRow> rows;
    for (std::size_t maxlen : lengths) {
        ModelConfig mc = base;
        mc.maxlen = maxlen;
        rows.push_back(detail::run_one(std::to_string(maxlen), data, mc, tc));
    }
    return rows;
}

// ------------------------------ transfer -------------------------------

enum class TransferMode { direct, tuning, transfer, retrain_last_2, retrain_last_3 };

inline const char* transfer_mode_name(TransferMode m) {
    switch (m) {
        case TransferMode::direct: return "direct";
        case TransferMode::tuning: return "tuning";
        case TransferMode::transfer: return "transfer";
        case TransferMode::retrain_last_2: return "retrain_last_2";
        default: return "retrain_last_3";
    }
}

inline TransferMode transfer_mode_from_string(const std::string& s) {
    if (s == "direct") return TransferMode::direct;
    if (s == "tuning") return TransferMode::tuning;
    if (s == "transfer") return TransferMode::transfer;
    if (s == "retrain_last_2") return TransferMode::retrain_last_2;
    if (s == "retrain_last_3") return TransferMode::retrain_last_3;
    throw ConfigError("unknown transfer mode '" + s +
                      "' (direct|tuning|transfer|retrain_last_2|retrain_last_3)");
}

// The pipeline the model was trained with must match the one the small
// dataset is vectorized with; checked before any training.
inline void check_transfer_compatible(const SiameseModel& model, const RunData& data) {
    if (model.config.lex_active()) {
        std::vector<std::string> layout;
        if (data.lexicons) layout = data.lexicons->layout().keys();
        if (layout != model.lex_layout)
            throw CompatibilityError(
                "lexicon layout of the dataset pipeline does not match the checkpoint (" +
                std::to_string(layout.size()) + " vs " + std::to_string(model.lex_layout.size()) +
                " slots)");
    }
    if (model.config.gru_active() && data.embeddings &&
        data.embeddings->dim != model.config.embed_dim)
        throw CompatibilityError("embedding dim " + std::to_string(data.embeddings->dim) +
                                 " does not match checkpoint embed_dim " +
                                 std::to_string(model.config.embed_dim));
}

// Applies one pre-trained model to a smaller dataset under the given mode:
// direct evaluation, full tuning, head-replacement surgery, or last-k
// retraining with everything else frozen.
inline ReportRow run_transfer(const SiameseModel& pretrained, const RunData& data,
                              TransferMode mode, const TrainConfig& tc,
                              SiameseModel* model_out = nullptr,
                              TrainHistory* history_out = nullptr) {
    check_transfer_compatible(pretrained, data);
    SiameseModel model = pretrained;
    const ModelConfig& mc = model.config;
    const std::vector<Example> test_ex = vectorize(data.test, data.embeddings, data.lexicons, mc);
    if (mode == TransferMode::direct) {
        if (model_out) *model_out = std::move(model);
        return {transfer_mode_name(mode), evaluate(pretrained, test_ex)};
    }
    switch (mode) {
        case TransferMode::tuning:
            model.trainable = {};  // everything trainable
            break;
        case TransferMode::transfer: {
            Rng rng(tc.seed);
            surgery_replace_head(model, rng);
            break;
        }
        case TransferMode::retrain_last_2:
            set_trainable_last_k(model, 2);
            break;
        case TransferMode::retrain_last_3:
            set_trainable_last_k(model, 3);
            break;
        default:
            break;
    }
    const std::vector<Example> train_ex = vectorize(data.train, data.embeddings, data.lexicons, mc);
    const std::vector<Example> dev_ex = vectorize(data.dev, data.embeddings, data.lexicons, mc);
    TrainHistory history = train(model, train_ex, dev_ex, tc);
    ReportRow row{transfer_mode_name(mode), evaluate(model, test_ex)};
    if (history_out) *history_out = std::move(history);
    if (model_out) *model_out = std::move(model);
    return row;
}

}  // namespace concord
