// Shared helpers for the test suites: tiny configs and random model inputs.
#pragma once

#include <string>
#include <vector>

#include "concord/model.hpp"
#include "concord/tensor.hpp"

namespace concord_test {

using namespace concord;

inline ModelConfig tiny_config(FeatureMode mode = FeatureMode::both) {
    ModelConfig c;
    c.embed_dim = 3;
    c.gru_hidden = 4;
    c.dense_sizes = {6, 5};
    c.maxlen = 3;
    c.dropout_rate = 0.0;
    c.lex_dim = mode == FeatureMode::gru_only ? 0 : 4;
    c.feature_mode = mode;
    return c;
}

inline std::vector<std::string> layout_for(const ModelConfig& c) {
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < c.lex_dim; ++i) keys.push_back("fix/c" + std::to_string(i));
    return keys;
}

inline PairFeatures random_pair(Rng& rng, const ModelConfig& c) {
    PairFeatures p;
    p.quote.matrix = Tensor::zeros({c.maxlen, c.embed_dim});
    p.response.matrix = Tensor::zeros({c.maxlen, c.embed_dim});
    for (double& v : p.quote.matrix.data) v = rng.next_uniform(-1.0, 1.0);
    for (double& v : p.response.matrix.data) v = rng.next_uniform(-1.0, 1.0);
    p.quote.real_length = c.maxlen;
    p.response.real_length = c.maxlen;
    p.quote_lex = Tensor::zeros({c.lex_dim});
    p.response_lex = Tensor::zeros({c.lex_dim});
    for (double& v : p.quote_lex.data) v = rng.next_uniform(-1.0, 1.0);
    for (double& v : p.response_lex.data) v = rng.next_uniform(-1.0, 1.0);
    return p;
}

inline std::vector<PairFeatures> random_batch(Rng& rng, const ModelConfig& c, std::size_t n) {
    std::vector<PairFeatures> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back(random_pair(rng, c));
    return batch;
}

inline std::vector<int> cycling_labels(std::size_t n) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 3);
    return labels;
}

inline bool same_bytes(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

}  // namespace concord_test
