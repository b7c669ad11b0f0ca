#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "concord/error.hpp"
#include "concord/tensor.hpp"

namespace concord {

// ----------------------------- dense ----------------------------------

struct DenseLayer {
    Tensor W;  // [in x out]
    Tensor b;  // [out]

    static DenseLayer init(std::size_t in, std::size_t out, Rng& rng) {
        DenseLayer l;
        l.W = glorot_uniform(rng, in, out);
        l.b = Tensor::zeros({out});
        return l;
    }

    std::size_t in_dim() const { return W.rows(); }
    std::size_t out_dim() const { return W.cols(); }
};

// y = x @ W + b, x is a batch [n x in].
inline Tensor dense_forward(const DenseLayer& layer, const Tensor& x) {
    return add_row_broadcast(matmul(x, layer.W), layer.b);
}

struct DenseGrads {
    Tensor dW, db, dx;
};

inline DenseGrads dense_backward(const DenseLayer& layer, const Tensor& x, const Tensor& dy) {
    if (dy.cols() != layer.out_dim() || dy.rows() != x.rows())
        throw DimensionError("dense_backward: dy " + shape_str(dy) + " does not match x " +
                             shape_str(x) + " and W " + shape_str(layer.W));
    DenseGrads g;
    g.dW = matmul(transpose(x), dy);
    g.db = column_sums(dy);
    g.dx = matmul(dy, transpose(layer.W));
    return g;
}

// ------------------------------ GRU ------------------------------------

// Gate convention: z gates the candidate,
//   h_t = (1 - z) * h_prev + z * hcand.
struct GRULayer {
    Tensor Wz, Wr, Wh;  // [in x hidden]
    Tensor Uz, Ur, Uh;  // [hidden x hidden]
    Tensor bz, br, bh;  // [hidden]

    static GRULayer init(std::size_t in, std::size_t hidden, Rng& rng) {
        GRULayer l;
        l.Wz = glorot_uniform(rng, in, hidden);
        l.Wr = glorot_uniform(rng, in, hidden);
        l.Wh = glorot_uniform(rng, in, hidden);
        l.Uz = glorot_uniform(rng, hidden, hidden);
        l.Ur = glorot_uniform(rng, hidden, hidden);
        l.Uh = glorot_uniform(rng, hidden, hidden);
        l.bz = Tensor::zeros({hidden});
        l.br = Tensor::zeros({hidden});
        l.bh = Tensor::zeros({hidden});
        return l;
    }

    std::size_t in_dim() const { return Wz.rows(); }
    std::size_t hidden_dim() const { return Wz.cols(); }
};

struct GRUStepCache {
    Tensor x, h_prev, z, r, hcand, rh;  // rh = r * h_prev
};

namespace detail {

inline GRUStepCache gru_step_impl(const GRULayer& l, const Tensor& x_t, const Tensor& h_prev) {
    if (!x_t.is_vector() || x_t.size() != l.in_dim())
        throw DimensionError("gru_step: x " + shape_str(x_t) + " does not match layer in=" +
                             std::to_string(l.in_dim()));
    if (!h_prev.is_vector() || h_prev.size() != l.hidden_dim())
        throw DimensionError("gru_step: h_prev " + shape_str(h_prev) +
                             " does not match layer hidden=" + std::to_string(l.hidden_dim()));
    GRUStepCache c;
    c.x = x_t;
    c.h_prev = h_prev;
    c.z = sigmoid(add(add(vecmat(x_t, l.Wz), vecmat(h_prev, l.Uz)), l.bz));
    c.r = sigmoid(add(add(vecmat(x_t, l.Wr), vecmat(h_prev, l.Ur)), l.br));
    c.rh = mul(c.r, h_prev);
    c.hcand = tanh(add(add(vecmat(x_t, l.Wh), vecmat(c.rh, l.Uh)), l.bh));
    return c;
}

inline Tensor gru_step_output(const GRUStepCache& c) {
    const std::size_t h = c.z.size();
    Tensor out = Tensor::zeros({h});
    for (std::size_t i = 0; i < h; ++i)
        out.data[i] = (1.0 - c.z.data[i]) * c.h_prev.data[i] + c.z.data[i] * c.hcand.data[i];
    return out;
}

}  // namespace detail

inline Tensor gru_step(const GRULayer& layer, const Tensor& x_t, const Tensor& h_prev) {
    return detail::gru_step_output(detail::gru_step_impl(layer, x_t, h_prev));
}

struct GRUCache {
    std::size_t in = 0, hidden = 0;
    std::vector<GRUStepCache> steps;
};

// Runs the cell over xs [T x in] from h_0 = 0; the returned vector is the
// final hidden state, used as the sentence embedding.
inline std::pair<Tensor, GRUCache> gru_forward(const GRULayer& layer, const Tensor& xs) {
    if (!xs.is_matrix() || xs.cols() != layer.in_dim())
        throw DimensionError("gru_forward: xs " + shape_str(xs) + " does not match layer in=" +
                             std::to_string(layer.in_dim()));
    if (xs.rows() == 0) throw DimensionError("gru_forward: empty sequence");
    GRUCache cache;
    cache.in = layer.in_dim();
    cache.hidden = layer.hidden_dim();
    cache.steps.reserve(xs.rows());
    Tensor h = Tensor::zeros({layer.hidden_dim()});
    for (std::size_t t = 0; t < xs.rows(); ++t) {
        Tensor x_t({xs.cols()}, std::vector<double>(xs.data.begin() + t * xs.cols(),
                                                    xs.data.begin() + (t + 1) * xs.cols()));
        cache.steps.push_back(detail::gru_step_impl(layer, x_t, h));
        h = detail::gru_step_output(cache.steps.back());
    }
    return {std::move(h), std::move(cache)};
}

struct GRUGrads {
    Tensor dWz, dWr, dWh, dUz, dUr, dUh, dbz, dbr, dbh;
    Tensor dxs;  // [T x in]

    static GRUGrads zeros_like(const GRULayer& l, std::size_t T) {
        GRUGrads g;
        g.dWz = Tensor::zeros(l.Wz.shape);
        g.dWr = Tensor::zeros(l.Wr.shape);
        g.dWh = Tensor::zeros(l.Wh.shape);
        g.dUz = Tensor::zeros(l.Uz.shape);
        g.dUr = Tensor::zeros(l.Ur.shape);
        g.dUh = Tensor::zeros(l.Uh.shape);
        g.dbz = Tensor::zeros(l.bz.shape);
        g.dbr = Tensor::zeros(l.br.shape);
        g.dbh = Tensor::zeros(l.bh.shape);
        g.dxs = Tensor::zeros({T, l.in_dim()});
        return g;
    }

    void accumulate(const GRUGrads& o) {
        add_inplace(dWz, o.dWz);
        add_inplace(dWr, o.dWr);
        add_inplace(dWh, o.dWh);
        add_inplace(dUz, o.dUz);
        add_inplace(dUr, o.dUr);
        add_inplace(dUh, o.dUh);
        add_inplace(dbz, o.dbz);
        add_inplace(dbr, o.dbr);
        add_inplace(dbh, o.dbh);
    }
};

// Backpropagation through time. The cache must come from a gru_forward on
// the same layer; a dimension mismatch is a contract violation.
inline GRUGrads gru_backward(const GRULayer& layer, const GRUCache& cache, const Tensor& dh_last) {
    if (cache.steps.empty() || cache.in != layer.in_dim() || cache.hidden != layer.hidden_dim())
        throw ContractError("gru_backward: cache does not match layer (cache in=" +
                            std::to_string(cache.in) + " hidden=" + std::to_string(cache.hidden) +
                            ", layer in=" + std::to_string(layer.in_dim()) + " hidden=" +
                            std::to_string(layer.hidden_dim()) + ")");
    if (!dh_last.is_vector() || dh_last.size() != layer.hidden_dim())
        throw ContractError("gru_backward: dh " + shape_str(dh_last) + " does not match hidden=" +
                            std::to_string(layer.hidden_dim()));
    const std::size_t T = cache.steps.size();
    const std::size_t H = layer.hidden_dim();
    GRUGrads g = GRUGrads::zeros_like(layer, T);
    Tensor dh = dh_last;
    for (std::size_t ti = T; ti-- > 0;) {
        const GRUStepCache& c = cache.steps[ti];
        Tensor dz = Tensor::zeros({H}), dhc = Tensor::zeros({H}), dh_prev = Tensor::zeros({H});
        for (std::size_t i = 0; i < H; ++i) {
            dz.data[i] = dh.data[i] * (c.hcand.data[i] - c.h_prev.data[i]);
            dhc.data[i] = dh.data[i] * c.z.data[i];
            dh_prev.data[i] = dh.data[i] * (1.0 - c.z.data[i]);
        }
        // candidate branch, through tanh
        Tensor da_h = Tensor::zeros({H});
        for (std::size_t i = 0; i < H; ++i)
            da_h.data[i] = dhc.data[i] * (1.0 - c.hcand.data[i] * c.hcand.data[i]);
        add_inplace(g.dWh, outer(c.x, da_h));
        add_inplace(g.dUh, outer(c.rh, da_h));
        add_inplace(g.dbh, da_h);
        Tensor drh = matvec(layer.Uh, da_h);
        Tensor dr = mul(drh, c.h_prev);
        add_inplace(dh_prev, mul(drh, c.r));
        Tensor dx = matvec(layer.Wh, da_h);
        // update gate, through sigmoid
        Tensor da_z = Tensor::zeros({H});
        for (std::size_t i = 0; i < H; ++i)
            da_z.data[i] = dz.data[i] * c.z.data[i] * (1.0 - c.z.data[i]);
        add_inplace(g.dWz, outer(c.x, da_z));
        add_inplace(g.dUz, outer(c.h_prev, da_z));
        add_inplace(g.dbz, da_z);
        add_inplace(dx, matvec(layer.Wz, da_z));
        add_inplace(dh_prev, matvec(layer.Uz, da_z));
        // reset gate, through sigmoid
        Tensor da_r = Tensor::zeros({H});
        for (std::size_t i = 0; i < H; ++i)
            da_r.data[i] = dr.data[i] * c.r.data[i] * (1.0 - c.r.data[i]);
        add_inplace(g.dWr, outer(c.x, da_r));
        add_inplace(g.dUr, outer(c.h_prev, da_r));
        add_inplace(g.dbr, da_r);
        add_inplace(dx, matvec(layer.Wr, da_r));
        add_inplace(dh_prev, matvec(layer.Ur, da_r));

        for (std::size_t j = 0; j < dx.size(); ++j) g.dxs.at(ti, j) = dx.data[j];
        dh = std::move(dh_prev);
    }
    return g;
}

// --------------------------- batch norm --------------------------------

struct BatchNormLayer {
    Tensor gamma, beta;               // [d]
    Tensor running_mean, running_var; // [d]
    double momentum = 0.99;
    double eps = 1e-3;

    static BatchNormLayer init(std::size_t d) {
        BatchNormLayer l;
        l.gamma = Tensor::full({d}, 1.0);
        l.beta = Tensor::zeros({d});
        l.running_mean = Tensor::zeros({d});
        l.running_var = Tensor::full({d}, 1.0);
        return l;
    }

    std::size_t dim() const { return gamma.size(); }
};

struct BatchNormCache {
    Tensor xhat;     // [n x d]
    Tensor inv_std;  // [d]
};

// Training-mode normalization by batch statistics (biased variance).
// Updates running stats as running = momentum*running + (1-momentum)*batch
// only when update_running is set; the loss value itself never depends on
// the running stats in training mode.
inline std::pair<Tensor, BatchNormCache> batchnorm_forward_train(BatchNormLayer& layer,
                                                                 const Tensor& x,
                                                                 bool update_running = true) {
    if (!x.is_matrix() || x.cols() != layer.dim())
        throw DimensionError("batchnorm: x " + shape_str(x) + " does not match d=" +
                             std::to_string(layer.dim()));
    const std::size_t n = x.rows(), d = x.cols();
    if (n < 2)
        throw ConfigError("batchnorm: training mode needs a batch of at least 2, got " +
                          std::to_string(n));
    Tensor mean = Tensor::zeros({d}), var = Tensor::zeros({d});
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x.at(i, j);
        mu /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = x.at(i, j) - mu;
            v += c * c;
        }
        mean.data[j] = mu;
        var.data[j] = v / static_cast<double>(n);
    }
    BatchNormCache cache;
    cache.inv_std = Tensor::zeros({d});
    for (std::size_t j = 0; j < d; ++j)
        cache.inv_std.data[j] = 1.0 / std::sqrt(var.data[j] + layer.eps);
    cache.xhat = Tensor::zeros({n, d});
    Tensor y = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (x.at(i, j) - mean.data[j]) * cache.inv_std.data[j];
            cache.xhat.at(i, j) = xh;
            y.at(i, j) = layer.gamma.data[j] * xh + layer.beta.data[j];
        }
    if (update_running) {
        for (std::size_t j = 0; j < d; ++j) {
            layer.running_mean.data[j] =
                layer.momentum * layer.running_mean.data[j] + (1.0 - layer.momentum) * mean.data[j];
            layer.running_var.data[j] =
                layer.momentum * layer.running_var.data[j] + (1.0 - layer.momentum) * var.data[j];
        }
    }
    return {std::move(y), std::move(cache)};
}

// Inference-mode normalization by running statistics: a fixed affine map.
inline Tensor batchnorm_forward_infer(const BatchNormLayer& layer, const Tensor& x) {
    if (!x.is_matrix() || x.cols() != layer.dim())
        throw DimensionError("batchnorm: x " + shape_str(x) + " does not match d=" +
                             std::to_string(layer.dim()));
    Tensor y = x;
    for (std::size_t j = 0; j < layer.dim(); ++j) {
        double inv = 1.0 / std::sqrt(layer.running_var.data[j] + layer.eps);
        double g = layer.gamma.data[j] * inv;
        double b = layer.beta.data[j] - layer.running_mean.data[j] * g;
        for (std::size_t i = 0; i < x.rows(); ++i) y.at(i, j) = g * x.at(i, j) + b;
    }
    return y;
}

inline Tensor batchnorm_forward(BatchNormLayer& layer, const Tensor& x, bool training) {
    if (training) return batchnorm_forward_train(layer, x).first;
    return batchnorm_forward_infer(layer, x);
}

struct BatchNormGrads {
    Tensor dgamma, dbeta, dx;
};

inline BatchNormGrads batchnorm_backward(const BatchNormLayer& layer, const BatchNormCache& cache,
                                         const Tensor& dy) {
    const std::size_t n = cache.xhat.rows(), d = cache.xhat.cols();
    if (!dy.is_matrix() || dy.rows() != n || dy.cols() != d)
        throw ContractError("batchnorm_backward: dy " + shape_str(dy) +
                            " does not match cache [" + std::to_string(n) + "x" +
                            std::to_string(d) + "]");
    BatchNormGrads g;
    g.dgamma = Tensor::zeros({d});
    g.dbeta = Tensor::zeros({d});
    g.dx = Tensor::zeros({n, d});
    for (std::size_t j = 0; j < d; ++j) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_dy += dy.at(i, j);
            sum_dy_xhat += dy.at(i, j) * cache.xhat.at(i, j);
        }
        g.dbeta.data[j] = sum_dy;
        g.dgamma.data[j] = sum_dy_xhat;
        const double gj = layer.gamma.data[j] * cache.inv_std.data[j];
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            g.dx.at(i, j) = gj * (dy.at(i, j) - inv_n * sum_dy -
                                  cache.xhat.at(i, j) * inv_n * sum_dy_xhat);
    }
    return g;
}

// Gradient through the inference-mode affine map.
inline BatchNormGrads batchnorm_backward_infer(const BatchNormLayer& layer, const Tensor& x,
                                               const Tensor& dy) {
    BatchNormGrads g;
    const std::size_t n = x.rows(), d = x.cols();
    g.dgamma = Tensor::zeros({d});
    g.dbeta = Tensor::zeros({d});
    g.dx = Tensor::zeros({n, d});
    for (std::size_t j = 0; j < d; ++j) {
        double inv = 1.0 / std::sqrt(layer.running_var.data[j] + layer.eps);
        for (std::size_t i = 0; i < n; ++i) {
            g.dx.at(i, j) = dy.at(i, j) * layer.gamma.data[j] * inv;
            g.dgamma.data[j] += dy.at(i, j) * (x.at(i, j) - layer.running_mean.data[j]) * inv;
            g.dbeta.data[j] += dy.at(i, j);
        }
    }
    return g;
}

// ---------------------------- dropout ----------------------------------

struct DropoutSpec {
    double rate = 0.5;
};

struct DropoutResult {
    Tensor y;
    Tensor mask;  // entries are 0 or 1/(1-rate); y = x * mask
};

// Inverted dropout: survivors are scaled at train time so inference is the
// identity. One uniform draw per element in row-major order.
inline DropoutResult dropout_forward(const DropoutSpec& spec, const Tensor& x, bool training,
                                     Rng& rng) {
    if (spec.rate < 0.0 || spec.rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(spec.rate));
    DropoutResult r;
    if (!training || spec.rate == 0.0) {
        r.y = x;
        r.mask = Tensor::full(x.shape, 1.0);
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - spec.rate);
    r.mask = Tensor::zeros(x.shape);
    r.y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (rng.next_uniform() < spec.rate) {
            r.mask.data[i] = 0.0;
            r.y.data[i] = 0.0;
        } else {
            r.mask.data[i] = keep_scale;
            r.y.data[i] = x.data[i] * keep_scale;
        }
    }
    return r;
}

inline Tensor dropout_backward(const Tensor& mask, const Tensor& dy) {
    return mul(dy, mask);
}

// ----------------------- softmax cross-entropy -------------------------

struct XentResult {
    double loss = 0.0;  // mean over the batch
    Tensor probs;       // [n x c]
    Tensor dlogits;     // (probs - onehot) / n
};

inline XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    if (!logits.is_matrix() || logits.cols() < 2)
        throw DimensionError("softmax_xent: need [n x c] logits, got " + shape_str(logits));
    if (labels.size() != logits.rows())
        throw DimensionError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(logits.rows()) + " rows");
    const std::size_t n = logits.rows(), c = logits.cols();
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw Error("softmax_xent: label " + std::to_string(y) + " out of range [0," +
                        std::to_string(c) + ")");
    XentResult r;
    r.probs = softmax(logits);
    r.dlogits = r.probs;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // log-sum-exp form, stable even when probs underflow
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < c; ++j) lse += std::exp(logits.at(i, j) - mx);
        total += (mx + std::log(lse)) - logits.at(i, static_cast<std::size_t>(labels[i]));
        r.dlogits.at(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    r.loss = total / static_cast<double>(n);
    for (double& v : r.dlogits.data) v /= static_cast<double>(n);
    return r;
}

// ------------------------------ Adam -----------------------------------

struct AdamState {
    Tensor m, v;
    std::int64_t t = 0;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const Tensor& param_like, double lr = 0.001) {
        AdamState s;
        s.m = Tensor::zeros(param_like.shape);
        s.v = Tensor::zeros(param_like.shape);
        s.lr = lr;
        return s;
    }
};

// Standard Adam step with bias correction; mutates param in place.
inline void adam_update(AdamState& state, Tensor& param, const Tensor& grad) {
    require_same_shape(param, grad, "adam_update");
    require_same_shape(param, state.m, "adam_update(state)");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        state.m.data[i] = state.beta1 * state.m.data[i] + (1.0 - state.beta1) * grad.data[i];
        state.v.data[i] = state.beta2 * state.v.data[i] + (1.0 - state.beta2) * grad.data[i] * grad.data[i];
        const double mhat = state.m.data[i] / bc1;
        const double vhat = state.v.data[i] / bc2;
        param.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

// -------------------------- gradient check -----------------------------

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t coords_checked = 0;
    std::vector<GradCheckEntry> per_param;

    bool pass(double tol) const { return max_rel_err < tol; }
};

// Compares analytic gradients against central finite differences. The loss
// closure must be a deterministic function of the parameter tensors. Error
// per coordinate is |a - n| / max(1, |a| + |n|): relative for gradients of
// magnitude above one, absolute below (central differences bottom out near
// 1e-11 regardless of gradient size).
inline GradCheckReport gradient_check(const std::vector<std::pair<std::string, Tensor*>>& params,
                                      const std::vector<const Tensor*>& analytic,
                                      const std::function<double()>& loss, double step = 1e-5) {
    if (params.size() != analytic.size())
        throw ContractError("gradient_check: " + std::to_string(params.size()) + " params vs " +
                            std::to_string(analytic.size()) + " gradients");
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& param = *params[p].second;
        const Tensor& grad = *analytic[p];
        require_same_shape(param, grad, "gradient_check");
        GradCheckEntry entry{params[p].first, 0.0};
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param.data[i];
            param.data[i] = saved + step;
            const double up = loss();
            param.data[i] = saved - step;
            const double down = loss();
            param.data[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = grad.data[i];
            const double err = std::abs(a - numeric) /
                               std::max(1.0, std::abs(a) + std::abs(numeric));
            entry.max_rel_err = std::max(entry.max_rel_err, err);
            ++report.coords_checked;
        }
        if (entry.max_rel_err >= report.max_rel_err) {
            report.max_rel_err = entry.max_rel_err;
            report.worst_param = entry.name;
        }
        report.per_param.push_back(std::move(entry));
    }
    return report;
}

}  // namespace concord
