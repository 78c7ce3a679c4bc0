#include "gdl/nn.hpp"

#include "gdl/errors.hpp"
#include "gdl/linalg.hpp"
#include "gdl/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gdl::nn {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

std::string layer_name(std::size_t l, const char *what) { return "layer" + std::to_string(l) + "." + what; }

// y = gamma * xhat + beta, row-wise over width d.
void layer_norm(const double *x, const double *gamma, const double *beta, double *xhat, double *rstd, double *y,
                std::size_t rows, std::size_t d) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double *xr = x + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            mean += xr[j];
        }
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xr[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double rs = 1.0 / std::sqrt(var + kLnEps);
        rstd[r] = rs;
        double *hr = xhat + r * d;
        double *yr = y + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            hr[j] = (xr[j] - mean) * rs;
            yr[j] = gamma[j] * hr[j] + beta[j];
        }
    }
}

// dx (+)= layer-norm backward of dy; accumulates dgamma, dbeta.
void layer_norm_backward(const double *dy, const double *xhat, const double *rstd, const double *gamma, double *dx,
                         double *dgamma, double *dbeta, std::size_t rows, std::size_t d) {
    std::vector<double> dxhat(d);
    for (std::size_t r = 0; r < rows; ++r) {
        const double *dyr = dy + r * d;
        const double *hr = xhat + r * d;
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dgamma[j] += dyr[j] * hr[j];
            dbeta[j] += dyr[j];
            dxhat[j] = dyr[j] * gamma[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * hr[j];
        }
        mean_dxhat /= static_cast<double>(d);
        mean_dxhat_xhat /= static_cast<double>(d);
        double *dxr = dx + r * d;
        for (std::size_t j = 0; j < d; ++j) {
            dxr[j] += rstd[r] * (dxhat[j] - mean_dxhat - hr[j] * mean_dxhat_xhat);
        }
    }
}

// Head-width vectors are short (often 8 or 16), so these stay inline.
inline double dot_n(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline void axpy_n(double alpha, const double *x, double *y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

} // namespace

struct Transformer::Cache {
    struct Layer {
        std::vector<double> x_in, ln1_xhat, ln1_rstd, ln1_out, qkv, probs, att;
        std::vector<double> ln2_xhat, ln2_rstd, ln2_out, fc, sig, act;
    };
    std::vector<Layer> layers;
    std::vector<double> lnf_xhat, lnf_rstd;
};

void ArchitectureConfig::validate() const {
    if (vocab_in < 1 || vocab_out < 1 || n_max < 1 || d_model < 1 || layers < 1 || heads < 1 || mlp_ratio < 1 ||
        cond_dim < 0) {
        throw ConfigError("architecture: all sizes must be positive");
    }
    if (d_model % heads != 0) {
        throw ConfigError("architecture: d_model must be divisible by heads");
    }
}

nlohmann::json ArchitectureConfig::to_json() const {
    return {{"vocab_in", vocab_in}, {"vocab_out", vocab_out}, {"n_max", n_max},         {"d_model", d_model},
            {"layers", layers},     {"heads", heads},         {"mlp_ratio", mlp_ratio}, {"causal", causal},
            {"cond_dim", cond_dim}};
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json &j) {
    ArchitectureConfig c;
    c.vocab_in = j.value("vocab_in", c.vocab_in);
    c.vocab_out = j.value("vocab_out", c.vocab_out);
    c.n_max = j.value("n_max", c.n_max);
    c.d_model = j.value("d_model", c.d_model);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
    c.causal = j.value("causal", c.causal);
    c.cond_dim = j.value("cond_dim", c.cond_dim);
    c.validate();
    return c;
}

Transformer::Transformer(ArchitectureConfig config) : config_(config) {
    config_.validate();
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto m = d * static_cast<std::size_t>(config_.mlp_ratio);
    tok_emb_ = params_.add("tok_emb", {static_cast<std::size_t>(config_.vocab_in), d});
    pos_emb_ = params_.add("pos_emb", {static_cast<std::size_t>(config_.n_max), d});
    if (config_.cond_dim > 0) {
        w_proj_ = params_.add(kCondProj, {static_cast<std::size_t>(config_.cond_dim), d});
    }
    for (std::size_t l = 0; l < static_cast<std::size_t>(config_.layers); ++l) {
        LayerIndex li{};
        li.ln1_g = params_.add(layer_name(l, "ln1.gamma"), {d});
        li.ln1_b = params_.add(layer_name(l, "ln1.beta"), {d});
        li.w_qkv = params_.add(layer_name(l, "attn.w_qkv"), {d, 3 * d});
        li.b_qkv = params_.add(layer_name(l, "attn.b_qkv"), {3 * d});
        li.w_o = params_.add(layer_name(l, "attn.w_o"), {d, d});
        li.b_o = params_.add(layer_name(l, "attn.b_o"), {d});
        li.ln2_g = params_.add(layer_name(l, "ln2.gamma"), {d});
        li.ln2_b = params_.add(layer_name(l, "ln2.beta"), {d});
        li.w_fc = params_.add(layer_name(l, "mlp.w_fc"), {d, m});
        li.b_fc = params_.add(layer_name(l, "mlp.b_fc"), {m});
        li.w_fc2 = params_.add(layer_name(l, "mlp.w_fc2"), {m, d});
        li.b_fc2 = params_.add(layer_name(l, "mlp.b_fc2"), {d});
        layers_.push_back(li);
    }
    lnf_g_ = params_.add("ln_f.gamma", {d});
    lnf_b_ = params_.add("ln_f.beta", {d});
    head_w_ = params_.add(kHeadWeight, {d, static_cast<std::size_t>(config_.vocab_out)});
    head_b_ = params_.add(kHeadBias, {static_cast<std::size_t>(config_.vocab_out)});
}

void Transformer::init(std::uint64_t seed) {
    std::vector<std::string> skip{kHeadWeight, kHeadBias, "ln_f.gamma", "ln_f.beta"};
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        for (const char *n : {"ln1.gamma", "ln1.beta", "ln2.gamma", "ln2.beta", "attn.b_qkv", "attn.b_o", "mlp.b_fc",
                              "mlp.b_fc2"}) {
            skip.push_back(layer_name(l, n));
        }
    }
    params_.zero();
    init_normal(params_, seed, kInitStd, skip);
    for (auto &t : params_) {
        if (t.name.ends_with("gamma")) {
            std::fill(t.data.begin(), t.data.end(), 1.0);
        }
    }
}

void Transformer::check_batch(const InputBatch &batch) const {
    if (batch.length == 0 || batch.batch == 0) {
        throw ContractError("transformer: empty batch");
    }
    if (batch.length > static_cast<std::size_t>(config_.n_max)) {
        throw ContractError("transformer: sequence length " + std::to_string(batch.length) + " exceeds n_max " +
                            std::to_string(config_.n_max));
    }
    const std::size_t rows = batch.rows();
    if (batch.tokens.size() != rows) {
        throw ContractError("transformer: token count does not match batch shape");
    }
    for (const int t : batch.tokens) {
        if (t < 0 || t >= config_.vocab_in) {
            throw ContractError("transformer: token id " + std::to_string(t) + " out of range");
        }
    }
    if (!batch.use_condition.empty()) {
        if (batch.use_condition.size() != rows) {
            throw ContractError("transformer: condition mask does not match batch shape");
        }
        const bool any = std::any_of(batch.use_condition.begin(), batch.use_condition.end(),
                                     [](std::uint8_t f) { return f != 0; });
        if (any && config_.cond_dim == 0) {
            throw ContractError("transformer: conditions supplied to a network without a condition projection");
        }
        if (any && batch.conditions.size() != rows * static_cast<std::size_t>(config_.cond_dim)) {
            throw ContractError("transformer: condition rows do not match batch shape");
        }
    }
}

std::vector<double> Transformer::embed(const InputBatch &batch) const {
    std::vector<double> x;
    embed_into(batch, x);
    return x;
}

void Transformer::embed_into(const InputBatch &batch, std::vector<double> &x) const {
    check_batch(batch);
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto cd = static_cast<std::size_t>(config_.cond_dim);
    const std::size_t rows = batch.rows();
    x.assign(rows * d, 0.0);
    const auto &tok = params_[tok_emb_].data;
    const auto &pos = params_[pos_emb_].data;
    for (std::size_t r = 0; r < rows; ++r) {
        double *xr = x.data() + r * d;
        const bool cond = !batch.use_condition.empty() && batch.use_condition[r] != 0;
        if (cond) {
            // softmax(xi) W_proj, the normalized vector arriving pre-computed
            simd::vecmat_acc(batch.conditions.data() + r * cd, params_[w_proj_].data.data(), cd, d, d, xr);
        } else {
            std::copy_n(tok.data() + static_cast<std::size_t>(batch.tokens[r]) * d, d, xr);
        }
        simd::axpy(1.0, pos.data() + (r % batch.length) * d, xr, d);
    }
}

ForwardResult Transformer::run(const InputBatch &batch, Cache *cache) const {
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto m = d * static_cast<std::size_t>(config_.mlp_ratio);
    const auto H = static_cast<std::size_t>(config_.heads);
    const std::size_t hd = d / H;
    const std::size_t L = batch.length;
    const std::size_t B = batch.batch;
    const std::size_t rows = batch.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // Scratch buffers are reused across calls on the same thread. With a cache,
    // each layer writes its activations straight into its cache slot.
    thread_local std::vector<double> x, y, scores, xhat, rstd;
    thread_local Cache::Layer scratch;
    embed_into(batch, x);
    if (cache != nullptr) {
        cache->layers.resize(layers_.size());
    }
    y.resize(rows * d);
    scores.resize(L);

    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerIndex &li = layers_[l];
        Cache::Layer &c = cache != nullptr ? cache->layers[l] : scratch;
        if (cache != nullptr) {
            c.x_in = x;
        }
        c.ln1_xhat.resize(rows * d);
        c.ln1_rstd.resize(rows);
        c.ln1_out.resize(rows * d);
        c.qkv.resize(rows * 3 * d);
        c.probs.resize(B * H * L * L);
        c.att.resize(rows * d);
        c.ln2_xhat.resize(rows * d);
        c.ln2_rstd.resize(rows);
        c.ln2_out.resize(rows * d);
        c.fc.resize(rows * m);
        c.sig.resize(rows * m);
        c.act.resize(rows * m);
        std::vector<double> &qkv = c.qkv;
        std::vector<double> &probs = c.probs;
        std::vector<double> &att = c.att;
        std::vector<double> &fc = c.fc;
        std::vector<double> &act = c.act;
        layer_norm(x.data(), params_[li.ln1_g].data.data(), params_[li.ln1_b].data.data(), c.ln1_xhat.data(),
                   c.ln1_rstd.data(), c.ln1_out.data(), rows, d);
        const std::vector<double> &a = c.ln1_out;
        linalg::matmul(a.data(), params_[li.w_qkv].data.data(), qkv.data(), rows, d, 3 * d);
        linalg::add_bias(qkv.data(), params_[li.b_qkv].data.data(), rows, 3 * d);

        std::fill(att.begin(), att.end(), 0.0);
        if (config_.causal) {
            std::fill(probs.begin(), probs.end(), 0.0);
        }
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t i = 0; i < L; ++i) {
                    const double *q = qkv.data() + (b * L + i) * 3 * d + h * hd;
                    const std::size_t jend = config_.causal ? i + 1 : L;
                    double hi = -std::numeric_limits<double>::infinity();
                    for (std::size_t j = 0; j < jend; ++j) {
                        const double *k = qkv.data() + (b * L + j) * 3 * d + d + h * hd;
                        scores[j] = dot_n(q, k, hd) * scale;
                        hi = std::max(hi, scores[j]);
                    }
                    double z = 0.0;
                    for (std::size_t j = 0; j < jend; ++j) {
                        scores[j] = std::exp(scores[j] - hi);
                        z += scores[j];
                    }
                    double *p = probs.data() + ((b * H + h) * L + i) * L;
                    double *o = att.data() + (b * L + i) * d + h * hd;
                    for (std::size_t j = 0; j < jend; ++j) {
                        p[j] = scores[j] / z;
                        const double *v = qkv.data() + (b * L + j) * 3 * d + 2 * d + h * hd;
                        axpy_n(p[j], v, o, hd);
                    }
                }
            }
        }
        linalg::matmul(att.data(), params_[li.w_o].data.data(), y.data(), rows, d, d);
        linalg::add_bias(y.data(), params_[li.b_o].data.data(), rows, d);
        simd::axpy(1.0, y.data(), x.data(), rows * d);

        layer_norm(x.data(), params_[li.ln2_g].data.data(), params_[li.ln2_b].data.data(), c.ln2_xhat.data(),
                   c.ln2_rstd.data(), c.ln2_out.data(), rows, d);
        linalg::matmul(c.ln2_out.data(), params_[li.w_fc].data.data(), fc.data(), rows, d, m);
        linalg::add_bias(fc.data(), params_[li.b_fc].data.data(), rows, m);
        simd::silu(fc.data(), c.sig.data(), act.data(), rows * m);
        linalg::matmul(act.data(), params_[li.w_fc2].data.data(), y.data(), rows, m, d);
        linalg::add_bias(y.data(), params_[li.b_fc2].data.data(), rows, d);
        simd::axpy(1.0, y.data(), x.data(), rows * d);
    }

    ForwardResult out;
    out.rows = rows;
    out.hidden.resize(rows * d);
    xhat.resize(rows * d);
    rstd.resize(rows);
    layer_norm(x.data(), params_[lnf_g_].data.data(), params_[lnf_b_].data.data(), xhat.data(), rstd.data(),
               out.hidden.data(), rows, d);
    if (cache != nullptr) {
        cache->lnf_xhat = xhat;
        cache->lnf_rstd = rstd;
    }
    const auto V = static_cast<std::size_t>(config_.vocab_out);
    out.logits.resize(rows * V);
    linalg::matmul(out.hidden.data(), params_[head_w_].data.data(), out.logits.data(), rows, d, V);
    linalg::add_bias(out.logits.data(), params_[head_b_].data.data(), rows, V);
    return out;
}

ForwardResult Transformer::forward(const InputBatch &batch) const { return run(batch, nullptr); }

double cross_entropy(const std::vector<double> &logits, std::size_t vocab, const TargetBatch &targets,
                     std::vector<double> *dlogits) {
    const std::size_t rows = targets.targets.size();
    if (logits.size() != rows * vocab) {
        throw ContractError("cross_entropy: logits do not match target rows");
    }
    if (!targets.weights.empty() && targets.weights.size() != rows) {
        throw ContractError("cross_entropy: weight count does not match target rows");
    }
    std::size_t scored = 0;
    for (const int t : targets.targets) {
        if (t >= 0) {
            if (static_cast<std::size_t>(t) >= vocab) {
                throw ContractError("cross_entropy: target out of range");
            }
            ++scored;
        }
    }
    if (scored == 0) {
        throw ContractError("cross_entropy: no scored rows");
    }
    if (dlogits != nullptr) {
        dlogits->assign(rows * vocab, 0.0);
    }
    const double inv = 1.0 / static_cast<double>(scored);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const int t = targets.targets[r];
        if (t < 0) {
            continue;
        }
        const double w = targets.weights.empty() ? 1.0 : targets.weights[r];
        const double *lr = logits.data() + r * vocab;
        const double hi = *std::max_element(lr, lr + vocab);
        double z = 0.0;
        for (std::size_t k = 0; k < vocab; ++k) {
            z += std::exp(lr[k] - hi);
        }
        const double lse = hi + std::log(z);
        total += w * (lse - lr[t]);
        if (dlogits != nullptr) {
            double *g = dlogits->data() + r * vocab;
            for (std::size_t k = 0; k < vocab; ++k) {
                g[k] = w * inv * std::exp(lr[k] - lse);
            }
            g[t] -= w * inv;
        }
    }
    return total * inv;
}

double Transformer::loss(const InputBatch &batch, const TargetBatch &targets) const {
    const ForwardResult fwd = forward(batch);
    return cross_entropy(fwd.logits, static_cast<std::size_t>(config_.vocab_out), targets, nullptr);
}

double Transformer::loss_and_grad(const InputBatch &batch, const TargetBatch &targets, ParamSet &grads) const {
    if (!grads.same_layout(params_)) {
        grads = params_.zeros_like();
    } else {
        grads.zero();
    }
    thread_local Cache cache;
    const ForwardResult fwd = run(batch, &cache);
    const auto V = static_cast<std::size_t>(config_.vocab_out);
    std::vector<double> dlogits;
    const double loss = cross_entropy(fwd.logits, V, targets, &dlogits);
    if (!std::isfinite(loss)) {
        throw DivergenceError("loss is not finite (" + std::to_string(loss) + ") over " +
                              std::to_string(batch.batch) + " sequences; parameters finite: " +
                              (params_.all_finite() ? "yes" : "no"));
    }

    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto m = d * static_cast<std::size_t>(config_.mlp_ratio);
    const auto H = static_cast<std::size_t>(config_.heads);
    const std::size_t hd = d / H;
    const std::size_t L = batch.length;
    const std::size_t B = batch.batch;
    const std::size_t rows = batch.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // Output head and final norm.
    linalg::matmul_tn_acc(fwd.hidden.data(), dlogits.data(), grads[head_w_].data.data(), rows, d, V);
    linalg::colsum_acc(dlogits.data(), grads[head_b_].data.data(), rows, V);
    thread_local std::vector<double> dh, dx, dact, dfc, da, datt, dqkv, dp;
    dh.resize(rows * d);
    linalg::matmul_nt(dlogits.data(), params_[head_w_].data.data(), dh.data(), rows, V, d);
    dx.assign(rows * d, 0.0);
    layer_norm_backward(dh.data(), cache.lnf_xhat.data(), cache.lnf_rstd.data(), params_[lnf_g_].data.data(),
                        dx.data(), grads[lnf_g_].data.data(), grads[lnf_b_].data.data(), rows, d);

    dact.resize(rows * m);
    dfc.resize(rows * m);
    da.resize(rows * d);
    datt.resize(rows * d);
    dqkv.resize(rows * 3 * d);
    dp.resize(L);
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const LayerIndex &li = layers_[l];
        const auto &c = cache.layers[l];

        // MLP sublayer: x += fc2(silu(fc(ln2(x))))
        linalg::matmul_tn_acc(c.act.data(), dx.data(), grads[li.w_fc2].data.data(), rows, m, d);
        linalg::colsum_acc(dx.data(), grads[li.b_fc2].data.data(), rows, d);
        linalg::matmul_nt(dx.data(), params_[li.w_fc2].data.data(), dact.data(), rows, d, m);
        for (std::size_t i = 0; i < rows * m; ++i) {
            const double s = c.sig[i];
            dfc[i] = dact[i] * s * (1.0 + c.fc[i] * (1.0 - s));
        }
        linalg::matmul_tn_acc(c.ln2_out.data(), dfc.data(), grads[li.w_fc].data.data(), rows, d, m);
        linalg::colsum_acc(dfc.data(), grads[li.b_fc].data.data(), rows, m);
        linalg::matmul_nt(dfc.data(), params_[li.w_fc].data.data(), da.data(), rows, m, d);
        layer_norm_backward(da.data(), c.ln2_xhat.data(), c.ln2_rstd.data(), params_[li.ln2_g].data.data(),
                            dx.data(), grads[li.ln2_g].data.data(), grads[li.ln2_b].data.data(), rows, d);

        // Attention sublayer: x += o(attn(qkv(ln1(x))))
        linalg::matmul_tn_acc(c.att.data(), dx.data(), grads[li.w_o].data.data(), rows, d, d);
        linalg::colsum_acc(dx.data(), grads[li.b_o].data.data(), rows, d);
        linalg::matmul_nt(dx.data(), params_[li.w_o].data.data(), datt.data(), rows, d, d);

        std::fill(dqkv.begin(), dqkv.end(), 0.0);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t i = 0; i < L; ++i) {
                    const std::size_t jend = config_.causal ? i + 1 : L;
                    const double *p = c.probs.data() + ((b * H + h) * L + i) * L;
                    const double *dout = datt.data() + (b * L + i) * d + h * hd;
                    const double *q = c.qkv.data() + (b * L + i) * 3 * d + h * hd;
                    double *dq = dqkv.data() + (b * L + i) * 3 * d + h * hd;
                    double pdp = 0.0;
                    for (std::size_t j = 0; j < jend; ++j) {
                        const std::size_t rj = (b * L + j) * 3 * d;
                        dp[j] = dot_n(dout, c.qkv.data() + rj + 2 * d + h * hd, hd);
                        axpy_n(p[j], dout, dqkv.data() + rj + 2 * d + h * hd, hd);
                        pdp += p[j] * dp[j];
                    }
                    for (std::size_t j = 0; j < jend; ++j) {
                        const std::size_t rj = (b * L + j) * 3 * d;
                        const double ds = p[j] * (dp[j] - pdp) * scale;
                        axpy_n(ds, c.qkv.data() + rj + d + h * hd, dq, hd);
                        axpy_n(ds, q, dqkv.data() + rj + d + h * hd, hd);
                    }
                }
            }
        }
        linalg::matmul_tn_acc(c.ln1_out.data(), dqkv.data(), grads[li.w_qkv].data.data(), rows, d, 3 * d);
        linalg::colsum_acc(dqkv.data(), grads[li.b_qkv].data.data(), rows, 3 * d);
        linalg::matmul_nt(dqkv.data(), params_[li.w_qkv].data.data(), da.data(), rows, 3 * d, d);
        layer_norm_backward(da.data(), c.ln1_xhat.data(), c.ln1_rstd.data(), params_[li.ln1_g].data.data(),
                            dx.data(), grads[li.ln1_g].data.data(), grads[li.ln1_b].data.data(), rows, d);
    }

    // Embeddings.
    const auto cd = static_cast<std::size_t>(config_.cond_dim);
    auto &dtok = grads[tok_emb_].data;
    auto &dpos = grads[pos_emb_].data;
    for (std::size_t r = 0; r < rows; ++r) {
        const double *g = dx.data() + r * d;
        simd::axpy(1.0, g, dpos.data() + (r % L) * d, d);
        const bool cond = !batch.use_condition.empty() && batch.use_condition[r] != 0;
        if (cond) {
            const double *cr = batch.conditions.data() + r * cd;
            double *dw = grads[w_proj_].data.data();
            for (std::size_t v = 0; v < cd; ++v) {
                simd::axpy(cr[v], g, dw + v * d, d);
            }
        } else {
            simd::axpy(1.0, g, dtok.data() + static_cast<std::size_t>(batch.tokens[r]) * d, d);
        }
    }
    return loss;
}

} // namespace gdl::nn
