#include "gdl/student_mtp.hpp"

#include "gdl/errors.hpp"
#include "gdl/linalg.hpp"
#include "gdl/simd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gdl::mtp {

Routing parse_routing(std::string_view s) {
    if (s == "cumulative") {
        return Routing::cumulative;
    }
    if (s == "own-offset") {
        return Routing::own_offset;
    }
    throw ConfigError("unknown head routing '" + std::string(s) + "' (expected cumulative or own-offset)");
}

const char *to_string(Routing r) { return r == Routing::cumulative ? "cumulative" : "own-offset"; }

std::string MtpHeads::w1_name(int k) { return "head" + std::to_string(k) + ".w1"; }
std::string MtpHeads::w2_name(int k) { return "head" + std::to_string(k) + ".w2"; }
std::string MtpHeads::b2_name(int k) { return "head" + std::to_string(k) + ".b2"; }
std::string MtpHeads::proj_name(int k, int j) { return "head" + std::to_string(k) + ".proj" + std::to_string(j); }

MtpHeads::MtpHeads(const teacher::NeuralTeacher &backbone, HeadsConfig config) : config_(config) {
    if (config_.heads < 1) {
        throw ConfigError("mtp: need at least one head");
    }
    const auto &arch = backbone.network().config();
    d_ = static_cast<std::size_t>(arch.d_model);
    v_ = static_cast<std::size_t>(arch.vocab_out);
    base_w_ = backbone.network().params().at(nn::Transformer::kHeadWeight).data;
    base_b_ = backbone.network().params().at(nn::Transformer::kHeadBias).data;
    for (int k = 1; k < config_.heads; ++k) {
        params_.add(w1_name(k), {d_, d_});
        params_[params_.add(w2_name(k), {d_, v_})].data = base_w_;
        params_[params_.add(b2_name(k), {v_})].data = base_b_;
        if (config_.conditioned) {
            for (const int j : routed_offsets(k)) {
                params_.add(proj_name(k, j), {v_, d_});
            }
        }
    }
}

std::vector<int> MtpHeads::routed_offsets(int k) const {
    if (!config_.conditioned || k == 0) {
        return {};
    }
    if (config_.routing == Routing::own_offset) {
        return {k};
    }
    std::vector<int> out(static_cast<std::size_t>(k) + 1);
    std::iota(out.begin(), out.end(), 0);
    return out;
}

nn::Checkpoint MtpHeads::to_checkpoint(const nlohmann::json &extra) const {
    nn::Checkpoint ckpt;
    ckpt.meta = extra.is_object() ? extra : nlohmann::json::object();
    ckpt.meta["kind"] = "mtp-heads";
    ckpt.meta["heads"] = config_.heads;
    ckpt.meta["conditioned"] = config_.conditioned;
    ckpt.meta["routing"] = to_string(config_.routing);
    ckpt.params = params_;
    return ckpt;
}

MtpHeads MtpHeads::from_checkpoint(const teacher::NeuralTeacher &backbone, const nn::Checkpoint &ckpt) {
    if (ckpt.meta.value("kind", std::string()) != "mtp-heads") {
        throw ConfigError("checkpoint does not hold MTP heads");
    }
    HeadsConfig cfg;
    cfg.heads = ckpt.meta.value("heads", cfg.heads);
    cfg.conditioned = ckpt.meta.value("conditioned", cfg.conditioned);
    cfg.routing = parse_routing(ckpt.meta.value("routing", std::string("cumulative")));
    MtpHeads h(backbone, cfg);
    if (!h.params_.same_layout(ckpt.params)) {
        throw ConfigError("MTP checkpoint tensors do not match its configuration");
    }
    h.params_ = ckpt.params;
    return h;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct HeadCache {
    std::vector<double> z, a, u, logits;
};

// Forward of head k >= 1 over `rows` rows.
void head_forward(const MtpHeads &heads, int k, std::size_t rows, const double *hidden, const double *conditions,
                  HeadCache &c) {
    const std::size_t d = heads.d_model();
    const std::size_t V = heads.vocab();
    const std::size_t K = static_cast<std::size_t>(heads.config().heads);
    const auto &p = heads.params();
    c.z.assign(hidden, hidden + rows * d);
    for (const int j : heads.routed_offsets(k)) {
        const auto &proj = p.at(MtpHeads::proj_name(k, j)).data;
        for (std::size_t r = 0; r < rows; ++r) {
            linalg::matmul(conditions + (r * K + static_cast<std::size_t>(j)) * V, proj.data(), c.z.data() + r * d, 1,
                           V, d, true);
        }
    }
    c.a.resize(rows * d);
    linalg::matmul(c.z.data(), p.at(MtpHeads::w1_name(k)).data.data(), c.a.data(), rows, d, d);
    c.u.resize(rows * d);
    for (std::size_t i = 0; i < rows * d; ++i) {
        c.u[i] = c.a[i] * sigmoid(c.a[i]) + c.z[i];
    }
    c.logits.resize(rows * V);
    linalg::matmul(c.u.data(), p.at(MtpHeads::w2_name(k)).data.data(), c.logits.data(), rows, d, V);
    linalg::add_bias(c.logits.data(), p.at(MtpHeads::b2_name(k)).data.data(), rows, V);
}

} // namespace

std::vector<LogitVector> heads_forward(const MtpHeads &heads, std::span<const double> hidden,
                                       const std::vector<ConditionVector> &conditions) {
    const std::size_t d = heads.d_model();
    const std::size_t V = heads.vocab();
    const auto K = static_cast<std::size_t>(heads.config().heads);
    if (hidden.size() != d) {
        throw ContractError("heads_forward: hidden state has the wrong width");
    }
    std::vector<double> cond(K * V, 1.0 / static_cast<double>(V));
    if (heads.config().conditioned) {
        if (conditions.size() != K) {
            throw ContractError("heads_forward: need one condition per head");
        }
        for (std::size_t j = 0; j < K; ++j) {
            if (conditions[j].size() != V) {
                throw ContractError("heads_forward: condition width differs from the vocabulary");
            }
            std::copy(conditions[j].values().begin(), conditions[j].values().end(), cond.begin() + j * V);
        }
    }
    std::vector<LogitVector> out;
    std::vector<double> base(V);
    linalg::matmul(hidden.data(), heads.base_weight().data(), base.data(), 1, d, V);
    linalg::add_bias(base.data(), heads.base_bias().data(), 1, V);
    out.emplace_back(std::move(base));
    HeadCache c;
    for (int k = 1; k < heads.config().heads; ++k) {
        head_forward(heads, k, 1, hidden.data(), cond.data(), c);
        out.emplace_back(c.logits);
    }
    return out;
}

double heads_loss(const MtpHeads &heads, const HeadsBatch &batch, nn::ParamSet *grads,
                  std::vector<double> *per_head) {
    const std::size_t d = heads.d_model();
    const std::size_t V = heads.vocab();
    const auto K = static_cast<std::size_t>(heads.config().heads);
    const std::size_t rows = batch.rows;
    if (batch.hidden.size() != rows * d || batch.targets.size() != rows * K ||
        batch.conditions.size() != rows * K * V) {
        throw ContractError("heads_loss: batch tensors do not match its row count");
    }
    if (grads != nullptr) {
        if (!grads->same_layout(heads.params())) {
            *grads = heads.params().zeros_like();
        } else {
            grads->zero();
        }
    }
    if (per_head != nullptr) {
        per_head->assign(K, 0.0);
    }
    double total = 0.0;
    HeadCache c;
    std::vector<double> dlogits, du, da, dz;
    for (int k = 1; k < heads.config().heads; ++k) {
        nn::TargetBatch tg;
        tg.targets.resize(rows);
        bool any = false;
        for (std::size_t r = 0; r < rows; ++r) {
            tg.targets[r] = batch.targets[r * K + static_cast<std::size_t>(k)];
            any = any || tg.targets[r] >= 0;
        }
        if (!any) {
            continue;
        }
        head_forward(heads, k, rows, batch.hidden.data(), batch.conditions.data(), c);
        const double loss = nn::cross_entropy(c.logits, V, tg, grads != nullptr ? &dlogits : nullptr);
        if (!std::isfinite(loss)) {
            throw DivergenceError("mtp head " + std::to_string(k) + " loss is not finite");
        }
        total += loss;
        if (per_head != nullptr) {
            (*per_head)[static_cast<std::size_t>(k)] = loss;
        }
        if (grads == nullptr) {
            continue;
        }
        const auto &p = heads.params();
        auto &g = *grads;
        linalg::matmul_tn_acc(c.u.data(), dlogits.data(), g.at(MtpHeads::w2_name(k)).data.data(), rows, d, V);
        linalg::colsum_acc(dlogits.data(), g.at(MtpHeads::b2_name(k)).data.data(), rows, V);
        du.resize(rows * d);
        linalg::matmul_nt(dlogits.data(), p.at(MtpHeads::w2_name(k)).data.data(), du.data(), rows, V, d);
        da.resize(rows * d);
        for (std::size_t i = 0; i < rows * d; ++i) {
            const double s = sigmoid(c.a[i]);
            da[i] = du[i] * s * (1.0 + c.a[i] * (1.0 - s));
        }
        linalg::matmul_tn_acc(c.z.data(), da.data(), g.at(MtpHeads::w1_name(k)).data.data(), rows, d, d);
        dz = du;
        linalg::matmul_nt(da.data(), p.at(MtpHeads::w1_name(k)).data.data(), dz.data(), rows, d, d, true);
        for (const int j : heads.routed_offsets(k)) {
            double *dp = g.at(MtpHeads::proj_name(k, j)).data.data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double *cr = batch.conditions.data() + (r * K + static_cast<std::size_t>(j)) * V;
                for (std::size_t v = 0; v < V; ++v) {
                    simd::axpy(cr[v], dz.data() + r * d, dp + v * d, d);
                }
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------- training

HeadsBatch make_heads_batch(const teacher::NeuralTeacher &backbone, const MtpHeads &heads,
                            const std::vector<TokenSequence> &seqs, const std::vector<extraction::GumbelSequence> &noise,
                            int stop_token) {
    const std::size_t d = heads.d_model();
    const std::size_t V = heads.vocab();
    const auto K = static_cast<std::size_t>(heads.config().heads);
    const bool cond = heads.config().conditioned;
    if (cond && noise.size() != seqs.size()) {
        throw ContractError("make_heads_batch: one noise sequence per token sequence is required");
    }
    HeadsBatch batch;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const auto &x = seqs[s];
        if (x.size() < 2) {
            continue;
        }
        const auto hidden = backbone.hidden_states(std::span(x).first(x.size() - 1));
        for (std::size_t t = 0; t + 1 < x.size(); ++t) {
            if (x[t] == stop_token) {
                continue;
            }
            batch.hidden.insert(batch.hidden.end(), hidden.begin() + static_cast<std::ptrdiff_t>(t * d),
                                hidden.begin() + static_cast<std::ptrdiff_t>((t + 1) * d));
            for (std::size_t j = 0; j < K; ++j) {
                const std::size_t pos = t + 1 + j;
                const bool in = pos < x.size();
                batch.targets.push_back(in && j > 0 ? x[pos] : -1);
                if (cond && in) {
                    const auto c = normalize_condition(noise[s][pos]);
                    batch.conditions.insert(batch.conditions.end(), c.values().begin(), c.values().end());
                } else {
                    batch.conditions.insert(batch.conditions.end(), V, 1.0 / static_cast<double>(V));
                }
            }
            ++batch.rows;
        }
    }
    return batch;
}

HeadsTrainResult train_heads(const teacher::NeuralTeacher &backbone, const std::vector<TokenSequence> &corpus,
                             const HeadsTrainConfig &config, int stop_token) {
    if (corpus.empty()) {
        throw ContractError("train_heads: empty corpus");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw ConfigError("train_heads: epochs and batch_size must be positive");
    }
    MtpHeads heads(backbone, config.heads);
    const std::size_t d = heads.d_model();
    const std::size_t V = heads.vocab();
    const auto K = static_cast<std::size_t>(config.heads.heads);
    const std::size_t n_in = static_cast<std::size_t>(backbone.network().config().n_max);

    // The backbone is frozen, so its hidden states are computed once.
    struct Row {
        std::size_t seq;
        std::size_t t;
    };
    std::vector<Row> rows;
    std::vector<std::vector<double>> hidden(corpus.size());
    for (std::size_t s = 0; s < corpus.size(); ++s) {
        const auto &x = corpus[s];
        if (x.size() < 2 || x.size() - 1 > n_in) {
            throw ConfigError("train_heads: sequence length does not fit the backbone");
        }
        hidden[s] = backbone.hidden_states(std::span(x).first(x.size() - 1));
        for (std::size_t t = 0; t + 1 < x.size(); ++t) {
            if (x[t] != stop_token) {
                rows.push_back({s, t});
            }
        }
    }

    HeadsTrainResult result{std::move(heads), {}};
    MtpHeads &h = result.heads;
    nn::ParamSet grads;
    nn::AdamState state;
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<extraction::GumbelSequence> noise;
    HeadsBatch batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto e = static_cast<std::uint64_t>(epoch);
        if (config.heads.conditioned) {
            noise = extraction::parallel_extract_all(backbone, corpus, config.seed, e << 32);
        }
        Rng shuffle = Rng::stream(config.seed, {name_key("train"), name_key("mtp-shuffle"), e});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.below(i)]);
        }
        std::vector<double> sums(K, 0.0);
        std::size_t batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.batch_size));
            batch.rows = b1 - b0;
            batch.hidden.clear();
            batch.conditions.assign(batch.rows * K * V, 1.0 / static_cast<double>(V));
            batch.targets.assign(batch.rows * K, -1);
            for (std::size_t i = b0; i < b1; ++i) {
                const Row row = rows[order[i]];
                const std::size_t r = i - b0;
                const auto &x = corpus[row.seq];
                const auto hr = hidden[row.seq].begin() + static_cast<std::ptrdiff_t>(row.t * d);
                batch.hidden.insert(batch.hidden.end(), hr, hr + static_cast<std::ptrdiff_t>(d));
                for (std::size_t j = 0; j < K; ++j) {
                    const std::size_t pos = row.t + 1 + j;
                    if (pos >= x.size()) {
                        break;
                    }
                    batch.targets[r * K + j] = j == 0 ? -1 : x[pos];
                    if (config.heads.conditioned) {
                        const auto c = normalize_condition(noise[row.seq][pos]);
                        std::copy(c.values().begin(), c.values().end(),
                                  batch.conditions.begin() + static_cast<std::ptrdiff_t>((r * K + j) * V));
                    }
                }
            }
            std::vector<double> per_head;
            heads_loss(h, batch, &grads, &per_head);
            nn::adam_step(h.params(), grads, state, config.adam);
            for (std::size_t k = 1; k < K; ++k) {
                sums[k] += per_head[k];
            }
            ++batches;
        }
        for (auto &s : sums) {
            s /= static_cast<double>(batches);
        }
        result.head_loss.push_back(std::move(sums));
    }
    return result;
}

// ---------------------------------------------------------------- acceptance

bool typical_accept(const ProbVector &p, std::size_t token, const TypicalAcceptParams &params) {
    if (token >= p.size()) {
        throw ContractError("typical_accept: token out of range");
    }
    double h = 0.0;
    for (const double pk : p.values()) {
        if (pk > 0.0) {
            h -= pk * std::log(pk);
        }
    }
    return p[token] > std::min(params.epsilon, params.delta * std::exp(-h));
}

double AcceptanceStats::conditional_rate(std::size_t k) const {
    if (k >= attempted.size() || attempted[k] == 0) {
        return 0.0;
    }
    return static_cast<double>(accepted[k]) / static_cast<double>(attempted[k]);
}

double AcceptanceStats::rate_stderr(std::size_t k) const {
    if (k >= attempted.size() || attempted[k] == 0) {
        return 0.0;
    }
    const double r = conditional_rate(k);
    return std::sqrt(r * (1.0 - r) / static_cast<double>(attempted[k]));
}

double AcceptanceStats::mean_accepted_length() const {
    return trials == 0 ? 0.0 : static_cast<double>(accepted_tokens) / static_cast<double>(trials);
}

double AcceptanceStats::product_accepted_length() const {
    double total = 1.0;
    double prod = 1.0;
    for (std::size_t k = 1; k < attempted.size(); ++k) {
        prod *= conditional_rate(k);
        total += prod;
    }
    return total;
}

AcceptanceStats evaluate_acceptance(const teacher::NeuralTeacher &backbone, const MtpHeads &heads,
                                    const std::vector<TokenSequence> &corpus, const AcceptanceConfig &config) {
    if (config.trials < 1) {
        throw ContractError("evaluate_acceptance: trials must be positive");
    }
    const auto K = static_cast<std::size_t>(heads.config().heads);
    const std::size_t V = heads.vocab();
    const auto n_in = static_cast<std::size_t>(backbone.network().config().n_max);
    if (K > n_in) {
        throw ConfigError("evaluate_acceptance: more heads than the backbone context allows");
    }
    const std::size_t t_max = n_in - K; // prefix plus K-1 proposals must fit the backbone
    const Temperature tau(config.tau);

    // Candidate prompt ends per corpus sequence.
    std::vector<std::pair<std::size_t, std::size_t>> prompts;
    for (std::size_t s = 0; s < corpus.size(); ++s) {
        for (std::size_t t = 0; t <= t_max && t < corpus[s].size(); ++t) {
            if (corpus[s][t] == config.stop_token) {
                break;
            }
            prompts.emplace_back(s, t);
        }
    }
    if (prompts.empty()) {
        throw ConfigError("evaluate_acceptance: corpus has no usable prompt");
    }

    AcceptanceStats stats;
    stats.attempted.assign(K, 0);
    stats.accepted.assign(K, 0);
    for (int trial = 0; trial < config.trials; ++trial) {
        Rng rng = Rng::stream(config.seed, {name_key("eval"), name_key("mtp"), static_cast<std::uint64_t>(trial)});
        const auto [s, t] = prompts[rng.below(prompts.size())];
        TokenSequence prefix(corpus[s].begin(), corpus[s].begin() + static_cast<std::ptrdiff_t>(t + 1));
        std::vector<GumbelVector> xi;
        std::vector<ConditionVector> cond;
        for (std::size_t j = 0; j < K; ++j) {
            xi.push_back(calibrate(sample_gumbel(rng, V), tau));
            cond.push_back(normalize_condition(xi.back()));
        }
        const auto hidden = backbone.hidden_states(prefix);
        const std::span<const double> h(hidden.data() + t * heads.d_model(), heads.d_model());
        const auto logits = heads_forward(heads, h, cond);

        std::vector<int> proposal(K);
        proposal[0] = static_cast<int>(gumbel_max(logits[0], xi[0]));
        for (std::size_t k = 1; k < K; ++k) {
            proposal[k] = static_cast<int>(config.sample_heads ? sample_categorical(logits[k], rng).token
                                                               : argmax(logits[k].span()));
        }

        ++stats.trials;
        ++stats.attempted[0];
        ++stats.accepted[0];
        long length = 1;
        prefix.push_back(proposal[0]);
        for (std::size_t k = 1; k < K; ++k) {
            const ProbVector p = softmax(backbone.logits(prefix));
            ++stats.attempted[k];
            if (!typical_accept(p, static_cast<std::size_t>(proposal[k]), config.accept)) {
                break;
            }
            ++stats.accepted[k];
            ++length;
            prefix.push_back(proposal[k]);
        }
        stats.accepted_tokens += length;
    }
    return stats;
}

} // namespace gdl::mtp
