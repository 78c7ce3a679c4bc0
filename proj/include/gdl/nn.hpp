#pragma once

// Minimal trainable-network substrate: named double tensors, a pre-norm
// transformer with hand-written backward pass, Adam, binary checkpoints, and
// a central-difference gradient checker.

#include "gdl/rng.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gdl::nn {

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    std::size_t numel() const noexcept { return data.size(); }
};

class ParamSet {
public:
    // Appends a zero-filled tensor and returns its index.
    std::size_t add(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const noexcept { return tensors_.size(); }
    Tensor &operator[](std::size_t i) { return tensors_[i]; }
    const Tensor &operator[](std::size_t i) const { return tensors_[i]; }

    const Tensor *find(std::string_view name) const;
    Tensor *find(std::string_view name);
    const Tensor &at(std::string_view name) const;
    Tensor &at(std::string_view name);

    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }

    ParamSet zeros_like() const;
    void zero();
    std::size_t numel() const;
    bool all_finite() const;
    bool same_layout(const ParamSet &other) const;

    friend bool operator==(const ParamSet &a, const ParamSet &b);

private:
    std::vector<Tensor> tensors_;
};

bool operator==(const ParamSet &a, const ParamSet &b);

// Initialise every tensor whose name is not listed in `zero_names` with
// N(0, std^2) drawn from a per-tensor stream keyed by its name, so adding or
// removing a tensor never changes the others' values.
void init_normal(ParamSet &params, std::uint64_t seed, double std, const std::vector<std::string> &skip = {});

struct ArchitectureConfig {
    int vocab_in = 7;  // input token ids, including any MASK id
    int vocab_out = 6; // output classes
    int n_max = 12;
    int d_model = 64;
    int layers = 2;
    int heads = 4;
    int mlp_ratio = 4;
    bool causal = false;
    int cond_dim = 0; // > 0 adds the condition projection w_proj [cond_dim x d_model]

    void validate() const;
    nlohmann::json to_json() const;
    static ArchitectureConfig from_json(const nlohmann::json &j);
    friend bool operator==(const ArchitectureConfig &, const ArchitectureConfig &) = default;
};

// Rows are laid out sequence-major: row = b * length + position.
struct InputBatch {
    std::size_t batch = 0;
    std::size_t length = 0;
    std::vector<int> tokens;
    // Optional. Where set, the row's input embedding is conditions_row * w_proj
    // instead of the token embedding.
    std::vector<std::uint8_t> use_condition;
    std::vector<double> conditions; // rows() x cond_dim

    std::size_t rows() const noexcept { return batch * length; }
};

struct TargetBatch {
    std::vector<int> targets;    // rows(); negative = not scored
    std::vector<double> weights; // rows(), or empty for unit weights
};

struct ForwardResult {
    std::size_t rows = 0;
    std::vector<double> logits; // rows x vocab_out
    std::vector<double> hidden; // rows x d_model, after the final layer norm
};

class Transformer {
public:
    explicit Transformer(ArchitectureConfig config);

    // Weights and embeddings ~ N(0, 0.02^2); layer-norm gains 1; biases and the
    // output head zero.
    void init(std::uint64_t seed);

    const ArchitectureConfig &config() const noexcept { return config_; }
    ParamSet &params() noexcept { return params_; }
    const ParamSet &params() const noexcept { return params_; }

    // Names of the tensors reading the output head (for MTP head initialisation).
    static constexpr const char *kHeadWeight = "head.weight";
    static constexpr const char *kHeadBias = "head.bias";
    static constexpr const char *kCondProj = "w_proj";

    ForwardResult forward(const InputBatch &batch) const;

    // Weighted mean cross-entropy over scored rows.
    double loss(const InputBatch &batch, const TargetBatch &targets) const;

    // Same loss; `grads` is overwritten with its exact gradient. Throws
    // DivergenceError if the loss is not finite.
    double loss_and_grad(const InputBatch &batch, const TargetBatch &targets, ParamSet &grads) const;

    // The input embeddings fed to the first block (rows x d_model).
    std::vector<double> embed(const InputBatch &batch) const;

private:
    struct LayerIndex {
        std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_fc2, b_fc2;
    };
    struct Cache;

    void check_batch(const InputBatch &batch) const;
    void embed_into(const InputBatch &batch, std::vector<double> &x) const;
    ForwardResult run(const InputBatch &batch, Cache *cache) const;

    ArchitectureConfig config_;
    ParamSet params_;
    std::size_t tok_emb_ = 0, pos_emb_ = 0, w_proj_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
    std::vector<LayerIndex> layers_;
};

// Weighted mean cross-entropy over rows with target >= 0. When `dlogits` is
// non-null it receives d loss / d logits.
double cross_entropy(const std::vector<double> &logits, std::size_t vocab, const TargetBatch &targets,
                     std::vector<double> *dlogits);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;
};

// Standard Adam with bias correction. Tensors named in `frozen` are skipped.
void adam_step(ParamSet &params, const ParamSet &grads, AdamState &state, const AdamConfig &config,
               const std::vector<std::string> &frozen = {});

// Binary layout: "GDLLCKPT", u32 version, u32-length UTF-8 JSON blob, then per
// tensor: u32-length name, u32 rank, rank x u64 dims, little-endian float64
// data. Tensors run to end of file.
inline constexpr char kCheckpointMagic[8] = {'G', 'D', 'L', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json meta; // architecture, model kind, seed record, ...
    ParamSet params;
};

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);
std::string encode_checkpoint(const Checkpoint &ckpt);
Checkpoint decode_checkpoint(const std::string &bytes);

struct TensorCheck {
    std::string name;
    std::size_t entries_checked = 0;
    double max_rel_error = 0.0;
    double max_abs_grad = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    bool passed() const;
    const TensorCheck *find(std::string_view name) const;
};

struct GradCheckOptions {
    double epsilon = 1e-4;
    double tolerance = 1e-5;
    // Entries per tensor compared against finite differences (the largest
    // analytic entries plus a random sample). 0 = every entry.
    std::size_t max_entries = 24;
    std::uint64_t seed = 7;
    // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
    double floor = 1e-6;
};

// Compares `analytic` against central differences of `loss_fn` evaluated while
// perturbing `params` in place (restored afterwards).
GradCheckReport grad_check(ParamSet &params, const ParamSet &analytic, const std::function<double()> &loss_fn,
                           const GradCheckOptions &options = {});

} // namespace gdl::nn
