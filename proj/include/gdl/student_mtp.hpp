#pragma once

// Medusa-style prediction heads over a frozen causal backbone. Head 0 is the
// backbone's own LM head; head k >= 1 predicts the token k positions further
// ahead from
//     z = h_t + routed conditions,  logits = W2 (SiLU(W1 z) + z) + b2.

#include "gdl/extraction.hpp"
#include "gdl/nn.hpp"
#include "gdl/teacher.hpp"

#include <string_view>
#include <vector>

namespace gdl::mtp {

// Which offsets' normalized noise reach head k. Offset j is the noise of the
// token at t + 1 + j (offset 0 is the token head 0 emits).
enum class Routing {
    cumulative, // every offset 0..k, each through its own projection
    own_offset, // offset k only
};

Routing parse_routing(std::string_view s);
const char *to_string(Routing r);

struct HeadsConfig {
    int heads = 4; // including head 0
    bool conditioned = true;
    Routing routing = Routing::cumulative;
};

class MtpHeads {
public:
    // W2/b2 copy the backbone's LM head, W1 and every projection start at zero,
    // so each head initially reproduces head 0.
    MtpHeads(const teacher::NeuralTeacher &backbone, HeadsConfig config);

    const HeadsConfig &config() const noexcept { return config_; }
    std::size_t d_model() const noexcept { return d_; }
    std::size_t vocab() const noexcept { return v_; }
    nn::ParamSet &params() noexcept { return params_; }
    const nn::ParamSet &params() const noexcept { return params_; }

    static std::string w1_name(int k);
    static std::string w2_name(int k);
    static std::string b2_name(int k);
    static std::string proj_name(int k, int j);

    // Offsets feeding head k under the configured routing.
    std::vector<int> routed_offsets(int k) const;

    nn::Checkpoint to_checkpoint(const nlohmann::json &extra = {}) const;
    static MtpHeads from_checkpoint(const teacher::NeuralTeacher &backbone, const nn::Checkpoint &ckpt);

    // Frozen copy of the backbone head used for head 0.
    const std::vector<double> &base_weight() const noexcept { return base_w_; }
    const std::vector<double> &base_bias() const noexcept { return base_b_; }

private:
    HeadsConfig config_;
    std::size_t d_;
    std::size_t v_;
    nn::ParamSet params_;
    std::vector<double> base_w_, base_b_;
};

// Logits of every head for one hidden state. `conditions` holds heads()
// normalized noise rows (offsets 0..k-1), ignored by an unconditioned model.
std::vector<LogitVector> heads_forward(const MtpHeads &heads, std::span<const double> hidden,
                                       const std::vector<ConditionVector> &conditions);

struct HeadsBatch {
    std::size_t rows = 0;
    std::vector<double> hidden;     // rows x d
    std::vector<double> conditions; // rows x heads x V (offset-major within a row)
    std::vector<int> targets;       // rows x heads; -1 = no target (head 0 ignored)
};

// One row per position t with x[t] != stop_token. `noise` holds the
// posterior noise of each sequence and is ignored for an unconditioned model.
HeadsBatch make_heads_batch(const teacher::NeuralTeacher &backbone, const MtpHeads &heads,
                            const std::vector<TokenSequence> &seqs, const std::vector<extraction::GumbelSequence> &noise,
                            int stop_token = 1);

// Sum over heads k >= 1 of that head's mean cross-entropy over its scored
// rows. With grads non-null the exact gradient is written there; per_head
// (if given) receives each head's term, index 0 unused.
double heads_loss(const MtpHeads &heads, const HeadsBatch &batch, nn::ParamSet *grads,
                  std::vector<double> *per_head = nullptr);

struct HeadsTrainConfig {
    HeadsConfig heads;
    int epochs = 20;
    int batch_size = 128;
    nn::AdamConfig adam{1e-3};
    std::uint64_t seed = 0;
};

struct HeadsTrainResult {
    MtpHeads heads;
    std::vector<std::vector<double>> head_loss; // [epoch][k], k >= 1 (index 0 unused)
};

// Trains on every corpus row t with x[t] != stop_token. The conditioned arm
// extracts fresh posterior noise from the backbone each epoch. The backbone is
// only read.
HeadsTrainResult train_heads(const teacher::NeuralTeacher &backbone, const std::vector<TokenSequence> &corpus,
                             const HeadsTrainConfig &config, int stop_token = 1);

struct TypicalAcceptParams {
    double epsilon = 0.1;
    double delta = 1.0;
};

// p[token] > min(epsilon, delta * exp(-H(p))).
bool typical_accept(const ProbVector &p, std::size_t token, const TypicalAcceptParams &params);

struct AcceptanceStats {
    std::vector<long> attempted; // per head
    std::vector<long> accepted;  // per head
    long trials = 0;
    long accepted_tokens = 0; // sum over trials of the accepted block length

    double conditional_rate(std::size_t k) const;
    // Standard error of conditional_rate(k) (binomial).
    double rate_stderr(std::size_t k) const;
    double mean_accepted_length() const;
    // 1 + sum_k prod_{j<=k} conditional_rate(j)
    double product_accepted_length() const;
};

struct AcceptanceConfig {
    int trials = 500;
    double tau = 0.85;
    bool sample_heads = false; // categorical proposals instead of greedy
    TypicalAcceptParams accept;
    std::uint64_t seed = 0;
    int stop_token = 1;
};

// Trial i (stream(seed, "eval", "mtp", i)) picks a corpus sequence and a
// prompt end t with x[t] != stop_token and t + heads <= n_max, draws prior
// noise for the next `heads` tokens, emits head 0's token by Gumbel-Max on the
// backbone logits, proposes the rest greedily, and verifies them in order,
// stopping at the first rejection.
AcceptanceStats evaluate_acceptance(const teacher::NeuralTeacher &backbone, const MtpHeads &heads,
                                    const std::vector<TokenSequence> &corpus, const AcceptanceConfig &config);

} // namespace gdl::mtp
