#pragma once

// Autoregressive teachers p*(x^i | x^{<i}). Position 0 of every sequence is
// conditioned on the empty prefix; for the maze language that distribution
// puts all mass on BOS.

#include "gdl/gumbel.hpp"
#include "gdl/nn.hpp"
#include "gdl/types.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gdl::teacher {

using LogitSequence = std::vector<LogitVector>;

class TeacherModel {
public:
    virtual ~TeacherModel() = default;

    virtual int vocab_size() const = 0;

    // Logits for the next token after `prefix` (possibly empty).
    virtual LogitVector logits(std::span<const int> prefix) const = 0;

    // result[i] == logits(x[0..i)) bit-exactly, for every i < x.size().
    virtual LogitSequence forward_sequence(std::span<const int> x) const;
};

class TabularTeacher final : public TeacherModel {
public:
    TabularTeacher(int vocab, std::map<TokenSequence, ProbVector> table);

    // Relative next-token frequencies over every prefix (including the empty
    // one) of every corpus sequence, mixed with eps/V uniform mass.
    static TabularTeacher from_corpus(const std::vector<TokenSequence> &corpus, double eps, int vocab);

    int vocab_size() const override { return vocab_; }
    LogitVector logits(std::span<const int> prefix) const override;

    // Stored distribution, or uniform for an unseen prefix.
    ProbVector probs(std::span<const int> prefix) const;
    bool knows(std::span<const int> prefix) const;
    std::size_t size() const { return table_.size(); }
    const std::map<TokenSequence, ProbVector> &table() const { return table_; }

    // One record per prefix: {"prefix":[..],"probs":[..]}.
    void save_ndjson(const std::string &path) const;
    static TabularTeacher load_ndjson(const std::string &path, int vocab);

private:
    int vocab_;
    std::map<TokenSequence, ProbVector> table_;
};

// Causal transformer over x[0..n-2] whose row i predicts x[i+1]. The empty
// prefix is answered by the fixed `first_token` distribution (no network call).
class NeuralTeacher final : public TeacherModel {
public:
    NeuralTeacher(nn::ArchitectureConfig arch, int first_token);

    static nn::ArchitectureConfig default_architecture(int vocab, int max_len);

    nn::Transformer &network() noexcept { return net_; }
    const nn::Transformer &network() const noexcept { return net_; }
    int first_token() const noexcept { return first_token_; }
    int max_length() const noexcept { return net_.config().n_max + 1; }

    int vocab_size() const override { return net_.config().vocab_out; }
    LogitVector logits(std::span<const int> prefix) const override;
    LogitSequence forward_sequence(std::span<const int> x) const override;

    // Final-layer hidden states for inputs x[0..m): row i summarises x[0..i].
    std::vector<double> hidden_states(std::span<const int> x) const;

    nn::Checkpoint to_checkpoint(const nlohmann::json &extra = {}) const;
    static NeuralTeacher from_checkpoint(const nn::Checkpoint &ckpt);

private:
    LogitVector first_logits() const;

    nn::Transformer net_;
    int first_token_;
};

// Forwards to another teacher and counts forward_sequence calls.
class CountingTeacher final : public TeacherModel {
public:
    explicit CountingTeacher(const TeacherModel &inner) : inner_(inner) {}
    int vocab_size() const override { return inner_.vocab_size(); }
    LogitVector logits(std::span<const int> prefix) const override { return inner_.logits(prefix); }
    LogitSequence forward_sequence(std::span<const int> x) const override {
        forward_calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.forward_sequence(x);
    }
    long forward_calls() const { return forward_calls_.load(); }

private:
    const TeacherModel &inner_;
    mutable std::atomic<long> forward_calls_{0};
};

struct NeuralTrainConfig {
    nn::ArchitectureConfig arch = NeuralTeacher::default_architecture(6, 12);
    int epochs = 40;
    int batch_size = 64;
    nn::AdamConfig adam{1e-3};
    std::uint64_t seed = 0;
    int first_token = 0;
};

struct EpochLog {
    int epoch;
    long step;
    double loss;
    double lr;
    double wall_ms;
};

struct NeuralTrainResult {
    NeuralTeacher model;
    std::vector<EpochLog> log;
    double initial_loss;
};

// Next-token cross-entropy on fixed-length corpus sequences. Throws
// DivergenceError on a non-finite loss.
NeuralTrainResult neural_teacher_train(const std::vector<TokenSequence> &corpus, const NeuralTrainConfig &config);

// Ancestral Gumbel-Max sampling. Position 0 is drawn from the empty-prefix
// distribution; stops after `stop_token` or at max_len tokens.
TokenSequence teacher_sample(const TeacherModel &teacher, std::size_t max_len, Rng &rng, int stop_token = 1);

} // namespace gdl::teacher
