#pragma once

// Masked-denoising student with Gumbel injection: masked positions receive
// softmax(xi) W_proj in place of the MASK embedding.

#include "gdl/extraction.hpp"
#include "gdl/maze.hpp"
#include "gdl/nn.hpp"
#include "gdl/noise.hpp"
#include "gdl/teacher.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gdl::mdlm {

enum class Freshness { per_sequence, per_step };
enum class LossWeight { unit, inverse_t };
enum class ExtractionMode { parallel, sequential };
enum class LrSchedule { constant, cosine };

Freshness parse_freshness(std::string_view s);
LossWeight parse_loss_weight(std::string_view s);
ExtractionMode parse_extraction_mode(std::string_view s);
const char *to_string(Freshness f);
const char *to_string(LossWeight w);
const char *to_string(ExtractionMode e);
LrSchedule parse_lr_schedule(std::string_view s);
const char *to_string(LrSchedule s);

// Cosine decays from base at step 0 to zero at total_steps.
double scheduled_lr(double base, LrSchedule schedule, long step, long total_steps);

struct ConditionSource {
    NoiseMode mode = NoiseMode::gumbel;
    double tau = 0.85;
    Freshness freshness = Freshness::per_sequence;
    // Gaussian arm only: draw N(0,1) noise independently instead of
    // transforming the Gumbel vector (loses the token information).
    bool independent_gaussian = false;
};

// normalize_condition(transform(tau * xi)). For independent_gaussian the
// transformed vector is replaced by fresh normals from `rng`.
std::vector<double> condition_row(const ConditionSource &cond, std::span<const double> xi, Rng *rng = nullptr);

// Reference form of the injection: rows flagged in `mask` become
// conditions_row * w_proj [cond_dim x d], the others keep their embedding.
std::vector<double> inject_condition(std::span<const double> embeddings, std::span<const std::uint8_t> mask,
                                     std::span<const double> conditions, const nn::Tensor &w_proj, std::size_t d);

class Student {
public:
    // A conditioned student (mode != none) owns W_proj; the baseline does not.
    Student(nn::ArchitectureConfig arch, NoiseMode mode);

    static nn::ArchitectureConfig default_architecture(int vocab, std::size_t length, NoiseMode mode);

    nn::Transformer &network() noexcept { return net_; }
    const nn::Transformer &network() const noexcept { return net_; }
    NoiseMode mode() const noexcept { return mode_; }
    bool conditioned() const noexcept { return mode_ != NoiseMode::none; }
    int vocab() const noexcept { return net_.config().vocab_out; }
    int mask_token() const noexcept { return net_.config().vocab_in - 1; }
    std::size_t length() const noexcept { return static_cast<std::size_t>(net_.config().n_max); }

    nn::Checkpoint to_checkpoint(const nlohmann::json &extra = {}) const;
    static Student from_checkpoint(const nn::Checkpoint &ckpt);

private:
    nn::Transformer net_;
    NoiseMode mode_;
};

struct BatchTensors {
    nn::InputBatch input;
    nn::TargetBatch targets;
};

// Builds the network batch for a set of triplets. Triplet noise is used only
// when the student is conditioned.
BatchTensors triplet_batch(const Student &student, const std::vector<extraction::DistillationTriplet> &triplets,
                           const ConditionSource &cond, LossWeight weight);

// Weighted masked cross-entropy and its exact gradient.
double nelbo_step(const Student &student, const std::vector<extraction::DistillationTriplet> &triplets,
                  const ConditionSource &cond, LossWeight weight, nn::ParamSet &grads);

struct TrainConfig {
    nn::ArchitectureConfig arch = Student::default_architecture(maze::kVocabSize, 12, NoiseMode::gumbel);
    int epochs = 60;
    int batch_size = 64;
    nn::AdamConfig adam{1e-3};
    LrSchedule schedule = LrSchedule::constant;
    extraction::MaskRule mask;
    LossWeight weight = LossWeight::unit;
    ConditionSource condition{NoiseMode::gumbel, 1.0, Freshness::per_sequence, false};
    ExtractionMode extraction = ExtractionMode::parallel;
    std::uint64_t seed = 0;
    // Offline mode: fixed (tokens, noise) records replace online extraction.
    const std::vector<extraction::Extracted> *offline = nullptr;
    // Write a checkpoint every N epochs (0 = never) to checkpoint_path.
    int checkpoint_every = 0;
    std::string checkpoint_path;
};

struct TrainResult {
    Student student;
    std::vector<teacher::EpochLog> log;
};

// Online training loop. The teacher is required unless the condition mode is
// none or offline records are supplied; in parallel mode it is queried with
// exactly one forward_sequence per corpus sequence per epoch.
TrainResult train(const std::vector<TokenSequence> &corpus, const teacher::TeacherModel *teacher,
                  const TrainConfig &config);

struct SampleOptions {
    bool greedy = false;                // argmax commitment instead of sampling
    std::vector<std::size_t> order;     // fixed unmasking order (empty = random)
    std::size_t block_size = 0;         // 0 = one block spanning the sequence
    const extraction::GumbelSequence *noise = nullptr; // fixed conditioning noise
};

struct SampleResult {
    TokenSequence tokens;
    std::size_t nfe = 0; // forward passes actually used
};

// Starts fully masked. Within each block, step s reveals
// ceil(remaining / steps_left) positions; with nfe > block length the last
// steps are skipped. `nfe` is per block.
SampleResult ancestral_sample(const Student &student, std::size_t nfe, const ConditionSource &cond, Rng &rng,
                              const SampleOptions &options = {});

SampleResult block_sample(const Student &student, std::size_t block_size, std::size_t nfe_per_block,
                          const ConditionSource &cond, Rng &rng);

// `count` independent samples run as one batch; sample i uses
// stream(seed, "eval", nfe, i) and equals the matching ancestral_sample call.
std::vector<SampleResult> sample_many(const Student &student, std::size_t count, std::size_t nfe,
                                      const ConditionSource &cond, std::uint64_t seed,
                                      const SampleOptions &options = {});

Rng eval_stream(std::uint64_t seed, std::size_t nfe, std::size_t index);

struct EvalRow {
    std::size_t nfe;
    double success_rate;
    std::size_t samples;
    std::size_t invalid_under_teacher; // zero-probability samples (NLL infinite)
    double mean_nll;                   // over samples with finite NLL; NaN if none
};

std::vector<EvalRow> evaluate(const Student &student, const maze::MazeSpec &spec,
                              const teacher::TabularTeacher *exact, const std::vector<std::size_t> &nfes,
                              std::size_t samples, const ConditionSource &cond, std::uint64_t seed);

// -log p(x) under the teacher; +inf if any token has probability 0.
double sequence_nll(const teacher::TabularTeacher &teacher, std::span<const int> x);

} // namespace gdl::mdlm
