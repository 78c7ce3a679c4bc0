#include "gdl/student_mdlm.hpp"

#include "gdl/errors.hpp"
#include "gdl/simd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace gdl::mdlm {

using extraction::DistillationTriplet;
using extraction::GumbelSequence;

Freshness parse_freshness(std::string_view s) {
    if (s == "per-sequence") {
        return Freshness::per_sequence;
    }
    if (s == "per-step") {
        return Freshness::per_step;
    }
    throw ConfigError("unknown noise freshness '" + std::string(s) + "' (expected per-sequence or per-step)");
}

LossWeight parse_loss_weight(std::string_view s) {
    if (s == "unit") {
        return LossWeight::unit;
    }
    if (s == "inverse-t") {
        return LossWeight::inverse_t;
    }
    throw ConfigError("unknown loss weight '" + std::string(s) + "' (expected unit or inverse-t)");
}

ExtractionMode parse_extraction_mode(std::string_view s) {
    if (s == "parallel") {
        return ExtractionMode::parallel;
    }
    if (s == "sequential") {
        return ExtractionMode::sequential;
    }
    throw ConfigError("unknown extraction mode '" + std::string(s) + "' (expected parallel or sequential)");
}

LrSchedule parse_lr_schedule(std::string_view s) {
    if (s == "constant") {
        return LrSchedule::constant;
    }
    if (s == "cosine") {
        return LrSchedule::cosine;
    }
    throw ConfigError("unknown lr schedule '" + std::string(s) + "' (expected constant or cosine)");
}

const char *to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "cosine"; }

double scheduled_lr(double base, LrSchedule schedule, long step, long total_steps) {
    if (schedule == LrSchedule::constant || total_steps <= 0) {
        return base;
    }
    const double frac = static_cast<double>(std::clamp(step, 0L, total_steps)) / static_cast<double>(total_steps);
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

const char *to_string(Freshness f) { return f == Freshness::per_sequence ? "per-sequence" : "per-step"; }
const char *to_string(LossWeight w) { return w == LossWeight::unit ? "unit" : "inverse-t"; }
const char *to_string(ExtractionMode e) { return e == ExtractionMode::parallel ? "parallel" : "sequential"; }

std::vector<double> condition_row(const ConditionSource &cond, std::span<const double> xi, Rng *rng) {
    if (cond.mode == NoiseMode::none) {
        throw ContractError("condition_row: mode none has no condition");
    }
    std::vector<double> v;
    if (cond.mode == NoiseMode::gaussian && cond.independent_gaussian) {
        if (rng == nullptr) {
            throw ContractError("condition_row: independent gaussian noise needs a random stream");
        }
        v.resize(xi.size());
        for (auto &e : v) {
            e = rng->normal();
        }
    } else {
        const GumbelVector scaled = calibrate(GumbelVector(std::vector<double>(xi.begin(), xi.end())),
                                              Temperature(cond.tau));
        v = transform_noise(cond.mode, scaled.span());
    }
    return normalize_condition(v).values();
}

std::vector<double> inject_condition(std::span<const double> embeddings, std::span<const std::uint8_t> mask,
                                     std::span<const double> conditions, const nn::Tensor &w_proj, std::size_t d) {
    if (d == 0 || embeddings.size() % d != 0 || mask.size() != embeddings.size() / d) {
        throw ContractError("inject_condition: embeddings and mask are misaligned");
    }
    if (w_proj.shape.size() != 2 || w_proj.shape[1] != d) {
        throw ContractError("inject_condition: projection must be [cond_dim x d]");
    }
    const std::size_t cd = w_proj.shape[0];
    if (conditions.size() != mask.size() * cd) {
        throw ContractError("inject_condition: condition rows and mask are misaligned");
    }
    std::vector<double> out(embeddings.begin(), embeddings.end());
    for (std::size_t r = 0; r < mask.size(); ++r) {
        if (mask[r] == 0) {
            continue;
        }
        double *row = out.data() + r * d;
        std::fill(row, row + d, 0.0);
        for (std::size_t v = 0; v < cd; ++v) {
            for (std::size_t j = 0; j < d; ++j) {
                row[j] += conditions[r * cd + v] * w_proj.data[v * d + j];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- model

Student::Student(nn::ArchitectureConfig arch, NoiseMode mode) : net_(arch), mode_(mode) {
    if (arch.causal) {
        throw ConfigError("student: architecture must be bidirectional");
    }
    if (arch.vocab_in != arch.vocab_out + 1) {
        throw ConfigError("student: vocab_in must be vocab_out + 1 (the MASK id)");
    }
    if (conditioned() != (arch.cond_dim > 0)) {
        throw ConfigError("student: cond_dim must be positive exactly when a noise mode is set");
    }
    if (conditioned() && arch.cond_dim != arch.vocab_out) {
        throw ConfigError("student: cond_dim must equal the vocabulary size");
    }
}

nn::ArchitectureConfig Student::default_architecture(int vocab, std::size_t length, NoiseMode mode) {
    nn::ArchitectureConfig a;
    a.vocab_in = vocab + 1;
    a.vocab_out = vocab;
    a.n_max = static_cast<int>(length);
    a.d_model = 32;
    a.layers = 6;
    a.heads = 4;
    a.mlp_ratio = 2;
    a.causal = false;
    a.cond_dim = mode == NoiseMode::none ? 0 : vocab;
    return a;
}

nn::Checkpoint Student::to_checkpoint(const nlohmann::json &extra) const {
    nn::Checkpoint ckpt;
    ckpt.meta = extra.is_object() ? extra : nlohmann::json::object();
    ckpt.meta["kind"] = "mdlm-student";
    ckpt.meta["architecture"] = net_.config().to_json();
    ckpt.meta["noise_mode"] = to_string(mode_);
    ckpt.params = net_.params();
    return ckpt;
}

Student Student::from_checkpoint(const nn::Checkpoint &ckpt) {
    if (ckpt.meta.value("kind", std::string()) != "mdlm-student") {
        throw ConfigError("checkpoint does not hold a denoising student");
    }
    Student s(nn::ArchitectureConfig::from_json(ckpt.meta.at("architecture")),
              parse_noise_mode(ckpt.meta.value("noise_mode", std::string("none"))));
    if (!s.net_.params().same_layout(ckpt.params)) {
        throw ConfigError("student checkpoint tensors do not match its architecture");
    }
    s.net_.params() = ckpt.params;
    return s;
}

// ---------------------------------------------------------------- training

BatchTensors triplet_batch(const Student &student, const std::vector<DistillationTriplet> &triplets,
                           const ConditionSource &cond, LossWeight weight) {
    if (triplets.empty()) {
        throw ContractError("triplet_batch: empty batch");
    }
    const std::size_t L = triplets.front().context.size();
    const auto V = static_cast<std::size_t>(student.vocab());
    BatchTensors bt;
    bt.input.batch = triplets.size();
    bt.input.length = L;
    const std::size_t rows = bt.input.rows();
    bt.input.tokens.reserve(rows);
    bt.targets.targets.assign(rows, -1);
    bt.targets.weights.assign(rows, 0.0);
    if (student.conditioned()) {
        bt.input.use_condition.assign(rows, 0);
        bt.input.conditions.assign(rows * V, 0.0);
    }
    for (std::size_t b = 0; b < triplets.size(); ++b) {
        const auto &tr = triplets[b];
        if (tr.context.size() != L) {
            throw ContractError("triplet_batch: sequences differ in length");
        }
        if (tr.targets.size() != tr.positions.size()) {
            throw ContractError("triplet_batch: targets and positions are misaligned");
        }
        bt.input.tokens.insert(bt.input.tokens.end(), tr.context.begin(), tr.context.end());
        const double w = weight == LossWeight::unit ? 1.0 : 1.0 / tr.t;
        if (student.conditioned() && tr.noise.size() != tr.positions.size()) {
            throw ContractError("triplet_batch: conditioned training needs noise at every target position");
        }
        for (std::size_t j = 0; j < tr.positions.size(); ++j) {
            const std::size_t r = b * L + tr.positions[j];
            bt.targets.targets[r] = tr.targets[j];
            bt.targets.weights[r] = w;
            if (student.conditioned()) {
                const auto c = condition_row(cond, tr.noise[j].span());
                bt.input.use_condition[r] = 1;
                std::copy(c.begin(), c.end(), bt.input.conditions.begin() + static_cast<std::ptrdiff_t>(r * V));
            }
        }
    }
    return bt;
}

double nelbo_step(const Student &student, const std::vector<DistillationTriplet> &triplets,
                  const ConditionSource &cond, LossWeight weight, nn::ParamSet &grads) {
    const BatchTensors bt = triplet_batch(student, triplets, cond, weight);
    return student.network().loss_and_grad(bt.input, bt.targets, grads);
}

TrainResult train(const std::vector<TokenSequence> &corpus, const teacher::TeacherModel *teacher,
                  const TrainConfig &config) {
    if (corpus.empty() && config.offline == nullptr) {
        throw ContractError("train: empty corpus");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw ConfigError("train: epochs and batch_size must be positive");
    }
    const NoiseMode mode = config.condition.mode;
    if (config.condition.freshness == Freshness::per_step) {
        // Training noise is tied to the sequence it was extracted for.
        throw ConfigError("train: per-step freshness is an inference-time option only");
    }
    const bool needs_noise = mode != NoiseMode::none;
    const bool offline = config.offline != nullptr;
    if (needs_noise && !offline && teacher == nullptr) {
        throw ConfigError("train: a teacher is required for conditioned online training");
    }
    if (config.extraction == ExtractionMode::sequential && !offline && teacher == nullptr) {
        throw ConfigError("train: sequential extraction needs a teacher");
    }

    Student student(config.arch, mode);
    student.network().init(stream_seed(config.seed, {name_key("init"), name_key("student")}));

    const std::size_t n_seq = offline ? config.offline->size() : corpus.size();
    const std::size_t length = student.length();
    std::vector<std::size_t> order(n_seq);
    std::iota(order.begin(), order.end(), std::size_t{0});

    nn::ParamSet grads;
    nn::AdamState state;
    std::vector<teacher::EpochLog> log;
    long step = 0;
    const auto per_epoch = static_cast<long>((n_seq + static_cast<std::size_t>(config.batch_size) - 1) /
                                             static_cast<std::size_t>(config.batch_size));
    const long total_steps = per_epoch * config.epochs;
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<TokenSequence> tokens(n_seq);
    std::vector<GumbelSequence> noise(n_seq);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto e = static_cast<std::uint64_t>(epoch);
        // Stage 1 for this epoch.
        if (offline) {
            if (epoch == 0) {
                for (std::size_t s = 0; s < n_seq; ++s) {
                    tokens[s] = (*config.offline)[s].tokens;
                    noise[s] = (*config.offline)[s].noise;
                }
            }
        } else if (config.extraction == ExtractionMode::sequential) {
            for (std::size_t s = 0; s < n_seq; ++s) {
                Rng rng = Rng::stream(config.seed, {name_key("extract-sequential"), e, s});
                auto ex = extraction::sequential_extract(*teacher, length, rng);
                tokens[s] = std::move(ex.tokens);
                noise[s] = needs_noise ? std::move(ex.noise) : GumbelSequence{};
            }
        } else {
            tokens = corpus;
            if (needs_noise) {
                noise = extraction::parallel_extract_all(*teacher, corpus, config.seed, (e << 32));
            }
        }
        for (std::size_t s = 0; s < n_seq; ++s) {
            if (tokens[s].size() != length) {
                throw ContractError("train: sequence length does not match the student");
            }
        }

        Rng shuffle = Rng::stream(config.seed, {name_key("train"), name_key("shuffle"), e});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.below(i)]);
        }

        double sum = 0.0;
        std::size_t batches = 0;
        std::vector<DistillationTriplet> triplets;
        for (std::size_t b0 = 0; b0 < n_seq; b0 += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t b1 = std::min(n_seq, b0 + static_cast<std::size_t>(config.batch_size));
            triplets.clear();
            for (std::size_t i = b0; i < b1; ++i) {
                const std::size_t s = order[i];
                Rng mrng = Rng::stream(config.seed, {name_key("train"), name_key("mask"), e, s});
                triplets.push_back(extraction::make_triplet(tokens[s], needs_noise ? noise[s] : GumbelSequence{},
                                                            config.mask, student.mask_token(), mrng));
            }
            sum += nelbo_step(student, triplets, config.condition, config.weight, grads);
            nn::AdamConfig ac = config.adam;
            ac.lr = scheduled_lr(config.adam.lr, config.schedule, step, total_steps);
            nn::adam_step(student.network().params(), grads, state, ac);
            ++step;
            ++batches;
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        log.push_back({epoch, step, sum / static_cast<double>(batches),
                       scheduled_lr(config.adam.lr, config.schedule, step - 1, total_steps), ms});
        if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 &&
            !config.checkpoint_path.empty()) {
            nn::save_checkpoint(config.checkpoint_path, student.to_checkpoint({{"epoch", epoch}}));
        }
    }
    return {std::move(student), std::move(log)};
}

// ---------------------------------------------------------------- sampling

namespace {

struct Chain {
    Rng *rng;
    TokenSequence tokens;
    std::vector<std::uint8_t> revealed;
    GumbelSequence noise;
};

void draw_noise(Chain &c, std::size_t L, std::size_t V) {
    c.noise.clear();
    for (std::size_t i = 0; i < L; ++i) {
        c.noise.push_back(sample_gumbel(*c.rng, V));
    }
}

// Runs every chain through the same block/step schedule in lockstep; the
// number of positions revealed per step depends only on the schedule.
std::size_t run_chains(const Student &student, std::vector<Chain> &chains, std::size_t nfe_per_block,
                       const ConditionSource &cond, const SampleOptions &options) {
    const std::size_t L = student.length();
    const auto V = static_cast<std::size_t>(student.vocab());
    const std::size_t c = options.block_size == 0 ? L : options.block_size;
    if (nfe_per_block < 1) {
        throw ContractError("sample: nfe must be at least 1");
    }
    if (c > L || L % c != 0) {
        throw ContractError("sample: block size must divide the sequence length");
    }
    if (!options.order.empty()) {
        auto sorted = options.order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < L; ++i) {
            if (sorted.size() != L || sorted[i] != i) {
                throw ContractError("sample: order must be a permutation of the positions");
            }
        }
    }
    const bool conditioned = student.conditioned();
    if (conditioned && cond.mode != student.mode()) {
        throw ContractError("sample: condition mode differs from the student's training mode");
    }
    if (options.noise != nullptr && (options.noise->size() != L || options.noise->front().size() != V)) {
        throw ContractError("sample: fixed noise must be length x vocab");
    }
    for (auto &ch : chains) {
        ch.tokens.assign(L, student.mask_token());
        ch.revealed.assign(L, 0);
        if (conditioned) {
            if (options.noise != nullptr) {
                ch.noise = *options.noise;
            } else {
                draw_noise(ch, L, V);
            }
        }
    }

    nn::InputBatch in;
    in.batch = chains.size();
    in.length = L;
    std::size_t nfe = 0;
    std::vector<std::size_t> pending;
    for (std::size_t lo = 0; lo < L; lo += c) {
        const std::size_t hi = lo + c;
        for (std::size_t s = 0; s < nfe_per_block; ++s) {
            std::size_t remaining = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                remaining += chains.front().revealed[i] == 0 ? 1 : 0;
            }
            if (remaining == 0) {
                break;
            }
            const std::size_t steps_left = nfe_per_block - s;
            const std::size_t k = (remaining + steps_left - 1) / steps_left;

            in.tokens.clear();
            in.use_condition.clear();
            in.conditions.clear();
            if (conditioned) {
                in.use_condition.assign(in.rows(), 0);
                in.conditions.assign(in.rows() * V, 0.0);
            }
            std::vector<std::vector<std::size_t>> chosen(chains.size());
            for (std::size_t b = 0; b < chains.size(); ++b) {
                Chain &ch = chains[b];
                if (conditioned && cond.freshness == Freshness::per_step && s + lo > 0 && options.noise == nullptr) {
                    draw_noise(ch, L, V);
                }
                // Pick the positions to commit this step.
                pending.clear();
                if (options.order.empty()) {
                    for (std::size_t i = lo; i < hi; ++i) {
                        if (ch.revealed[i] == 0) {
                            pending.push_back(i);
                        }
                    }
                    for (std::size_t j = 0; j < k; ++j) {
                        std::swap(pending[j], pending[j + ch.rng->below(pending.size() - j)]);
                    }
                } else {
                    for (const std::size_t i : options.order) {
                        if (i >= lo && i < hi && ch.revealed[i] == 0) {
                            pending.push_back(i);
                        }
                    }
                }
                chosen[b].assign(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(k));

                in.tokens.insert(in.tokens.end(), ch.tokens.begin(), ch.tokens.end());
                if (conditioned) {
                    for (std::size_t i = 0; i < hi; ++i) {
                        if (ch.revealed[i] != 0) {
                            continue;
                        }
                        const std::size_t r = b * L + i;
                        const auto row = condition_row(cond, ch.noise[i].span(), ch.rng);
                        in.use_condition[r] = 1;
                        std::copy(row.begin(), row.end(), in.conditions.begin() + static_cast<std::ptrdiff_t>(r * V));
                    }
                }
            }
            const auto fwd = student.network().forward(in);
            ++nfe;
            for (std::size_t b = 0; b < chains.size(); ++b) {
                Chain &ch = chains[b];
                for (const std::size_t i : chosen[b]) {
                    const double *row = fwd.logits.data() + (b * L + i) * V;
                    const std::span<const double> l(row, V);
                    std::size_t tok;
                    if (options.greedy) {
                        tok = argmax(l);
                    } else {
                        tok = sample_categorical(LogitVector(std::vector<double>(l.begin(), l.end())), *ch.rng).token;
                    }
                    ch.tokens[i] = static_cast<int>(tok);
                    ch.revealed[i] = 1;
                }
            }
        }
    }
    return nfe;
}

} // namespace

SampleResult ancestral_sample(const Student &student, std::size_t nfe, const ConditionSource &cond, Rng &rng,
                              const SampleOptions &options) {
    std::vector<Chain> chains(1);
    chains[0].rng = &rng;
    const std::size_t used = run_chains(student, chains, nfe, cond, options);
    return {std::move(chains[0].tokens), used};
}

SampleResult block_sample(const Student &student, std::size_t block_size, std::size_t nfe_per_block,
                          const ConditionSource &cond, Rng &rng) {
    SampleOptions options;
    options.block_size = block_size;
    return ancestral_sample(student, nfe_per_block, cond, rng, options);
}

Rng eval_stream(std::uint64_t seed, std::size_t nfe, std::size_t index) {
    return Rng::stream(seed, {name_key("eval"), static_cast<std::uint64_t>(nfe), static_cast<std::uint64_t>(index)});
}

std::vector<SampleResult> sample_many(const Student &student, std::size_t count, std::size_t nfe,
                                      const ConditionSource &cond, std::uint64_t seed, const SampleOptions &options) {
    std::vector<Rng> rngs;
    rngs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        rngs.push_back(eval_stream(seed, nfe, i));
    }
    std::vector<Chain> chains(count);
    for (std::size_t i = 0; i < count; ++i) {
        chains[i].rng = &rngs[i];
    }
    const std::size_t used = count == 0 ? 0 : run_chains(student, chains, nfe, cond, options);
    std::vector<SampleResult> out;
    out.reserve(count);
    for (auto &ch : chains) {
        out.push_back({std::move(ch.tokens), used});
    }
    return out;
}

double sequence_nll(const teacher::TabularTeacher &teacher, std::span<const int> x) {
    double nll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const ProbVector p = teacher.probs(x.first(i));
        const double pi = p[static_cast<std::size_t>(x[i])];
        if (pi <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        nll -= std::log(pi);
    }
    return nll;
}

std::vector<EvalRow> evaluate(const Student &student, const maze::MazeSpec &spec, const teacher::TabularTeacher *exact,
                              const std::vector<std::size_t> &nfes, std::size_t samples, const ConditionSource &cond,
                              std::uint64_t seed) {
    if (samples == 0) {
        throw ContractError("evaluate: samples must be positive");
    }
    std::vector<EvalRow> rows;
    for (const std::size_t nfe : nfes) {
        const auto draws = sample_many(student, samples, nfe, cond, seed);
        std::vector<TokenSequence> seqs;
        EvalRow row{nfe, 0.0, samples, 0, std::numeric_limits<double>::quiet_NaN()};
        double nll_sum = 0.0;
        std::size_t finite = 0;
        for (const auto &d : draws) {
            seqs.push_back(d.tokens);
            if (exact != nullptr) {
                const double nll = sequence_nll(*exact, d.tokens);
                if (std::isfinite(nll)) {
                    nll_sum += nll;
                    ++finite;
                } else {
                    ++row.invalid_under_teacher;
                }
            }
        }
        row.success_rate = maze::eval_success(spec, seqs);
        if (finite > 0) {
            row.mean_nll = nll_sum / static_cast<double>(finite);
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace gdl::mdlm
