#include "commands.hpp"

#include "gdl/ablation.hpp"
#include "gdl/errors.hpp"
#include "gdl/extraction.hpp"
#include "gdl/io.hpp"
#include "gdl/stats.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace gdl::cli {

using nlohmann::json;

namespace {

std::string out_path(const RunConfig &c, const std::string &file) {
    return (std::filesystem::path(c.out) / file).string();
}

// The output directory does not take part in an artifact's identity.
nlohmann::json meta_for(const RunConfig &c) {
    json j = c.to_json();
    j.erase("out");
    return io::artifact_meta(c.seed, j);
}

// Writes an artifact and records {seed, config hash, format version} for it.
void emit(const RunConfig &c, const std::string &file, const std::string &contents) {
    io::ensure_dir(c.out);
    io::write_file(out_path(c, file), contents);
    io::record_artifact(c.out, file, meta_for(c));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) { return std::isfinite(v) ? io::format_double(v) : ""; }

// Exact tabular teacher over the full enumeration, with optional smoothing.
teacher::TabularTeacher tabular_teacher(const RunConfig &c) {
    return teacher::TabularTeacher::from_corpus(maze::enumerate_paths(c.maze, 0, c.seed), c.teacher.smoothing,
                                                maze::kVocabSize);
}

std::vector<TokenSequence> corpus_for(const RunConfig &c) {
    const std::string path = out_path(c, "corpus.ndjson");
    if (std::filesystem::exists(path)) {
        return maze::load_corpus(path);
    }
    auto corpus = maze::enumerate_paths(c.maze, c.corpus_cap, c.seed);
    emit(c, "corpus.ndjson", maze::corpus_to_ndjson(corpus));
    return corpus;
}

teacher::NeuralTeacher neural_teacher(const RunConfig &c, const std::vector<TokenSequence> &corpus,
                                      const std::string &checkpoint) {
    if (!checkpoint.empty()) {
        return teacher::NeuralTeacher::from_checkpoint(nn::load_checkpoint(checkpoint));
    }
    auto cfg = c.teacher.neural;
    cfg.seed = c.seed;
    cfg.first_token = maze::kBos;
    cfg.arch.n_max = static_cast<int>(c.maze.sequence_length()) - 1;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = teacher::neural_teacher_train(corpus, cfg);
    std::fprintf(stderr, "teacher: loss %.4f -> %.4f in %.1fs\n", res.initial_loss, res.log.back().loss,
                 seconds_since(t0));
    io::ensure_dir(c.out);
    nn::save_checkpoint(out_path(c, "teacher.ckpt"), res.model.to_checkpoint(meta_for(c)));
    io::record_artifact(c.out, "teacher.ckpt", meta_for(c));
    return std::move(res.model);
}

mdlm::Student load_student(const RunConfig &c, const ModelOptions &o) {
    const std::string path = o.checkpoint.empty() ? out_path(c, "student.ckpt") : o.checkpoint;
    return mdlm::Student::from_checkpoint(nn::load_checkpoint(path));
}

mdlm::SampleOptions sample_options(const RunConfig &c) {
    mdlm::SampleOptions o;
    o.greedy = c.eval.greedy;
    o.block_size = c.eval.block_size;
    return o;
}

} // namespace

int cmd_verify_posterior(const RunConfig &c, const VerifyOptions &o) {
    if (o.trials < 10000) {
        throw ConfigError("verify-posterior: --trials must be at least 10000");
    }
    if (!(o.significance > 0.0 && o.significance < 1.0)) {
        throw ConfigError("verify-posterior: --significance must lie in (0, 1)");
    }
    PosteriorVariant variant = PosteriorVariant::reference;
    if (o.inject_bug == "alt-formula") {
        variant = PosteriorVariant::alt_formula;
    } else if (o.inject_bug == "sign-flip") {
        variant = PosteriorVariant::sign_flip;
    } else if (!o.inject_bug.empty()) {
        throw ConfigError("unknown --inject-bug '" + o.inject_bug + "' (expected alt-formula or sign-flip)");
    }

    io::CsvWriter csv({"property", "v", "trials", "statistic", "p_value", "threshold", "pass", "seed"});
    bool all_pass = true;
    for (const std::size_t v : o.v_values) {
        if (v < 2) {
            throw ConfigError("verify-posterior: V values must be at least 2");
        }
        Rng rng = Rng::stream(c.seed, {name_key("verify"), v});
        std::vector<double> l(v);
        for (auto &e : l) {
            e = 1.5 * rng.normal();
        }
        const ProbVector p = softmax(l);
        const LogitVector lp = log_probs(p);

        // Property 1: conditioned token wins, strictly, for arbitrary x.
        long ok = 0;
        for (long i = 0; i < o.trials; ++i) {
            const std::size_t x = rng.below(v);
            const GumbelVector xi = posterior_gumbel(p, x, rng, variant);
            bool strict = true;
            for (std::size_t k = 0; k < v; ++k) {
                strict = strict && (k == x || lp[x] + xi[x] > lp[k] + xi[k]);
            }
            ok += strict ? 1 : 0;
        }
        const double rate = static_cast<double>(ok) / static_cast<double>(o.trials);
        const bool argmax_pass = ok == o.trials;
        csv.row({"argmax", std::to_string(v), std::to_string(o.trials), num(rate), "", "1", argmax_pass ? "1" : "0",
                 std::to_string(c.seed)});

        // Property 2: under x ~ p the pooled coordinates are standard Gumbel.
        std::vector<double> pooled;
        pooled.reserve(static_cast<std::size_t>(o.trials) * v);
        for (long i = 0; i < o.trials; ++i) {
            const std::size_t x = gumbel_max(lp, sample_gumbel(rng, v));
            const GumbelVector xi = posterior_gumbel(p, x, rng, variant);
            pooled.insert(pooled.end(), xi.values().begin(), xi.values().end());
        }
        const auto ks = stats::ks_one_sample(pooled, gumbel_cdf);
        const bool ks_pass = ks.p_value > o.significance;
        csv.row({"ks", std::to_string(v), std::to_string(o.trials), num(ks.statistic), num(ks.p_value),
                 num(o.significance), ks_pass ? "1" : "0", std::to_string(c.seed)});
        all_pass = all_pass && argmax_pass && ks_pass;
    }
    std::cout << csv.str();
    emit(c, "verify_posterior.csv", csv.str());
    std::fprintf(stderr, "verify-posterior: %s\n", all_pass ? "all properties hold" : "PROPERTY FAILURE");
    return all_pass ? kExitOk : kExitPropertyFailure;
}

int cmd_gen_data(const RunConfig &c) {
    const auto corpus = maze::enumerate_paths(c.maze, c.corpus_cap, c.seed);
    std::size_t valid = 0;
    for (const auto &x : corpus) {
        valid += maze::is_valid_path(c.maze, x) ? 1 : 0;
    }
    emit(c, "corpus.ndjson", maze::corpus_to_ndjson(corpus));
    std::fprintf(stderr, "gen-data: %zu sequences, %zu valid\n", corpus.size(), valid);
    if (c.offline) {
        const auto t = tabular_teacher(c);
        std::vector<extraction::Extracted> records;
        if (c.train.extraction == mdlm::ExtractionMode::parallel) {
            const auto noise = extraction::parallel_extract_all(t, corpus, c.seed);
            for (std::size_t s = 0; s < corpus.size(); ++s) {
                records.push_back({corpus[s], noise[s]});
            }
        } else {
            for (std::size_t s = 0; s < corpus.size(); ++s) {
                Rng rng = Rng::stream(c.seed, {name_key("extract-sequential"), 0, s});
                records.push_back(extraction::sequential_extract(t, c.maze.sequence_length(), rng));
            }
        }
        std::string text;
        for (const auto &r : records) {
            text += extraction::to_ndjson(r);
            text += '\n';
        }
        emit(c, "noise.ndjson", text);
        std::fprintf(stderr, "gen-data: wrote %zu noise records\n", records.size());
    }
    return valid == corpus.size() ? kExitOk : kExitPropertyFailure;
}

int cmd_train(const RunConfig &c) {
    const auto corpus = corpus_for(c);
    mdlm::TrainConfig cfg = c.train;
    cfg.seed = c.seed;
    cfg.arch.n_max = static_cast<int>(c.maze.sequence_length());

    std::vector<extraction::Extracted> offline;
    if (c.offline) {
        offline = extraction::load_ndjson(out_path(c, "noise.ndjson"));
        cfg.offline = &offline;
    }
    std::optional<teacher::TabularTeacher> tab;
    std::optional<teacher::NeuralTeacher> neural;
    const teacher::TeacherModel *t = nullptr;
    if (c.teacher.kind == TeacherKind::tabular) {
        tab.emplace(tabular_teacher(c));
        t = &*tab;
    } else {
        neural.emplace(neural_teacher(c, corpus, ""));
        t = &*neural;
    }
    if (cfg.checkpoint_every > 0) {
        cfg.checkpoint_path = out_path(c, "student.ckpt");
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto res = mdlm::train(corpus, t, cfg);
    const double secs = seconds_since(t0);

    io::CsvWriter log({"epoch", "step", "loss", "lr", "seed"});
    for (const auto &e : res.log) {
        log.row({std::to_string(e.epoch), std::to_string(e.step), num(e.loss), num(e.lr), std::to_string(c.seed)});
    }
    emit(c, "train_log.csv", log.str());
    io::ensure_dir(c.out);
    json meta = meta_for(c);
    meta["config"] = c.to_json();
    meta["config"].erase("out");
    nn::save_checkpoint(out_path(c, "student.ckpt"), res.student.to_checkpoint(meta));
    io::record_artifact(c.out, "student.ckpt", meta_for(c));
    std::fprintf(stderr, "train: %d epochs, loss %.4f -> %.4f in %.1fs\n", cfg.epochs, res.log.front().loss,
                 res.log.back().loss, secs);
    return kExitOk;
}

int cmd_sample(const RunConfig &c, const ModelOptions &o) {
    const auto student = load_student(c, o);
    const auto cond = c.inference_condition(student.mode());
    std::string text;
    for (const std::size_t nfe : c.eval.nfe) {
        const auto samples = mdlm::sample_many(student, c.eval.samples, nfe, cond, c.seed, sample_options(c));
        for (std::size_t i = 0; i < samples.size(); ++i) {
            text += json{{"nfe", nfe},
                         {"index", i},
                         {"tokens", samples[i].tokens},
                         {"valid", maze::is_valid_path(c.maze, samples[i].tokens)},
                         {"mode", to_string(student.mode())},
                         {"nfe_used", samples[i].nfe}}
                        .dump();
            text += '\n';
        }
    }
    std::cout << text;
    emit(c, "samples.ndjson", text);
    return kExitOk;
}

int cmd_eval(const RunConfig &c, const ModelOptions &o) {
    const auto student = load_student(c, o);
    const auto exact = teacher::TabularTeacher::from_corpus(maze::enumerate_paths(c.maze, 0, c.seed), 0.0,
                                                            maze::kVocabSize);
    const auto rows =
        mdlm::evaluate(student, c.maze, &exact, c.eval.nfe, c.eval.samples, c.inference_condition(student.mode()),
                       c.seed);
    io::CsvWriter csv({"nfe", "success_rate", "samples", "invalid_under_teacher", "mean_nll", "seed"});
    for (const auto &r : rows) {
        csv.row({std::to_string(r.nfe), num(r.success_rate), std::to_string(r.samples),
                 std::to_string(r.invalid_under_teacher), num(r.mean_nll), std::to_string(c.seed)});
    }
    std::cout << csv.str();
    emit(c, "eval.csv", csv.str());
    return kExitOk;
}

int cmd_mtp(const RunConfig &c, const ModelOptions &o) {
    const auto corpus = corpus_for(c);
    const auto backbone = neural_teacher(c, corpus, o.teacher_checkpoint);
    io::CsvWriter csv({"arm", "head", "attempted", "accepted", "conditional_rate", "stderr", "mean_accepted_length",
                       "trials", "seed"});
    for (const bool conditioned : {true, false}) {
        auto hc = c.mtp.heads;
        hc.seed = c.seed;
        hc.heads.conditioned = conditioned;
        const auto t0 = std::chrono::steady_clock::now();
        const auto heads = mtp::train_heads(backbone, corpus, hc).heads;
        auto ac = c.mtp.accept;
        ac.seed = c.seed;
        const auto s = mtp::evaluate_acceptance(backbone, heads, corpus, ac);
        const char *arm = conditioned ? "gumbel" : "baseline";
        for (std::size_t k = 0; k < s.attempted.size(); ++k) {
            csv.row({arm, std::to_string(k), std::to_string(s.attempted[k]), std::to_string(s.accepted[k]),
                     num(s.conditional_rate(k)), num(s.rate_stderr(k)), num(s.mean_accepted_length()),
                     std::to_string(s.trials), std::to_string(c.seed)});
        }
        std::fprintf(stderr, "mtp: %s arm, mean accepted length %.3f (%.1fs)\n", arm, s.mean_accepted_length(),
                     seconds_since(t0));
    }
    std::cout << csv.str();
    emit(c, "mtp.csv", csv.str());
    return kExitOk;
}

int cmd_ablate(const RunConfig &c) {
    const auto setup = ablation::make_maze_setup(c.maze, c.seed, c.corpus_cap);
    ablation::RunSettings rs;
    rs.train = c.train;
    rs.train.arch.n_max = static_cast<int>(c.maze.sequence_length());
    rs.tau_infer = c.tau_infer;
    rs.nfes = c.eval.nfe;
    rs.samples = c.eval.samples;
    rs.seed = c.seed;
    rs.parallel_arms = c.parallel_arms;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = ablation::run_ablation(c.arms, setup, rs);
    const std::string csv = ablation::report_csv(rows);
    std::cout << csv;
    emit(c, "ablation.csv", csv);
    std::fprintf(stderr, "ablate: %zu arms in %.1fs\n", c.arms.size(), seconds_since(t0));
    return kExitOk;
}

} // namespace gdl::cli
