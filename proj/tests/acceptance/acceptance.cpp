// Acceptance suite: one PASS/FAIL line per criterion.
//   gdl_acceptance            run everything
//   gdl_acceptance --only 1,4 run a subset

#include "gdl/ablation.hpp"
#include "gdl/extraction.hpp"
#include "gdl/gumbel.hpp"
#include "gdl/maze.hpp"
#include "gdl/stats.hpp"
#include "gdl/student_mdlm.hpp"
#include "gdl/student_mtp.hpp"
#include "gdl/teacher.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace gdl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ProbVector random_probs(Rng &rng, std::size_t v) {
    std::vector<double> l(v);
    for (auto &e : l) {
        e = 1.5 * rng.normal();
    }
    return softmax(l);
}

// 1. Posterior samples always reproduce the conditioned token, with room.
Outcome posterior_argmax() {
    Rng rng = Rng::stream(1, {name_key("acceptance"), 1});
    const long trials = 100000;
    long ok = 0;
    double min_margin = INFINITY;
    for (long i = 0; i < trials; ++i) {
        const std::size_t v = 2 + rng.below(7);
        const ProbVector p = random_probs(rng, v);
        const std::size_t x = rng.below(v);
        const GumbelVector xi = posterior_gumbel(p, x, rng);
        const LogitVector lp = log_probs(p);
        double best_other = -INFINITY;
        for (std::size_t k = 0; k < v; ++k) {
            if (k != x) {
                best_other = std::max(best_other, lp[k] + xi[k]);
            }
        }
        const double margin = lp[x] + xi[x] - best_other;
        min_margin = std::min(min_margin, margin);
        ok += (margin > 0.0 && gumbel_max(lp, xi) == x) ? 1 : 0;
    }
    return {ok == trials, fmt("%ld/%ld correct, min margin %.3g", ok, trials, min_margin)};
}

// 2. Marginals of the conditioned noise under x ~ p are standard Gumbel.
Outcome posterior_ks() {
    std::ostringstream detail;
    bool pass = true;
    double worst = 1.0;
    for (const std::size_t v : {2u, 3u, 5u}) {
        Rng rng = Rng::stream(2, {name_key("acceptance"), 2, v});
        const ProbVector p = random_probs(rng, v);
        const LogitVector lp = log_probs(p);
        std::vector<std::vector<double>> cols(v);
        for (int i = 0; i < 100000; ++i) {
            const std::size_t x = gumbel_max(lp, sample_gumbel(rng, v));
            const GumbelVector xi = posterior_gumbel(p, x, rng);
            for (std::size_t k = 0; k < v; ++k) {
                cols[k].push_back(xi[k]);
            }
        }
        for (std::size_t k = 0; k < v; ++k) {
            const double pv = stats::ks_one_sample(cols[k], gumbel_cdf).p_value;
            worst = std::min(worst, pv);
            pass = pass && pv > 0.001;
        }
    }
    detail << "10 marginals at N=1e5, min p-value " << fmt("%.4f", worst);
    return {pass, detail.str()};
}

// 3. Parallel extraction followed by replay is the identity on the corpus.
Outcome corpus_replay() {
    const maze::MazeSpec spec;
    const auto all = maze::enumerate_paths(spec, 0);
    const auto corpus = maze::enumerate_paths(spec, maze::kDefaultCorpusCap, 0);
    const auto t = teacher::TabularTeacher::from_corpus(all, 0.0, maze::kVocabSize);
    const auto noise = extraction::parallel_extract_all(t, corpus, 3);
    std::size_t same = 0;
    for (std::size_t s = 0; s < corpus.size(); ++s) {
        same += extraction::replay(t, noise[s]) == corpus[s] ? 1 : 0;
    }
    return {same == corpus.size(), fmt("%zu/%zu sequences reproduced", same, corpus.size())};
}

// 4. Gumbel-Max categorical sampling matches softmax.
Outcome categorical_tv() {
    Rng rng = Rng::stream(4, {name_key("acceptance"), 4});
    const LogitVector l(std::vector<double>{0.3, -1.2, 2.0, 0.0, -0.4});
    std::vector<double> freq(5, 0.0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        freq[sample_categorical(l, rng).token] += 1.0 / n;
    }
    const double tv = stats::total_variation(freq, softmax(l).values());
    return {tv < 0.01, fmt("TV %.5f at N=1e6", tv)};
}

// 5. Maze success rates for the Gumbel-conditioned student and the baseline.
Outcome maze_ablation() {
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const std::vector<std::size_t> nfes{1, 2, 4, 8, 16};
    std::map<std::string, std::map<std::size_t, double>> mean;
    const std::vector<ablation::AblationConfig> arms{{"gumbel", NoiseMode::gumbel}, {"baseline", NoiseMode::none}};
    for (const auto seed : seeds) {
        const auto setup = ablation::make_maze_setup(maze::MazeSpec{}, seed);
        ablation::RunSettings rs;
        rs.seed = seed;
        rs.nfes = nfes;
        rs.samples = 100;
        for (const auto &row : ablation::run_ablation(arms, setup, rs)) {
            mean[row.arm][row.nfe] += row.success_rate / static_cast<double>(seeds.size());
        }
    }
    auto &g = mean["gumbel"];
    auto &b = mean["baseline"];
    const bool a = g[4] >= 0.90;
    const bool bb = b[4] <= 0.85;
    const bool c = g[1] >= b[1] + 0.10 && g[2] >= b[2] + 0.10 && g[4] >= b[4] + 0.10;
    const bool d = g[16] >= g[1] && b[16] >= b[1];
    std::ostringstream s;
    s << "gumbel";
    for (const auto n : nfes) {
        s << fmt(" %zu:%.3f", n, g[n]);
    }
    s << " | baseline";
    for (const auto n : nfes) {
        s << fmt(" %zu:%.3f", n, b[n]);
    }
    s << fmt(" | (a)%s (b)%s (c)%s (d)%s", a ? "ok" : "FAIL", bb ? "ok" : "FAIL", c ? "ok" : "FAIL", d ? "ok" : "FAIL");
    return {a && bb && c && d, s.str()};
}

// 6. Speculative decoding with prediction heads.
Outcome mtp_acceptance() {
    const maze::MazeSpec spec;
    const auto corpus = maze::enumerate_paths(spec, maze::kDefaultCorpusCap, 0);
    teacher::NeuralTrainConfig tc;
    tc.seed = 6;
    const auto backbone = teacher::neural_teacher_train(corpus, tc).model;

    mtp::HeadsTrainConfig hc;
    hc.seed = 6;
    hc.heads.conditioned = true;
    const auto cond = mtp::train_heads(backbone, corpus, hc).heads;
    hc.heads.conditioned = false;
    const auto plain = mtp::train_heads(backbone, corpus, hc).heads;

    mtp::AcceptanceConfig ac;
    ac.trials = 1000;
    ac.seed = 6;
    const auto sc = mtp::evaluate_acceptance(backbone, cond, corpus, ac);
    const auto sp = mtp::evaluate_acceptance(backbone, plain, corpus, ac);

    bool monotone = true;
    std::ostringstream s;
    s << "conditioned rates";
    for (std::size_t k = 0; k < sc.attempted.size(); ++k) {
        s << fmt(" %.3f", sc.conditional_rate(k));
        if (k > 0 && sc.conditional_rate(k) > sc.conditional_rate(k - 1)) {
            monotone = false;
        }
    }
    s << " | baseline rates";
    for (std::size_t k = 0; k < sp.attempted.size(); ++k) {
        s << fmt(" %.3f", sp.conditional_rate(k));
    }
    const bool head0 = sc.conditional_rate(0) == 1.0 && sp.conditional_rate(0) == 1.0;
    const bool longer = sc.mean_accepted_length() >= sp.mean_accepted_length();
    s << fmt(" | mean length %.3f vs %.3f, %d trials", sc.mean_accepted_length(), sp.mean_accepted_length(),
             ac.trials);
    return {head0 && monotone && longer, s.str()};
}

// 7. Every trainable tensor of the student and the MTP heads against
// central differences.
struct GradTally {
    double worst = 0.0;
    std::string worst_name;
    std::size_t tensors = 0;
    std::size_t silent = 0;
    bool pass = true;

    void add(const nn::GradCheckReport &report, bool require_signal) {
        for (const auto &r : report.tensors) {
            ++tensors;
            if (r.max_rel_error >= worst) {
                worst = r.max_rel_error;
                worst_name = r.name;
            }
            pass = pass && r.passed && r.max_rel_error < 1e-5;
            if (require_signal && r.max_abs_grad == 0.0) {
                ++silent;
            }
        }
    }
};

void live_head(nn::Transformer &net, std::uint64_t seed) {
    // Same N(0, 0.02^2) law as every other weight, so no gradient is blocked.
    Rng rng = Rng::stream(seed, {name_key("grad-check"), name_key("head")});
    for (auto &v : net.params().at(nn::Transformer::kHeadWeight).data) {
        v = 0.02 * rng.normal();
    }
}

Outcome student_grad_check() {
    const maze::MazeSpec spec;
    const auto all = maze::enumerate_paths(spec, 0);
    const auto corpus = maze::enumerate_paths(spec, maze::kDefaultCorpusCap, 0);
    const auto t = teacher::TabularTeacher::from_corpus(all, 0.0, maze::kVocabSize);
    const std::vector<TokenSequence> pair(corpus.begin(), corpus.begin() + 2);
    nn::GradCheckOptions opt;
    opt.epsilon = 1e-4;
    opt.tolerance = 1e-5;
    GradTally tally;

    // Masked-denoising student with the Gumbel projection.
    mdlm::Student st(mdlm::Student::default_architecture(maze::kVocabSize, spec.sequence_length(), NoiseMode::gumbel),
                     NoiseMode::gumbel);
    st.network().init(stream_seed(7, {name_key("init"), name_key("student")}));
    const auto noise = extraction::parallel_extract_all(t, pair, 7);
    Rng rng = Rng::stream(7, {name_key("grad-check"), name_key("mask")});
    std::vector<extraction::DistillationTriplet> trip;
    for (std::size_t s = 0; s < 2; ++s) {
        extraction::MaskRule rule;
        rule.forced_t = 0.6;
        trip.push_back(extraction::make_triplet(pair[s], noise[s], rule, st.mask_token(), rng));
    }
    const auto bt = mdlm::triplet_batch(st, trip, {NoiseMode::gumbel, 1.0}, mdlm::LossWeight::unit);
    auto check_student = [&](bool require_signal) {
        nn::ParamSet grads;
        st.network().loss_and_grad(bt.input, bt.targets, grads);
        tally.add(nn::grad_check(st.network().params(), grads,
                                 [&] { return st.network().loss(bt.input, bt.targets); }, opt),
                  require_signal);
    };
    // The zero-initialized head blocks every upstream gradient, so the check
    // is repeated with a head drawn like the other weights.
    check_student(false);
    live_head(st.network(), 7);
    check_student(true);

    // Prediction heads on a causal backbone.
    teacher::NeuralTeacher backbone(teacher::NeuralTeacher::default_architecture(maze::kVocabSize,
                                                                                 static_cast<int>(spec.sequence_length())),
                                    maze::kBos);
    backbone.network().init(stream_seed(7, {name_key("init"), name_key("teacher")}));
    live_head(backbone.network(), 8);
    mtp::MtpHeads heads(backbone, {4, true, mtp::Routing::cumulative});
    const auto mtp_noise = extraction::parallel_extract_all(backbone, pair, 7);
    const auto hb = mtp::make_heads_batch(backbone, heads, pair, mtp_noise);
    nn::ParamSet hgrads;
    mtp::heads_loss(heads, hb, &hgrads);
    tally.add(nn::grad_check(heads.params(), hgrads, [&] { return mtp::heads_loss(heads, hb, nullptr); }, opt), true);

    return {tally.pass && tally.silent == 0,
            fmt("%zu tensor checks (student at init, student with live head, MTP heads), max rel error %.3g (%s), "
                "%zu with zero gradient",
                tally.tensors, tally.worst, tally.worst_name.c_str(), tally.silent)};
}

// 8. Temperature-scaled Gumbel variance.
Outcome calibrated_variance() {
    Rng rng = Rng::stream(8, {name_key("acceptance"), 8});
    const Temperature tau(0.85);
    std::vector<double> xs;
    xs.reserve(1000000);
    for (int i = 0; i < 1000000; ++i) {
        xs.push_back(calibrate(GumbelVector(std::vector<double>{sample_gumbel(rng)}), tau)[0]);
    }
    const double var = stats::moments(xs).variance;
    const double want = 0.85 * 0.85 * std::numbers::pi * std::numbers::pi / 6.0;
    return {std::abs(var - 1.1885) <= 0.02, fmt("Var %.4f (tau^2 pi^2/6 = %.4f)", var, want)};
}

struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv) {
    CLI::App app("Acceptance criteria");
    std::vector<int> only;
    app.add_option("--only", only, "Criterion numbers to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "posterior argmax", 10, posterior_argmax},
        {2, "posterior marginals KS", 30, posterior_ks},
        {3, "corpus replay", 5, corpus_replay},
        {4, "categorical TV", 30, categorical_tv},
        {5, "maze ablation", 1200, maze_ablation},
        {6, "MTP acceptance", 600, mtp_acceptance},
        {7, "student gradient check", 120, student_grad_check},
        {8, "calibrated variance", 5, calibrated_variance},
    };
    const std::set<int> want(only.begin(), only.end());
    int failed = 0;
    for (const auto &c : all) {
        if (!want.empty() && want.count(c.id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %d %-24s %s  %s  [%.1fs of %.0fs]\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), s, c.budget_s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
