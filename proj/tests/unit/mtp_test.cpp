#include "gdl/errors.hpp"
#include "gdl/maze.hpp"
#include "gdl/student_mtp.hpp"

#include <doctest.h>

#include <cmath>

using namespace gdl;
using mtp::MtpHeads;

namespace {

teacher::NeuralTeacher random_backbone(std::uint64_t seed) {
    auto arch = teacher::NeuralTeacher::default_architecture(maze::kVocabSize, 12);
    arch.d_model = 16;
    arch.layers = 1;
    arch.heads = 2;
    arch.mlp_ratio = 2;
    teacher::NeuralTeacher t(arch, maze::kBos);
    t.network().init(seed);
    Rng rng(seed);
    for (auto &v : t.network().params().at(nn::Transformer::kHeadWeight).data) {
        v = 0.3 * rng.normal();
    }
    return t;
}

std::vector<ConditionVector> random_conditions(Rng &rng, int k, std::size_t v) {
    std::vector<ConditionVector> out;
    for (int j = 0; j < k; ++j) {
        out.push_back(normalize_condition(sample_gumbel(rng, v)));
    }
    return out;
}

mtp::HeadsBatch random_batch(const MtpHeads &h, Rng &rng, std::size_t rows) {
    const std::size_t K = static_cast<std::size_t>(h.config().heads);
    const std::size_t V = h.vocab();
    mtp::HeadsBatch b;
    b.rows = rows;
    for (std::size_t i = 0; i < rows * h.d_model(); ++i) {
        b.hidden.push_back(rng.normal());
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (const auto &c : random_conditions(rng, static_cast<int>(K), V)) {
            b.conditions.insert(b.conditions.end(), c.values().begin(), c.values().end());
        }
        for (std::size_t k = 0; k < K; ++k) {
            b.targets.push_back(k == 0 || rng.uniform01() < 0.2 ? -1 : static_cast<int>(rng.below(V)));
        }
    }
    return b;
}

} // namespace

TEST_SUITE("mtp") {

TEST_CASE("fresh heads reproduce head 0") {
    const auto bb = random_backbone(1);
    for (const auto routing : {mtp::Routing::cumulative, mtp::Routing::own_offset}) {
        const MtpHeads h(bb, {4, true, routing});
        const TokenSequence x{0, 5, 5, 2};
        const auto hidden = bb.hidden_states(x);
        const LogitVector next = bb.logits(x);
        Rng rng(2);
        const std::size_t d = h.d_model();
        const auto out = mtp::heads_forward(h, std::span<const double>(hidden).subspan(3 * d, d),
                                            random_conditions(rng, 4, 6));
        REQUIRE(out.size() == 4);
        for (std::size_t v = 0; v < 6; ++v) {
            CHECK(out[0][v] == doctest::Approx(next[v]).epsilon(1e-12));
        }
        for (std::size_t k = 1; k < 4; ++k) {
            for (std::size_t v = 0; v < 6; ++v) {
                CHECK(out[k][v] == doctest::Approx(out[0][v]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("routing") {
    const auto bb = random_backbone(3);
    const MtpHeads cum(bb, {4, true, mtp::Routing::cumulative});
    CHECK(cum.routed_offsets(0).empty());
    CHECK(cum.routed_offsets(2) == std::vector<int>{0, 1, 2});
    const MtpHeads own(bb, {4, true, mtp::Routing::own_offset});
    CHECK(own.routed_offsets(3) == std::vector<int>{3});
    const MtpHeads plain(bb, {4, false, mtp::Routing::cumulative});
    CHECK(plain.routed_offsets(3).empty());
    CHECK(plain.params().find(MtpHeads::proj_name(1, 0)) == nullptr);
    CHECK(mtp::parse_routing(mtp::to_string(mtp::Routing::own_offset)) == mtp::Routing::own_offset);
    CHECK_THROWS_AS(mtp::parse_routing("diagonal"), ConfigError);
}

TEST_CASE("heads loss gradient") {
    const auto bb = random_backbone(4);
    for (const bool conditioned : {true, false}) {
        CAPTURE(conditioned);
        MtpHeads h(bb, {3, conditioned, mtp::Routing::cumulative});
        Rng rng(5);
        for (auto &t : h.params()) {
            for (auto &v : t.data) {
                v += 0.2 * rng.normal();
            }
        }
        const auto batch = random_batch(h, rng, 5);
        nn::ParamSet grads;
        std::vector<double> per_head;
        const double loss = mtp::heads_loss(h, batch, &grads, &per_head);
        CHECK(loss == doctest::Approx(per_head[1] + per_head[2]));
        const auto report = nn::grad_check(h.params(), grads, [&] { return mtp::heads_loss(h, batch, nullptr); });
        for (const auto &t : report.tensors) {
            CAPTURE(t.name);
            CHECK(t.max_rel_error < 1e-5);
        }
    }
}

TEST_CASE("typical acceptance") {
    const mtp::TypicalAcceptParams p{0.1, 1.0};
    const ProbVector a{0.5, 0.3, 0.15, 0.05};
    CHECK(mtp::typical_accept(a, 0, p));
    CHECK(mtp::typical_accept(a, 2, p));
    CHECK_FALSE(mtp::typical_accept(a, 3, p));
    // Flat distribution over 100: exp(-H) = 0.01 is the binding threshold.
    std::vector<double> flat(100, 0.01);
    CHECK_FALSE(mtp::typical_accept(ProbVector(flat), 0, p));
    flat[0] = 0.0101;
    flat[1] = 0.0099;
    CHECK(mtp::typical_accept(ProbVector(flat), 0, p));
    CHECK_FALSE(mtp::typical_accept(ProbVector(flat), 1, p));
}

TEST_CASE("acceptance bookkeeping") {
    const auto bb = random_backbone(6);
    const MtpHeads h(bb, {4, true, mtp::Routing::cumulative});
    const auto corpus = maze::enumerate_paths(maze::MazeSpec{}, 50, 1);
    mtp::AcceptanceConfig cfg;
    cfg.trials = 200;
    const auto s = mtp::evaluate_acceptance(bb, h, corpus, cfg);
    CHECK(s.trials == 200);
    CHECK(s.conditional_rate(0) == 1.0);
    long extra = 0;
    for (std::size_t k = 1; k < s.accepted.size(); ++k) {
        extra += s.accepted[k];
        CHECK(s.attempted[k] <= s.accepted[k - 1]);
    }
    CHECK(s.accepted_tokens == s.trials + extra);
    CHECK(s.mean_accepted_length() == doctest::Approx(1.0 + static_cast<double>(extra) / 200.0));
    CHECK(mtp::evaluate_acceptance(bb, h, corpus, cfg).accepted == s.accepted);
}

TEST_CASE("head training leaves the backbone alone") {
    const auto bb = random_backbone(7);
    const auto before = bb.network().params();
    const auto corpus = maze::enumerate_paths(maze::MazeSpec{}, 64, 2);
    mtp::HeadsTrainConfig cfg;
    cfg.heads = {3, true, mtp::Routing::cumulative};
    cfg.epochs = 4;
    cfg.batch_size = 64;
    cfg.adam.lr = 3e-3;
    const auto res = mtp::train_heads(bb, corpus, cfg);
    CHECK(bb.network().params() == before);
    REQUIRE(res.head_loss.size() == 4);
    CHECK(res.head_loss.back()[1] < res.head_loss.front()[1]);
    const auto back = MtpHeads::from_checkpoint(bb, nn::decode_checkpoint(nn::encode_checkpoint(res.heads.to_checkpoint())));
    CHECK(back.params() == res.heads.params());
}

} // TEST_SUITE
