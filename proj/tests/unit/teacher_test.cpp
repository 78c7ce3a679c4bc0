#include "gdl/errors.hpp"
#include "gdl/maze.hpp"
#include "gdl/teacher.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numeric>

using namespace gdl;
using teacher::TabularTeacher;

namespace {

bool same_bits(const LogitVector &a, const LogitVector &b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

std::string temp_path(const char *name) { return std::string("/tmp/gdl_unit_") + name; }

} // namespace

TEST_SUITE("teacher") {

TEST_CASE("tabular frequencies") {
    const TabularTeacher one = TabularTeacher::from_corpus({{0, 5, 1}}, 0.0, 6);
    CHECK(one.probs(TokenSequence{0})[5] == 1.0);
    CHECK(one.probs(TokenSequence{})[0] == 1.0);

    std::vector<TokenSequence> corpus{{0, 2}, {0, 2}, {0, 2}, {0, 3}};
    const TabularTeacher t = TabularTeacher::from_corpus(corpus, 0.0, 6);
    CHECK(t.probs(TokenSequence{0})[2] == doctest::Approx(0.75));
    CHECK(t.probs(TokenSequence{0})[3] == doctest::Approx(0.25));

    const TabularTeacher s = TabularTeacher::from_corpus(corpus, 0.06, 6);
    CHECK(s.probs(TokenSequence{0})[2] == doctest::Approx(0.94 * 0.75 + 0.01));
    CHECK(s.probs(TokenSequence{0})[4] == doctest::Approx(0.01));

    // Unseen prefix is uniform.
    CHECK(t.probs(TokenSequence{4, 4})[1] == doctest::Approx(1.0 / 6.0));
    CHECK_FALSE(t.knows(TokenSequence{4, 4}));

    CHECK_THROWS_AS(TabularTeacher::from_corpus({}, 0.0, 6), ContractError);
    CHECK_THROWS_AS(TabularTeacher::from_corpus(corpus, 0.2, 6), ContractError);
}

TEST_CASE("maze teacher rows are normalized") {
    const auto paths = maze::enumerate_paths(maze::MazeSpec{}, 0);
    const TabularTeacher t = TabularTeacher::from_corpus(paths, 0.0, maze::kVocabSize);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto &p = paths[rng.below(paths.size())];
        const auto prefix = std::span<const int>(p).first(rng.below(p.size() + 1));
        const ProbVector q = t.probs(prefix);
        REQUIRE(std::abs(std::accumulate(q.values().begin(), q.values().end(), 0.0) - 1.0) < 1e-9);
    }
}

TEST_CASE("exact maze teacher only samples valid paths") {
    const maze::MazeSpec spec;
    const auto paths = maze::enumerate_paths(spec, 0);
    const TabularTeacher t = TabularTeacher::from_corpus(paths, 0.0, maze::kVocabSize);
    Rng rng(2);
    int valid = 0;
    for (int i = 0; i < 10000; ++i) {
        auto x = teacher::teacher_sample(t, spec.sequence_length(), rng);
        x.resize(spec.sequence_length(), maze::kEos);
        valid += maze::is_valid_path(spec, x) ? 1 : 0;
    }
    CHECK(valid == 10000);
}

TEST_CASE("teacher_sample degenerate cases") {
    std::map<TokenSequence, ProbVector> table;
    table[{}] = ProbVector{1.0, 0.0, 0.0};
    table[{0}] = ProbVector{0.0, 1.0, 0.0};
    const TabularTeacher stop(3, table);
    Rng rng(3);
    CHECK(teacher::teacher_sample(stop, 10, rng) == TokenSequence{0, 1});

    table[{0}] = ProbVector{0.0, 0.0, 1.0};
    table[{0, 2}] = ProbVector{0.0, 0.0, 1.0};
    table[{0, 2, 2}] = ProbVector{0.0, 1.0, 0.0};
    const TabularTeacher chain(3, table);
    for (int i = 0; i < 20; ++i) {
        CHECK(teacher::teacher_sample(chain, 10, rng) == TokenSequence{0, 2, 2, 1});
    }
}

TEST_CASE("tabular ndjson round trip") {
    const auto paths = maze::enumerate_paths(maze::MazeSpec{}, 0);
    const TabularTeacher t = TabularTeacher::from_corpus(paths, 1e-4, maze::kVocabSize);
    const std::string path = temp_path("teacher.ndjson");
    t.save_ndjson(path);
    const TabularTeacher back = TabularTeacher::load_ndjson(path, maze::kVocabSize);
    CHECK(back.table() == t.table());
    std::remove(path.c_str());
}

TEST_CASE("neural teacher forward_sequence equals per-prefix logits bit for bit") {
    teacher::NeuralTeacher t(teacher::NeuralTeacher::default_architecture(6, 12), 0);
    t.network().init(11);
    // Non-trivial head so the check is not vacuous.
    Rng rng(4);
    for (auto &v : t.network().params().at(nn::Transformer::kHeadWeight).data) {
        v = 0.1 * rng.normal();
    }
    for (int trial = 0; trial < 20; ++trial) {
        TokenSequence x{0};
        const std::size_t n = 1 + rng.below(12);
        while (x.size() < n) {
            x.push_back(static_cast<int>(rng.below(6)));
        }
        const auto seq = t.forward_sequence(x);
        REQUIRE(seq.size() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(same_bits(seq[i], t.logits(std::span<const int>(x).first(i))));
        }
    }
    // Empty prefix puts all mass on the first token.
    const ProbVector p0 = softmax(t.logits(TokenSequence{}));
    CHECK(p0[0] == 1.0);
}

TEST_CASE("neural teacher is deterministic and causal") {
    teacher::NeuralTeacher t(teacher::NeuralTeacher::default_architecture(6, 12), 0);
    t.network().init(5);
    Rng rng(6);
    for (auto &v : t.network().params().at(nn::Transformer::kHeadWeight).data) {
        v = 0.1 * rng.normal();
    }
    const TokenSequence a{0, 2, 3, 4, 5, 2, 1};
    TokenSequence b = a;
    b[5] = 4;
    const auto la = t.forward_sequence(a);
    const auto lb = t.forward_sequence(b);
    for (std::size_t i = 0; i <= 5; ++i) {
        CHECK(same_bits(la[i], lb[i]));
    }
    CHECK_FALSE(same_bits(la[6], lb[6]));
    CHECK(same_bits(t.logits(a), t.logits(a)));
}

TEST_CASE("neural teacher training") {
    const auto corpus = maze::enumerate_paths(maze::MazeSpec{}, 256, 1);
    teacher::NeuralTrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 32;
    cfg.seed = 3;
    const auto res = teacher::neural_teacher_train(corpus, cfg);
    CHECK(std::abs(res.initial_loss - std::log(6.0)) < 0.05);
    REQUIRE(res.log.size() == 6);
    CHECK(res.log.back().loss < res.initial_loss);
    for (std::size_t e = 1; e < res.log.size(); ++e) {
        CHECK(res.log[e].loss <= 1.05 * res.log[e - 1].loss);
    }

    // Same seed, same bits.
    const auto again = teacher::neural_teacher_train(corpus, cfg);
    CHECK(again.model.network().params() == res.model.network().params());

    // Checkpoint round trip.
    const std::string path = temp_path("teacher.ckpt");
    nn::save_checkpoint(path, res.model.to_checkpoint({{"seed", 3}}));
    const auto back = teacher::NeuralTeacher::from_checkpoint(nn::load_checkpoint(path));
    CHECK(back.network().params() == res.model.network().params());
    CHECK(back.network().config() == res.model.network().config());
    std::remove(path.c_str());
}

TEST_CASE("counting wrapper") {
    const TabularTeacher t = TabularTeacher::from_corpus({{0, 5, 1}}, 0.0, 6);
    teacher::CountingTeacher c(t);
    c.forward_sequence(TokenSequence{0, 5, 1});
    c.forward_sequence(TokenSequence{0, 5});
    CHECK(c.forward_calls() == 2);
    CHECK(c.vocab_size() == 6);
}

} // TEST_SUITE
