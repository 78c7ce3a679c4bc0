#include "gdl/errors.hpp"
#include "gdl/nn.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>

using namespace gdl;
using nn::ArchitectureConfig;
using nn::Transformer;

namespace {

ArchitectureConfig small_arch(bool causal, int cond_dim) {
    ArchitectureConfig a;
    a.vocab_in = 7;
    a.vocab_out = 6;
    a.n_max = 12;
    a.d_model = 16;
    a.layers = 2;
    a.heads = 4;
    a.mlp_ratio = 2;
    a.causal = causal;
    a.cond_dim = cond_dim;
    return a;
}

// Two maze-like rows, a few positions replaced by conditions.
nn::InputBatch sample_batch(const ArchitectureConfig &a, Rng &rng, std::size_t batch = 2) {
    nn::InputBatch in;
    in.batch = batch;
    in.length = 12;
    for (std::size_t r = 0; r < in.rows(); ++r) {
        in.tokens.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(a.vocab_in))));
    }
    if (a.cond_dim > 0) {
        in.use_condition.assign(in.rows(), 0);
        in.conditions.assign(in.rows() * static_cast<std::size_t>(a.cond_dim), 0.0);
        for (std::size_t r = 0; r < in.rows(); ++r) {
            if (rng.uniform01() < 0.5) {
                in.use_condition[r] = 1;
                double z = 0.0;
                for (int k = 0; k < a.cond_dim; ++k) {
                    const double e = std::exp(rng.normal());
                    in.conditions[r * static_cast<std::size_t>(a.cond_dim) + static_cast<std::size_t>(k)] = e;
                    z += e;
                }
                for (int k = 0; k < a.cond_dim; ++k) {
                    in.conditions[r * static_cast<std::size_t>(a.cond_dim) + static_cast<std::size_t>(k)] /= z;
                }
            }
        }
    }
    return in;
}

nn::TargetBatch sample_targets(std::size_t rows, Rng &rng, bool weighted) {
    nn::TargetBatch t;
    for (std::size_t r = 0; r < rows; ++r) {
        t.targets.push_back(rng.uniform01() < 0.7 ? static_cast<int>(rng.below(6)) : -1);
        if (weighted) {
            t.weights.push_back(0.5 + rng.uniform01());
        }
    }
    t.targets[0] = 2;
    return t;
}

void randomize(Transformer &net, Rng &rng, double scale) {
    for (auto &t : net.params()) {
        for (auto &v : t.data) {
            v += scale * rng.normal();
        }
    }
}

bool same_bits(const std::vector<double> &a, const std::vector<double> &b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_SUITE("nn") {

TEST_CASE("gradients match central differences") {
    for (const bool causal : {false, true}) {
        for (const int cond : {0, 6}) {
            CAPTURE(causal);
            CAPTURE(cond);
            const auto arch = small_arch(causal, causal ? 0 : cond);
            Transformer net(arch);
            net.init(3);
            Rng rng(10 + (causal ? 1 : 0) + cond);
            randomize(net, rng, 0.1);
            const auto in = sample_batch(arch, rng);
            const auto tg = sample_targets(in.rows(), rng, cond > 0);
            nn::ParamSet grads;
            net.loss_and_grad(in, tg, grads);
            nn::GradCheckOptions opt;
            opt.max_entries = 12;
            const auto report = nn::grad_check(net.params(), grads, [&] { return net.loss(in, tg); }, opt);
            for (const auto &t : report.tensors) {
                CAPTURE(t.name);
                CHECK(t.max_rel_error < 1e-5);
            }
            if (arch.cond_dim > 0) {
                REQUIRE(report.find(Transformer::kCondProj) != nullptr);
                CHECK(report.find(Transformer::kCondProj)->max_abs_grad > 0.0);
            }
        }
    }
}

TEST_CASE("the checker flags a corrupted gradient") {
    const auto arch = small_arch(false, 6);
    Transformer net(arch);
    net.init(4);
    Rng rng(5);
    randomize(net, rng, 0.1);
    const auto in = sample_batch(arch, rng);
    const auto tg = sample_targets(in.rows(), rng, false);
    nn::ParamSet grads;
    net.loss_and_grad(in, tg, grads);
    for (auto &v : grads.at(Transformer::kCondProj).data) {
        v = -v;
    }
    const auto report = nn::grad_check(net.params(), grads, [&] { return net.loss(in, tg); });
    CHECK_FALSE(report.passed());
    CHECK_FALSE(report.find(Transformer::kCondProj)->passed);
    CHECK(report.find("tok_emb")->passed);
}

TEST_CASE("uniform prediction from a zero head") {
    const auto arch = small_arch(false, 0);
    Transformer net(arch);
    net.init(1);
    Rng rng(2);
    const auto in = sample_batch(arch, rng);
    const auto tg = sample_targets(in.rows(), rng, false);
    CHECK(net.loss(in, tg) == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("initialization") {
    Transformer a(small_arch(false, 6));
    Transformer b(small_arch(false, 6));
    a.init(9);
    b.init(9);
    CHECK(a.params() == b.params());
    b.init(10);
    CHECK_FALSE(a.params() == b.params());
    CHECK(a.params().at("layer0.ln1.gamma").data[0] == 1.0);
    CHECK(a.params().at(Transformer::kHeadWeight).data[0] == 0.0);
    // Adding the projection leaves every shared tensor unchanged.
    Transformer c(small_arch(false, 0));
    c.init(9);
    for (const auto &t : c.params()) {
        CHECK(t.data == a.params().at(t.name).data);
    }
}

TEST_CASE("rows do not depend on their batch neighbours") {
    const auto arch = small_arch(false, 6);
    Transformer net(arch);
    net.init(6);
    Rng rng(7);
    randomize(net, rng, 0.1);
    const auto in = sample_batch(arch, rng, 5);
    const auto full = net.forward(in);
    for (std::size_t b = 0; b < 5; ++b) {
        nn::InputBatch one;
        one.batch = 1;
        one.length = 12;
        one.tokens.assign(in.tokens.begin() + static_cast<std::ptrdiff_t>(b * 12),
                          in.tokens.begin() + static_cast<std::ptrdiff_t>((b + 1) * 12));
        one.use_condition.assign(in.use_condition.begin() + static_cast<std::ptrdiff_t>(b * 12),
                                 in.use_condition.begin() + static_cast<std::ptrdiff_t>((b + 1) * 12));
        one.conditions.assign(in.conditions.begin() + static_cast<std::ptrdiff_t>(b * 72),
                              in.conditions.begin() + static_cast<std::ptrdiff_t>((b + 1) * 72));
        const auto single = net.forward(one);
        CHECK(same_bits(single.logits, std::vector<double>(full.logits.begin() + static_cast<std::ptrdiff_t>(b * 72),
                                                          full.logits.begin() +
                                                              static_cast<std::ptrdiff_t>((b + 1) * 72))));
    }
}

TEST_CASE("causal attention ignores the future") {
    const auto arch = small_arch(true, 0);
    Transformer net(arch);
    net.init(8);
    Rng rng(9);
    randomize(net, rng, 0.1);
    auto in = sample_batch(arch, rng, 1);
    const auto before = net.forward(in);
    in.tokens[7] = (in.tokens[7] + 1) % 7;
    const auto after = net.forward(in);
    for (std::size_t i = 0; i < 12; ++i) {
        const bool same =
            std::memcmp(before.logits.data() + i * 6, after.logits.data() + i * 6, 6 * sizeof(double)) == 0;
        CHECK(same == (i < 7));
    }
}

TEST_CASE("adam") {
    nn::ParamSet p;
    p.add("w", {1});
    p.at("w").data[0] = 1.0;
    nn::ParamSet g = p.zeros_like();
    g.at("w").data[0] = 2.0; // d/dw w^2 at 1
    nn::AdamState st;
    nn::adam_step(p, g, st, {0.1});
    CHECK(p.at("w").data[0] == doctest::Approx(0.9).epsilon(1e-6));

    nn::ParamSet q = p;
    nn::ParamSet zero = p.zeros_like();
    nn::AdamState fresh;
    nn::adam_step(q, zero, fresh, {0.1});
    CHECK(q == p);

    nn::ParamSet r = p;
    nn::AdamState frozen_state;
    nn::adam_step(r, g, frozen_state, {0.1}, {"w"});
    CHECK(r == p);
}

TEST_CASE("checkpoint round trip and corruption") {
    Transformer net(small_arch(false, 6));
    net.init(12);
    nn::Checkpoint ck{{{"kind", "test"}, {"seed", 12}}, net.params()};
    const std::string bytes = nn::encode_checkpoint(ck);
    CHECK(bytes.compare(0, 8, "GDLLCKPT") == 0);
    const auto back = nn::decode_checkpoint(bytes);
    CHECK(back.params == ck.params);
    CHECK(back.meta == ck.meta);

    const std::string path = "/tmp/gdl_unit_nn.ckpt";
    nn::save_checkpoint(path, ck);
    CHECK(nn::load_checkpoint(path).params == ck.params);
    std::remove(path.c_str());

    CHECK_THROWS_AS(nn::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), ConfigError);
    CHECK_THROWS_AS(nn::decode_checkpoint("GDLLCKPX" + bytes.substr(8)), ConfigError);
    std::string bad_version = bytes;
    bad_version[8] = 9;
    CHECK_THROWS_AS(nn::decode_checkpoint(bad_version), ConfigError);
    CHECK_THROWS_AS(nn::load_checkpoint("/nonexistent/x.ckpt"), ConfigError);

    // An absurd dimension must be rejected, not allocated.
    std::string huge = nn::encode_checkpoint({{{"kind", "test"}}, {}});
    auto put32 = [&](std::uint32_t v) { huge.append(reinterpret_cast<const char *>(&v), 4); };
    put32(1);
    huge += "w";
    put32(1);
    const std::uint64_t dim = 1ULL << 60;
    huge.append(reinterpret_cast<const char *>(&dim), 8);
    CHECK_THROWS_AS(nn::decode_checkpoint(huge), ConfigError);
}

TEST_CASE("config validation and json") {
    auto a = small_arch(false, 6);
    CHECK(ArchitectureConfig::from_json(a.to_json()) == a);
    a.heads = 3;
    CHECK_THROWS_AS(a.validate(), ConfigError);
    CHECK_THROWS_AS(Transformer{a}, ConfigError);
}

TEST_CASE("non-finite loss is reported as divergence") {
    const auto arch = small_arch(false, 0);
    Transformer net(arch);
    net.init(1);
    net.params().at(Transformer::kHeadBias).data[0] = std::numeric_limits<double>::infinity();
    Rng rng(1);
    const auto in = sample_batch(arch, rng);
    const auto tg = sample_targets(in.rows(), rng, false);
    nn::ParamSet g;
    CHECK_THROWS_AS(net.loss_and_grad(in, tg, g), DivergenceError);
}

TEST_CASE("batch shape errors") {
    Transformer net(small_arch(false, 0));
    nn::InputBatch in;
    in.batch = 1;
    in.length = 13;
    in.tokens.assign(13, 0);
    CHECK_THROWS_AS(net.forward(in), ContractError);
    in.length = 12;
    in.tokens.assign(12, 9);
    CHECK_THROWS_AS(net.forward(in), ContractError);
}

} // TEST_SUITE
