#include "gdl/ablation.hpp"
#include "gdl/errors.hpp"
#include "gdl/io.hpp"

#include <doctest.h>

using namespace gdl;

namespace {

ablation::RunSettings tiny_settings() {
    ablation::RunSettings s;
    s.train.arch.d_model = 16;
    s.train.arch.layers = 1;
    s.train.arch.heads = 2;
    s.train.arch.mlp_ratio = 2;
    s.train.epochs = 2;
    s.nfes = {1, 4};
    s.samples = 20;
    s.seed = 3;
    return s;
}

} // namespace

TEST_SUITE("ablation") {

TEST_CASE("arms differ only in their ablation fields") {
    const auto settings = tiny_settings();
    const auto g = ablation::arm_train_config(settings, {"gumbel", NoiseMode::gumbel});
    const auto n = ablation::arm_train_config(settings, {"gaussian", NoiseMode::gaussian, mdlm::ExtractionMode::parallel, true});
    const auto b = ablation::arm_train_config(settings, {"baseline", NoiseMode::none});
    const auto s = ablation::arm_train_config(settings, {"seq", NoiseMode::gumbel, mdlm::ExtractionMode::sequential});
    for (const auto *c : {&g, &n, &b, &s}) {
        CHECK(c->seed == settings.seed);
        CHECK(c->epochs == settings.train.epochs);
        CHECK(c->batch_size == settings.train.batch_size);
        CHECK(c->adam.lr == settings.train.adam.lr);
        CHECK(c->schedule == settings.train.schedule);
        CHECK(c->condition.tau == settings.train.condition.tau);
        CHECK(c->arch.d_model == 16);
    }
    CHECK(n.condition.mode == NoiseMode::gaussian);
    CHECK(n.condition.independent_gaussian);
    CHECK(b.arch.cond_dim == 0);
    CHECK(g.arch.cond_dim == 6);
    CHECK(s.extraction == mdlm::ExtractionMode::sequential);
}

TEST_CASE("runs are deterministic and the report is well formed") {
    const auto setup = ablation::make_maze_setup(maze::MazeSpec{}, 0, 128);
    CHECK(setup.corpus.size() == 128);
    const std::vector<ablation::AblationConfig> arms{{"gumbel", NoiseMode::gumbel}, {"baseline", NoiseMode::none}};
    const auto a = ablation::run_ablation(arms, setup, tiny_settings());
    auto par = tiny_settings();
    par.parallel_arms = true;
    const auto b = ablation::run_ablation(arms, setup, par);
    REQUIRE(a.size() == 4);
    const std::string csv = ablation::report_csv(a);
    CHECK(csv == ablation::report_csv(b));
    const auto rows = io::parse_csv(csv);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"arm", "noise_mode", "extraction_mode", "nfe", "success_rate", "seed"});
    CHECK(rows[1][0] == "gumbel");
    CHECK(rows[3][1] == "none");
    CHECK(rows[4][3] == "4");
    for (const auto &r : a) {
        CHECK(r.success_rate >= 0.0);
        CHECK(r.success_rate <= 1.0);
    }
    CHECK_THROWS_AS(ablation::run_ablation({}, setup, tiny_settings()), ConfigError);
}

} // TEST_SUITE
