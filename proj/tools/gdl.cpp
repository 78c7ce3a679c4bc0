#include "commands.hpp"

#include "gdl/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <optional>

using namespace gdl;
using namespace gdl::cli;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> nfe;
    std::optional<std::string> mode;
    std::optional<std::string> extraction;
};

void add_common(CLI::App *sub, CommonFlags &f) {
    sub->add_option("--config", f.config, "JSON config file (partial objects allowed)");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--nfe", f.nfe, "comma-separated NFE list, e.g. 1,2,4");
    sub->add_option("--mode", f.mode, "conditioning noise")
        ->check(CLI::IsMember({"gumbel", "gaussian", "uniform", "none"}));
    sub->add_option("--extraction", f.extraction, "noise extraction")->check(CLI::IsMember({"parallel", "sequential"}));
}

// defaults < file < flags
RunConfig resolve(const CommonFlags &f, bool filter_arms) {
    RunConfig c = load_run_config(f.config);
    nlohmann::json patch = nlohmann::json::object();
    if (f.seed) {
        patch["seed"] = *f.seed;
    }
    if (f.out) {
        patch["out"] = *f.out;
    }
    if (f.nfe) {
        patch["eval"]["nfe"] = parse_size_list(*f.nfe);
    }
    if (!filter_arms) {
        if (f.mode) {
            patch["condition"]["mode"] = *f.mode;
        }
        if (f.extraction) {
            patch["extraction"] = *f.extraction;
        }
    }
    c.merge(patch);
    if (filter_arms && (f.mode || f.extraction)) {
        std::erase_if(c.arms, [&](const ablation::AblationConfig &a) {
            return (f.mode && to_string(a.noise_mode) != *f.mode) ||
                   (f.extraction && mdlm::to_string(a.extraction_mode) != *f.extraction);
        });
        if (c.arms.empty()) {
            throw ConfigError("no ablation arm matches --mode/--extraction");
        }
    }
    return c;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Gumbel-conditioned distillation toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    VerifyOptions verify;
    ModelOptions model;
    std::string v_list;

    auto *vp = app.add_subcommand("verify-posterior", "check the posterior Gumbel sampler");
    add_common(vp, common);
    vp->add_option("--trials", verify.trials, "trials per (property, V)");
    vp->add_option("--v", v_list, "comma-separated vocabulary sizes (default 2..8)");
    vp->add_option("--significance", verify.significance, "KS rejection level");
    vp->add_option("--inject-bug", verify.inject_bug, "use a deliberately wrong sampler")
        ->check(CLI::IsMember({"alt-formula", "sign-flip"}));

    auto *gd = app.add_subcommand("gen-data", "enumerate the maze corpus (and noise dumps when offline)");
    add_common(gd, common);

    auto *tr = app.add_subcommand("train", "train a student against the configured teacher");
    add_common(tr, common);

    auto *sa = app.add_subcommand("sample", "draw samples from a trained student");
    add_common(sa, common);
    sa->add_option("--checkpoint", model.checkpoint, "student checkpoint (default <out>/student.ckpt)");

    auto *ev = app.add_subcommand("eval", "success rate and teacher NLL per NFE");
    add_common(ev, common);
    ev->add_option("--checkpoint", model.checkpoint, "student checkpoint (default <out>/student.ckpt)");

    auto *mt = app.add_subcommand("mtp", "train multi-token heads and measure acceptance");
    add_common(mt, common);
    mt->add_option("--teacher-checkpoint", model.teacher_checkpoint, "backbone checkpoint (trained when absent)");

    auto *ab = app.add_subcommand("ablate", "train and evaluate every ablation arm");
    add_common(ab, common);
    bool parallel_arms = false;
    ab->add_flag("--parallel-arms", parallel_arms, "train arms concurrently (same report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (vp->parsed()) {
            if (!v_list.empty()) {
                verify.v_values = parse_size_list(v_list);
            }
            return cmd_verify_posterior(resolve(common, false), verify);
        }
        if (gd->parsed()) {
            return cmd_gen_data(resolve(common, false));
        }
        if (tr->parsed()) {
            return cmd_train(resolve(common, false));
        }
        if (sa->parsed()) {
            return cmd_sample(resolve(common, false), model);
        }
        if (ev->parsed()) {
            return cmd_eval(resolve(common, false), model);
        }
        if (mt->parsed()) {
            return cmd_mtp(resolve(common, false), model);
        }
        if (ab->parsed()) {
            RunConfig c = resolve(common, true);
            c.parallel_arms = c.parallel_arms || parallel_arms;
            return cmd_ablate(c);
        }
    } catch (const ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const DivergenceError &e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return kExitDivergence;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPropertyFailure;
    }
    return kExitConfigError;
}
