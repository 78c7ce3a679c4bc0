#include "run_config.hpp"

#include "gdl/errors.hpp"
#include "gdl/io.hpp"

#include <sstream>

namespace gdl::cli {

using nlohmann::json;

namespace {

const char *to_string(TeacherKind k) { return k == TeacherKind::tabular ? "tabular" : "neural"; }

TeacherKind parse_teacher_kind(const std::string &s) {
    if (s == "tabular") {
        return TeacherKind::tabular;
    }
    if (s == "neural") {
        return TeacherKind::neural;
    }
    throw ConfigError("unknown teacher kind '" + s + "' (expected tabular or neural)");
}

const char *to_string(extraction::MaskKind k) { return k == extraction::MaskKind::uniform ? "uniform" : "block"; }

extraction::MaskKind parse_mask_kind(const std::string &s) {
    if (s == "uniform") {
        return extraction::MaskKind::uniform;
    }
    if (s == "block") {
        return extraction::MaskKind::block;
    }
    throw ConfigError("unknown mask kind '" + s + "' (expected uniform or block)");
}

json arch_json(const nn::ArchitectureConfig &a) {
    return {{"d_model", a.d_model}, {"layers", a.layers}, {"heads", a.heads}, {"mlp_ratio", a.mlp_ratio}};
}

void read_arch(const json &j, nn::ArchitectureConfig &a) {
    a.d_model = j.at("d_model").get<int>();
    a.layers = j.at("layers").get<int>();
    a.heads = j.at("heads").get<int>();
    a.mlp_ratio = j.at("mlp_ratio").get<int>();
}

json arm_json(const ablation::AblationConfig &a) {
    return {{"arm", a.arm},
            {"mode", gdl::to_string(a.noise_mode)},
            {"extraction", mdlm::to_string(a.extraction_mode)},
            {"independent_gaussian", a.independent_gaussian}};
}

// Keys present in `patch` must exist in `base`, recursively through objects.
void check_keys(const json &base, const json &patch, const std::string &where) {
    if (!patch.is_object()) {
        return;
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string path = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) {
            throw ConfigError("unknown config key '" + path + "'");
        }
        if (base[it.key()].is_object() && it.key() != "maze") {
            check_keys(base[it.key()], it.value(), path);
        }
    }
}

} // namespace

RunConfig::RunConfig() {
    arms = {{"gumbel", NoiseMode::gumbel},
            {"gaussian", NoiseMode::gaussian},
            {"uniform", NoiseMode::uniform},
            {"baseline", NoiseMode::none},
            {"sequential", NoiseMode::gumbel, mdlm::ExtractionMode::sequential}};
    mtp.accept.trials = 500;
}

json RunConfig::to_json() const {
    json arm_list = json::array();
    for (const auto &a : arms) {
        arm_list.push_back(arm_json(a));
    }
    return {
        {"seed", seed},
        {"out", out},
        {"maze", json::parse(maze.to_json())},
        {"maze_path", ""},
        {"corpus_cap", corpus_cap},
        {"offline", offline},
        {"teacher",
         {{"kind", to_string(teacher.kind)},
          {"smoothing", teacher.smoothing},
          {"neural",
           {{"arch", arch_json(teacher.neural.arch)},
            {"epochs", teacher.neural.epochs},
            {"batch_size", teacher.neural.batch_size},
            {"lr", teacher.neural.adam.lr}}}}},
        {"student", arch_json(train.arch)},
        {"train",
         {{"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"lr", train.adam.lr},
          {"schedule", mdlm::to_string(train.schedule)},
          {"loss_weight", mdlm::to_string(train.weight)},
          {"mask", {{"kind", to_string(train.mask.kind)}, {"block_size", train.mask.block_size}}},
          {"tau", train.condition.tau},
          {"checkpoint_every", train.checkpoint_every}}},
        {"condition",
         {{"mode", gdl::to_string(train.condition.mode)},
          {"tau_infer", tau_infer},
          {"freshness", mdlm::to_string(infer_freshness)},
          {"independent_gaussian", train.condition.independent_gaussian}}},
        {"extraction", mdlm::to_string(train.extraction)},
        {"eval",
         {{"nfe", eval.nfe}, {"samples", eval.samples}, {"block_size", eval.block_size}, {"greedy", eval.greedy}}},
        {"mtp",
         {{"heads", mtp.heads.heads.heads},
          {"routing", mtp::to_string(mtp.heads.heads.routing)},
          {"epochs", mtp.heads.epochs},
          {"batch_size", mtp.heads.batch_size},
          {"lr", mtp.heads.adam.lr},
          {"trials", mtp.accept.trials},
          {"tau", mtp.accept.tau},
          {"sample_heads", mtp.accept.sample_heads},
          {"epsilon", mtp.accept.accept.epsilon},
          {"delta", mtp.accept.accept.delta}}},
        {"ablation", {{"arms", arm_list}, {"parallel_arms", parallel_arms}}},
    };
}

void RunConfig::merge(const json &patch) {
    if (!patch.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    json j = to_json();
    check_keys(j, patch, "");
    j.merge_patch(patch);
    try {
        seed = j.at("seed").get<std::uint64_t>();
        out = j.at("out").get<std::string>();
        if (const auto path = j.at("maze_path").get<std::string>(); !path.empty()) {
            maze = maze::MazeSpec::load(path);
        } else {
            maze = maze::MazeSpec::from_json(j.at("maze").dump());
        }
        corpus_cap = j.at("corpus_cap").get<std::size_t>();
        offline = j.at("offline").get<bool>();

        const json &t = j.at("teacher");
        teacher.kind = parse_teacher_kind(t.at("kind").get<std::string>());
        teacher.smoothing = t.at("smoothing").get<double>();
        read_arch(t.at("neural").at("arch"), teacher.neural.arch);
        teacher.neural.epochs = t.at("neural").at("epochs").get<int>();
        teacher.neural.batch_size = t.at("neural").at("batch_size").get<int>();
        teacher.neural.adam.lr = t.at("neural").at("lr").get<double>();

        read_arch(j.at("student"), train.arch);
        const json &tr = j.at("train");
        train.epochs = tr.at("epochs").get<int>();
        train.batch_size = tr.at("batch_size").get<int>();
        train.adam.lr = tr.at("lr").get<double>();
        train.schedule = mdlm::parse_lr_schedule(tr.at("schedule").get<std::string>());
        train.weight = mdlm::parse_loss_weight(tr.at("loss_weight").get<std::string>());
        train.mask.kind = parse_mask_kind(tr.at("mask").at("kind").get<std::string>());
        train.mask.block_size = tr.at("mask").at("block_size").get<std::size_t>();
        train.condition.tau = tr.at("tau").get<double>();
        train.checkpoint_every = tr.at("checkpoint_every").get<int>();

        const json &c = j.at("condition");
        train.condition.mode = parse_noise_mode(c.at("mode").get<std::string>());
        tau_infer = c.at("tau_infer").get<double>();
        infer_freshness = mdlm::parse_freshness(c.at("freshness").get<std::string>());
        train.condition.independent_gaussian = c.at("independent_gaussian").get<bool>();
        train.extraction = mdlm::parse_extraction_mode(j.at("extraction").get<std::string>());
        train.arch.cond_dim = train.condition.mode == NoiseMode::none ? 0 : train.arch.vocab_out;

        const json &e = j.at("eval");
        eval.nfe = e.at("nfe").get<std::vector<std::size_t>>();
        eval.samples = e.at("samples").get<std::size_t>();
        eval.block_size = e.at("block_size").get<std::size_t>();
        eval.greedy = e.at("greedy").get<bool>();

        const json &m = j.at("mtp");
        mtp.heads.heads.heads = m.at("heads").get<int>();
        mtp.heads.heads.routing = mtp::parse_routing(m.at("routing").get<std::string>());
        mtp.heads.epochs = m.at("epochs").get<int>();
        mtp.heads.batch_size = m.at("batch_size").get<int>();
        mtp.heads.adam.lr = m.at("lr").get<double>();
        mtp.accept.trials = m.at("trials").get<int>();
        mtp.accept.tau = m.at("tau").get<double>();
        mtp.accept.sample_heads = m.at("sample_heads").get<bool>();
        mtp.accept.accept.epsilon = m.at("epsilon").get<double>();
        mtp.accept.accept.delta = m.at("delta").get<double>();

        parallel_arms = j.at("ablation").at("parallel_arms").get<bool>();
        arms.clear();
        for (const json &a : j.at("ablation").at("arms")) {
            ablation::AblationConfig arm;
            arm.arm = a.at("arm").get<std::string>();
            arm.noise_mode = parse_noise_mode(a.value("mode", std::string("gumbel")));
            arm.extraction_mode = mdlm::parse_extraction_mode(a.value("extraction", std::string("parallel")));
            arm.independent_gaussian = a.value("independent_gaussian", false);
            arms.push_back(arm);
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate();
}

void RunConfig::validate() const {
    maze.validate();
    train.arch.validate();
    if (train.epochs < 1 || train.batch_size < 1) {
        throw ConfigError("train.epochs and train.batch_size must be positive");
    }
    if (!(train.adam.lr > 0.0)) {
        throw ConfigError("train.lr must be positive");
    }
    if (!(tau_infer > 0.0) || !(train.condition.tau > 0.0) || !(mtp.accept.tau > 0.0)) {
        throw ConfigError("temperatures must be positive");
    }
    if (eval.nfe.empty() || eval.samples == 0) {
        throw ConfigError("eval.nfe and eval.samples must be nonempty");
    }
    for (const auto n : eval.nfe) {
        if (n == 0) {
            throw ConfigError("NFE values must be positive");
        }
    }
    if (teacher.smoothing < 0.0 || teacher.smoothing >= 1.0) {
        throw ConfigError("teacher.smoothing must lie in [0, 1)");
    }
    if (mtp.heads.heads.heads < 2 || mtp.accept.trials < 1) {
        throw ConfigError("mtp.heads must be at least 2 and mtp.trials positive");
    }
    if (arms.empty()) {
        throw ConfigError("ablation.arms must not be empty");
    }
}

mdlm::ConditionSource RunConfig::inference_condition(NoiseMode mode) const {
    mdlm::ConditionSource c = train.condition;
    c.mode = mode;
    c.tau = tau_infer;
    c.freshness = infer_freshness;
    return c;
}

RunConfig load_run_config(const std::string &path) {
    RunConfig c;
    if (!path.empty()) {
        c.merge(io::read_json(path));
    }
    return c;
}

std::vector<std::size_t> parse_size_list(const std::string &text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long long v = -1;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != item.size() || v <= 0) {
            throw ConfigError("expected a comma-separated list of positive integers, got '" + text + "'");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) {
        throw ConfigError("empty list");
    }
    return out;
}

} // namespace gdl::cli
