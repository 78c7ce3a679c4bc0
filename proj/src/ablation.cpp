#include "gdl/ablation.hpp"

#include "gdl/errors.hpp"
#include "gdl/io.hpp"
#include "gdl/parallel.hpp"

namespace gdl::ablation {

MazeSetup make_maze_setup(const maze::MazeSpec &spec, std::uint64_t seed, std::size_t cap) {
    const auto all = maze::enumerate_paths(spec, 0, seed);
    auto corpus = maze::enumerate_paths(spec, cap, seed);
    auto exact = teacher::TabularTeacher::from_corpus(all, 0.0, maze::kVocabSize);
    return {spec, std::move(corpus), std::move(exact)};
}

mdlm::TrainConfig default_train_config() {
    mdlm::TrainConfig cfg;
    cfg.epochs = 150;
    cfg.batch_size = 32;
    cfg.adam.lr = 4e-3;
    cfg.schedule = mdlm::LrSchedule::cosine;
    return cfg;
}

mdlm::TrainConfig arm_train_config(const RunSettings &settings, const AblationConfig &arm) {
    mdlm::TrainConfig cfg = settings.train;
    cfg.seed = settings.seed;
    cfg.condition.mode = arm.noise_mode;
    cfg.condition.independent_gaussian = arm.independent_gaussian;
    cfg.extraction = arm.extraction_mode;
    cfg.arch.cond_dim = arm.noise_mode == NoiseMode::none ? 0 : cfg.arch.vocab_out;
    return cfg;
}

std::vector<ReportRow> run_ablation(const std::vector<AblationConfig> &configs, const MazeSetup &setup,
                                    const RunSettings &settings) {
    if (configs.empty()) {
        throw ConfigError("ablation: no arms configured");
    }
    std::vector<std::vector<ReportRow>> per_arm(configs.size());
    const auto run_arm = [&](std::size_t a) {
        const auto &arm = configs[a];
        const auto cfg = arm_train_config(settings, arm);
        const auto trained = mdlm::train(setup.corpus, &setup.teacher, cfg);
        mdlm::ConditionSource infer = cfg.condition;
        infer.tau = settings.tau_infer;
        const auto eval = mdlm::evaluate(trained.student, setup.spec, nullptr, settings.nfes, settings.samples, infer,
                                         settings.seed);
        for (const auto &e : eval) {
            per_arm[a].push_back({arm.arm, arm.noise_mode, arm.extraction_mode, e.nfe, e.success_rate, settings.seed});
        }
    };
    if (settings.parallel_arms) {
        parallel_for(configs.size(), run_arm);
    } else {
        for (std::size_t a = 0; a < configs.size(); ++a) {
            run_arm(a);
        }
    }
    std::vector<ReportRow> rows;
    for (auto &r : per_arm) {
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

std::string report_csv(const std::vector<ReportRow> &rows) {
    io::CsvWriter csv({"arm", "noise_mode", "extraction_mode", "nfe", "success_rate", "seed"});
    for (const auto &r : rows) {
        csv.row({r.arm, to_string(r.noise_mode), mdlm::to_string(r.extraction_mode), std::to_string(r.nfe),
                 io::format_double(r.success_rate), std::to_string(r.seed)});
    }
    return csv.str();
}

} // namespace gdl::ablation
