#pragma once

// Command-line run configuration. Resolution order: built-in defaults, then
// the --config JSON file (partial objects allowed), then flags.

#include "gdl/ablation.hpp"
#include "gdl/maze.hpp"
#include "gdl/student_mdlm.hpp"
#include "gdl/student_mtp.hpp"
#include "gdl/teacher.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace gdl::cli {

enum class TeacherKind { tabular, neural };

struct TeacherSettings {
    TeacherKind kind = TeacherKind::tabular;
    double smoothing = 0.0;
    teacher::NeuralTrainConfig neural;
};

struct EvalSettings {
    std::vector<std::size_t> nfe{1, 2, 4, 8, 16};
    std::size_t samples = 100;
    std::size_t block_size = 0;
    bool greedy = false;
};

struct MtpSettings {
    mtp::HeadsTrainConfig heads;
    mtp::AcceptanceConfig accept;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "gdl-out";
    maze::MazeSpec maze;
    std::size_t corpus_cap = maze::kDefaultCorpusCap;
    bool offline = false; // train from the noise dump written by gen-data
    TeacherSettings teacher;
    mdlm::TrainConfig train = ablation::default_train_config();
    double tau_infer = 0.85;
    mdlm::Freshness infer_freshness = mdlm::Freshness::per_sequence;
    EvalSettings eval;
    MtpSettings mtp;
    std::vector<ablation::AblationConfig> arms;
    bool parallel_arms = false;

    RunConfig();

    // Full resolved configuration; its hash identifies output artifacts.
    nlohmann::json to_json() const;

    // Applies a partial JSON object on top of this configuration. Unknown keys
    // and malformed values throw ConfigError.
    void merge(const nlohmann::json &patch);

    void validate() const;

    mdlm::ConditionSource inference_condition(NoiseMode mode) const;
};

RunConfig load_run_config(const std::string &path);

std::vector<std::size_t> parse_size_list(const std::string &text);

} // namespace gdl::cli
