#pragma once

// Experiment arms on the maze task: noise-source substitution and
// sequential-vs-parallel extraction.

#include "gdl/maze.hpp"
#include "gdl/noise.hpp"
#include "gdl/student_mdlm.hpp"
#include "gdl/teacher.hpp"

#include <string>
#include <vector>

namespace gdl::ablation {

struct MazeSetup {
    maze::MazeSpec spec;
    std::vector<TokenSequence> corpus;   // capped training corpus
    teacher::TabularTeacher teacher;     // exact, from the full enumeration with eps = 0
};

MazeSetup make_maze_setup(const maze::MazeSpec &spec, std::uint64_t seed, std::size_t cap = maze::kDefaultCorpusCap);

struct AblationConfig {
    std::string arm;
    NoiseMode noise_mode = NoiseMode::gumbel;
    mdlm::ExtractionMode extraction_mode = mdlm::ExtractionMode::parallel;
    bool independent_gaussian = false;
};

// Maze training recipe shared by every arm.
mdlm::TrainConfig default_train_config();

struct RunSettings {
    mdlm::TrainConfig train = default_train_config(); // condition mode/extraction are overridden per arm
    double tau_infer = 0.85;
    std::vector<std::size_t> nfes{1, 2, 4, 8, 16};
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    // Train arms concurrently; the report is identical either way.
    bool parallel_arms = false;
};

struct ReportRow {
    std::string arm;
    NoiseMode noise_mode;
    mdlm::ExtractionMode extraction_mode;
    std::size_t nfe;
    double success_rate;
    std::uint64_t seed;
};

// The arm's training config: `base` with only the ablation fields changed.
mdlm::TrainConfig arm_train_config(const RunSettings &settings, const AblationConfig &arm);

// Trains one student per arm (identical seeds, architecture and data order)
// and evaluates success rate at every NFE.
std::vector<ReportRow> run_ablation(const std::vector<AblationConfig> &configs, const MazeSetup &setup,
                                    const RunSettings &settings);

// arm,noise_mode,extraction_mode,nfe,success_rate,seed
std::string report_csv(const std::vector<ReportRow> &rows);

} // namespace gdl::ablation
