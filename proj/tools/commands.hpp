#pragma once

#include "run_config.hpp"

#include <optional>
#include <string>

namespace gdl::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDivergence = 3;

struct VerifyOptions {
    long trials = 100000;
    std::vector<std::size_t> v_values{2, 3, 4, 5, 6, 7, 8};
    double significance = 0.001;
    std::string inject_bug; // "", "alt-formula" or "sign-flip"
};

struct ModelOptions {
    std::string checkpoint;         // student checkpoint; default <out>/student.ckpt
    std::string teacher_checkpoint; // neural backbone for mtp; trained when empty
};

int cmd_verify_posterior(const RunConfig &config, const VerifyOptions &options);
int cmd_gen_data(const RunConfig &config);
int cmd_train(const RunConfig &config);
int cmd_sample(const RunConfig &config, const ModelOptions &options);
int cmd_eval(const RunConfig &config, const ModelOptions &options);
int cmd_mtp(const RunConfig &config, const ModelOptions &options);
int cmd_ablate(const RunConfig &config);

} // namespace gdl::cli
