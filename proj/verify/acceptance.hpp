#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace relhoi::verify {

struct CheckResult {
    std::string id;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

struct SuiteOptions {
    // Committed prediction file for the seed-42 fixture; compared byte for byte when set.
    std::optional<std::filesystem::path> golden_predictions;
    // Scratch space for generated fixtures; a fresh temp dir when empty.
    std::filesystem::path work_dir;
};

CheckResult check_attention_algebra();
CheckResult check_enumeration_oracles();
CheckResult check_fusion_oracle();
CheckResult check_gradient();
CheckResult check_scoring_arithmetic();
CheckResult check_ap_oracle();
CheckResult check_hyperparameter_defaults();
// `suite_start` lets this check enforce the overall time budget.
CheckResult check_end_to_end(const SuiteOptions& options, std::chrono::steady_clock::time_point suite_start);

// Runs every check in a fixed order, end-to-end last.
std::vector<CheckResult> run_acceptance(const SuiteOptions& options);

// "PASS  id  (1.23 s)  detail"
std::string format_result(const CheckResult& result);

inline constexpr double kAttentionBudgetSeconds = 10;
inline constexpr double kGradientBudgetSeconds = 5;
inline constexpr double kSelftestBudgetSeconds = 60;

}  // namespace relhoi::verify
