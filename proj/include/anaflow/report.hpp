#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace anaflow {

enum class Stage { Requirement, OpCheck, DcSweep, Function };

std::string_view to_string(Stage stage);

/// Feedback text is capped so it can be pasted into a prompt unchanged.
inline constexpr std::size_t kMaxFeedbackChars = 2000;

struct StageReport {
    Stage stage = Stage::Requirement;
    bool passed = false;
    std::string feedback;  // one finding per line
    std::map<std::string, double> measurements;

    /// Appends a finding line, truncating at kMaxFeedbackChars.
    void add_finding(std::string_view line);
};

struct VerificationOutcome {
    int task_id = 0;
    std::vector<StageReport> stages;
    bool final_pass = false;
    std::map<std::string, double> bias_substitutions;

    /// The first failing stage, or nullptr when every executed stage passed.
    const StageReport* first_failure() const;
};

}  // namespace anaflow
