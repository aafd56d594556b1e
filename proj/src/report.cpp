#include "anaflow/report.hpp"

namespace anaflow {

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Requirement: return "requirement";
        case Stage::OpCheck: return "op_check";
        case Stage::DcSweep: return "dc_sweep";
        case Stage::Function: return "function";
    }
    return "?";
}

void StageReport::add_finding(std::string_view line) {
    if (feedback.size() >= kMaxFeedbackChars) return;
    if (!feedback.empty()) feedback += '\n';
    feedback += line;
    if (feedback.size() > kMaxFeedbackChars) feedback.resize(kMaxFeedbackChars);
}

const StageReport* VerificationOutcome::first_failure() const {
    for (const auto& s : stages) {
        if (!s.passed) return &s;
    }
    return nullptr;
}

}  // namespace anaflow
