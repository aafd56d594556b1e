#pragma once

// Design loop: prompt construction, reply extraction, verification and
// feedback-driven regeneration.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anaflow/checks.hpp"
#include "anaflow/generator.hpp"
#include "anaflow/library.hpp"
#include "anaflow/tasks.hpp"

namespace anaflow {

inline constexpr int kBasicGenerationCap = 3;
inline constexpr int kCompositeGenerationCap = 2;
inline constexpr std::string_view kNoCodeBlock = "no code block found";

struct Attempt {
    int index = 1;
    Conversation prompt_messages;
    std::string raw_reply;
    /// The netlist that was verified: the extracted text, with archived tool
    /// definitions spliced in for composite tasks.
    std::optional<std::string> extracted_netlist;
    std::optional<VerificationOutcome> outcome;
    std::string extraction_error;
};

struct TrialRecord {
    int task_id = 0;
    std::vector<Attempt> attempts;
    bool success = false;
    long tokens_estimate = 0;
    std::string transport_error;  // non-empty when the trial was aborted
    std::vector<int> selected_tools;
    std::vector<int> dropped_tools;
    bool retrieval_failed = false;

    /// Compares the serialized records.
    bool operator==(const TrialRecord& other) const;
};

Conversation build_basic_prompt(const TaskSpec& task);
Conversation build_composite_prompt(const TaskSpec& task, const std::vector<ToolEntry>& tools);
/// prior.prompt_messages + the raw reply + a user message carrying the
/// failing stage and its feedback.
Conversation build_feedback_prompt(const Attempt& prior, const StageReport& report);

/// Last fenced block, else the longest run of card-like lines, normalized.
/// Throws ParseError(kNoCodeBlock) when there is neither.
std::string extract_netlist(std::string_view reply);

/// Mechanical clean-up: PySpice unit suffixes, circuit.gnd, analysis and
/// control directives removed.
std::string normalize_netlist(std::string_view text);

/// Removes ".include pN_lib.sp" lines and prepends the definitions of the
/// given tools and of any archived tool such a line referenced, unless the
/// text already defines them.
std::string splice_tools(std::string_view netlist, const ToolLibrary& lib, const std::vector<ToolEntry>& tools);

struct DesignOptions {
    CheckOptions check;
    /// Skip archiving successful basic designs.
    bool freeze_library = false;
};

/// Runs one trial against a library snapshot; never mutates it.
TrialRecord run_design_trial(const TaskSpec& task, Generator& generator, const ToolLibrary& lib,
                             const DesignOptions& options = {});

/// Runs a trial and archives a successful basic design into `lib`.
TrialRecord run_design_loop(const TaskSpec& task, Generator& generator, ToolLibrary& lib,
                            const DesignOptions& options = {});

/// Archives the last attempt of a successful basic trial. Returns whether
/// the library changed.
bool archive_trial(ToolLibrary& lib, const TaskSpec& task, const TrialRecord& record);

std::string to_json_line(const TrialRecord& record);
/// One-line JSON object for a verification outcome, the shape used inside
/// trial records.
std::string outcome_to_json(const VerificationOutcome& outcome);
/// Throws ParseError on malformed input.
TrialRecord trial_from_json_line(std::string_view line);

}  // namespace anaflow
