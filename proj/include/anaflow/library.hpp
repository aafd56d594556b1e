#pragma once

// Tool library: verified basic circuits archived as subcircuits together with
// their measured specifications, rendered for retrieval and reuse.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anaflow/generator.hpp"
#include "anaflow/netlist.hpp"
#include "anaflow/report.hpp"
#include "anaflow/tasks.hpp"

namespace anaflow {

struct ToolEntry {
    int task_id = 0;
    std::string circuit_type;
    std::optional<double> gain_db;
    std::optional<double> common_mode_gain_db;
    int num_inputs = 0;
    int num_outputs = 0;
    std::string phase_relation = "NA";
    std::vector<std::string> ports;  // inputs first, then outputs
    SubcircuitDef subckt;
    std::string call_snippet;  // instance card, e.g. "X1 Vinp Vinn Vout SingleStageOpamp"

    bool same_as(const ToolEntry& other) const;
};

struct ToolLibrary {
    std::map<int, ToolEntry> entries;
    std::string persistence_path;  // empty: in-memory only

    bool same_as(const ToolLibrary& other) const;
};

/// Subcircuit name used for a basic task's tool, e.g. 11 -> SingleStageOpamp.
std::string tool_name(int task_id);

/// Builds the entry without touching any library. Throws ConfigError for a
/// composite task or an outcome that did not pass.
ToolEntry make_tool_entry(const TaskSpec& task, const Circuit& circuit, const VerificationOutcome& outcome);

/// Stores the design when the slot is empty or, for gain-keyed types, when
/// its gain is strictly higher; saves to persistence_path when set. Throws
/// ConfigError for composite tasks or failed outcomes.
ToolLibrary archive_design(const ToolLibrary& lib, const TaskSpec& task, const Circuit& circuit,
                           const VerificationOutcome& outcome);

/// Markdown table in the retrieval-prompt shape, sorted by id.
std::string render_library_table(const ToolLibrary& lib);
std::string render_entry_table(const std::vector<ToolEntry>& entries);

struct ToolSelection {
    std::vector<int> ids;          // archived ids, in reply order
    std::vector<int> dropped_ids;  // ids the reply named that are not archived
    bool retrieval_failed = false; // no parsable list in the reply
    std::string prompt;
    std::string reply;
};

/// Integers of the last bracketed list in the reply; nullopt when none.
std::optional<std::vector<int>> parse_tool_list(std::string_view reply);

/// Sends the retrieval prompt and parses the chosen ids. Transport errors
/// propagate.
ToolSelection select_tools(const ToolLibrary& lib, const TaskSpec& task, Generator& generator);

/// Fenced block with declaration and instance lines for each entry.
std::string render_call_code(const std::vector<ToolEntry>& entries);
/// Input-polarity and operating-point notes, plus the oscillator notes.
std::string render_note_info(const std::vector<ToolEntry>& entries, const TaskSpec& task);
/// Call code followed by the note block. Throws ConfigError for no entries.
std::string render_call_info(const std::vector<ToolEntry>& entries, const TaskSpec& task);

/// "p11_lib.sp"
std::string include_file_name(int task_id);

std::string serialize_library(const ToolLibrary& lib);
/// Throws ParseError with a line number on malformed text.
ToolLibrary parse_library(std::string_view text);
void save_library(const ToolLibrary& lib, const std::string& path);
/// A missing file yields an empty library bound to `path`.
ToolLibrary load_library(const std::string& path);

/// Standalone netlist text holding the entry's subcircuit definition.
std::string export_tool(const ToolEntry& entry);

}  // namespace anaflow
