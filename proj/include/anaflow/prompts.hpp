#pragma once

// Prompt templates. Placeholders are written [NAME] and replaced verbatim by
// fill_template. The text is part of the benchmark protocol: any edit must
// bump kPromptTemplateVersion.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace anaflow {

inline constexpr std::string_view kPromptTemplateVersion = "spice-1";

std::string_view system_prompt();
/// Basic-circuit design prompt (NgSpice answer); [TASK], [INPUT], [OUTPUT].
std::string_view basic_template();
/// Tool retrieval prompt; [TABLE], [TASK].
std::string_view retrieval_template();
/// Composite design prompt; [TASK], [INPUT], [OUTPUT], [SUBCIRCUITS_INFO],
/// [NOTE_INFO], [CALL_INFO].
std::string_view composite_template();

/// Replaces every [KEY] for the given keys. Unknown bracketed text is left
/// alone.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// "Vinp, Vinn"
std::string join_names(const std::vector<std::string>& names);

}  // namespace anaflow
