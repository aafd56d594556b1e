#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anaflow/netlist.hpp"
#include "anaflow/report.hpp"

namespace anaflow {

enum class CircuitType {
    Amplifier,
    CurrentMirror,
    Inverter,
    Opamp,
    Oscillator,
    Integrator,
    Differentiator,
    Adder,
    Subtractor,
    SchmittTrigger,
    VCO,
    PLL,
};

enum class Difficulty { Easy, Medium, Hard };

std::string_view to_string(CircuitType type);
std::string_view to_string(Difficulty difficulty);

struct TaskSpec {
    int id = 0;
    CircuitType circuit_type = CircuitType::Amplifier;
    std::string description;
    std::vector<std::string> input_nodes;
    std::vector<std::string> output_nodes;
    bool composite = false;
    Difficulty difficulty = Difficulty::Easy;
};

/// The 24 benchmark tasks, ordered by id.
const std::vector<TaskSpec>& builtin_tasks();
/// Throws ConfigError for an id outside 1..24.
const TaskSpec& task_by_id(int id);

struct RequirementOptions {
    /// When set, composite tasks must instantiate at least one subcircuit.
    bool library_active = false;
};

/// Stage 1: required nodes are present and the per-task structural rules hold.
StageReport check_requirements(const Circuit& circuit, const TaskSpec& task, const RequirementOptions& options = {});

}  // namespace anaflow
