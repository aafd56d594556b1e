#include "anaflow/tasks.hpp"

#include <algorithm>

#include "anaflow/errors.hpp"

namespace anaflow {
namespace {

using CT = CircuitType;

TaskSpec make(int id, CT type, std::string description, std::vector<std::string> inputs,
              std::vector<std::string> outputs, bool composite) {
    TaskSpec t;
    t.id = id;
    t.circuit_type = type;
    t.description = std::move(description);
    t.input_nodes = std::move(inputs);
    t.output_nodes = std::move(outputs);
    t.composite = composite;
    t.difficulty = id <= 8 ? Difficulty::Easy : id <= 13 ? Difficulty::Medium : Difficulty::Hard;
    return t;
}

std::vector<TaskSpec> build_tasks() {
    return {
        make(1, CT::Amplifier, "a single-stage common-source amplifier with resistive load R", {"Vin"}, {"Vout"}, false),
        make(2, CT::Amplifier,
             "a three-stage amplifier with single input and output (each stage is common-source with resistive load)",
             {"Vin"}, {"Vout"}, false),
        make(3, CT::Amplifier,
             "a common-drain amplifier (a.k.a. a source follower) with resistive load R (output Vout at the source)",
             {"Vin"}, {"Vout"}, false),
        make(4, CT::Amplifier,
             "a single-stage common-gate amplifier with resistive load R (input signal Vin must be applied at the "
             "source terminal)",
             {"Vin", "Vbias"}, {"Vout"}, false),
        make(5, CT::Amplifier,
             "a single-stage cascode amplifier with two NMOS transistors provides a single-ended output through a "
             "resistive load R",
             {"Vin", "Vbias"}, {"Vout"}, false),
        make(6, CT::Inverter, "a NMOS inverter with resistive load R", {"Vin"}, {"Vout"}, false),
        make(7, CT::Inverter, "a logical inverter with 1 NMOS and 1 PMOS", {"Vin"}, {"Vout"}, false),
        make(8, CT::CurrentMirror, "a simple NMOS constant current source with resistive load R", {"Vbias"}, {"Vout"},
             false),
        make(9, CT::Amplifier,
             "a single-stage amplifier (common-source with PMOS diode-connected load (gate and drain are shorted))",
             {"Vin"}, {"Vout"}, false),
        make(10, CT::Amplifier, "a two-stage amplifier with a Miller compensation capacitor", {"Vin"}, {"Vout"}, false),
        make(11, CT::Opamp,
             "a differential opamp with an active PMOS current mirror load, a tail current source, and two outputs",
             {"Vinp", "Vinn", "Vbias"}, {"Voutp", "Vout"}, false),
        make(12, CT::CurrentMirror,
             "A cascode current mirror with 4 mosfets (2 stacked at input side with diode-connected, 2 stacked at "
             "output side), reference current source input Iref (connected to Vdd) and resistive load R",
             {"Iref"}, {"Iout"}, false),
        make(13, CT::Opamp,
             "a single-stage differential common-source opamp with dual resistive loads, tail current, and a single "
             "output",
             {"Vinp", "Vinn"}, {"Vout"}, false),
        make(14, CT::Opamp,
             "a two-stage differential opamp (first stage: common-source with an active load and a tail current, "
             "second stage: common-source with an active load)",
             {"Vinp", "Vinn", "Vbias1", "Vbias2", "Vbias3"}, {"Voutp", "Vout"}, false),
        make(15, CT::Opamp,
             "a single-stage telescopic cascode opamp with two outputs (4 nmos as cascode input pair, 4 pmos as "
             "cascode loads, and 1 tail current)",
             {"Vinp", "Vinn", "Vbias1", "Vbias2", "Vbias3", "Vbias4"}, {"Voutp", "Vout"}, false),
        make(16, CT::Oscillator, "an RC phase-shift oscillator", {}, {"Vout"}, true),
        make(17, CT::Oscillator, "a Wien Bridge oscillator", {}, {"Vout"}, true),
        make(18, CT::Integrator, "an Opamp integrator with resistor R1 and capacitor Cf", {"Vin"}, {"Vout"}, true),
        make(19, CT::Differentiator, "an Opamp differentiator with resistor Rf and capacitor C1", {"Vin"}, {"Vout"},
             true),
        make(20, CT::Adder, "an Opamp adder to make Vout=-(Vin1+Vin2)", {"Vin1", "Vin2"}, {"Vout"}, true),
        make(21, CT::Subtractor, "an Op-amp subtractor to make Vout=Vin2-Vin1", {"Vin1", "Vin2"}, {"Vout"}, true),
        make(22, CT::SchmittTrigger, "a non-inverting Schmitt trigger with positive feedback op-amp", {"Vin"},
             {"Vout"}, true),
        make(23, CT::VCO, "a voltage-controlled oscillator", {"Vin"}, {"Vout"}, true),
        make(24, CT::PLL, "a phase-locked loop", {"CLK_ref"}, {"CLK_p"}, true),
    };
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(CircuitType type) {
    switch (type) {
        case CT::Amplifier: return "Amplifier";
        case CT::CurrentMirror: return "CurrentMirror";
        case CT::Inverter: return "Inverter";
        case CT::Opamp: return "Opamp";
        case CT::Oscillator: return "Oscillator";
        case CT::Integrator: return "Integrator";
        case CT::Differentiator: return "Differentiator";
        case CT::Adder: return "Adder";
        case CT::Subtractor: return "Subtractor";
        case CT::SchmittTrigger: return "SchmittTrigger";
        case CT::VCO: return "VCO";
        case CT::PLL: return "PLL";
    }
    return "?";
}

std::string_view to_string(Difficulty difficulty) {
    switch (difficulty) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "?";
}

const std::vector<TaskSpec>& builtin_tasks() {
    static const std::vector<TaskSpec> tasks = build_tasks();
    return tasks;
}

const TaskSpec& task_by_id(int id) {
    const auto& tasks = builtin_tasks();
    if (id < 1 || id > static_cast<int>(tasks.size())) {
        throw ConfigError("unknown task id " + std::to_string(id) + " (valid: 1..24)");
    }
    return tasks[static_cast<std::size_t>(id - 1)];
}

StageReport check_requirements(const Circuit& circuit, const TaskSpec& task, const RequirementOptions& options) {
    StageReport report;
    report.stage = Stage::Requirement;

    for (const auto& name : task.input_nodes) {
        // A current input such as Iref is named by its source element rather
        // than a node.
        if (!circuit.has_node(name) && !circuit.find_element(name)) {
            report.add_finding("required input node '" + name + "' is missing from the netlist.");
        }
    }
    for (const auto& name : task.output_nodes) {
        if (!circuit.has_node(name)) {
            report.add_finding("required output node '" + name + "' is missing from the netlist.");
        }
    }

    auto count_kind = [&](ElementKind kind) {
        return std::count_if(circuit.elements.begin(), circuit.elements.end(),
                             [&](const Element& e) { return e.kind == kind; });
    };

    if (lower(task.description).find("resistive load") != std::string::npos && count_kind(ElementKind::Resistor) == 0) {
        report.add_finding("the task asks for a resistive load but the netlist contains no resistor.");
    }

    if (task.id == 4) {
        const bool at_source = std::any_of(circuit.elements.begin(), circuit.elements.end(), [](const Element& e) {
            return e.kind == ElementKind::Mosfet && node_key(e.nodes[2]) == node_key("Vin");
        });
        if (!at_source) {
            report.add_finding(
                "input signal Vin must be applied at the source terminal of a mosfet, but no mosfet has its source on "
                "Vin.");
        }
    }

    if (task.id == 7) {
        int nmos = 0;
        int pmos = 0;
        for (const auto& e : circuit.elements) {
            if (e.kind != ElementKind::Mosfet) continue;
            const auto* model = circuit.find_model(e.model_name);
            if (!model) continue;
            (model->polarity == Polarity::Nmos ? nmos : pmos)++;
        }
        if (nmos != 1 || pmos != 1) {
            report.add_finding("the inverter must use exactly 1 NMOS and 1 PMOS, found " + std::to_string(nmos) +
                               " NMOS and " + std::to_string(pmos) + " PMOS.");
        }
    }

    if (task.composite && options.library_active && count_kind(ElementKind::Instance) == 0) {
        report.add_finding(
            "this composite task must instantiate at least one subcircuit from the provided library, but the netlist "
            "has no X instance.");
    }

    report.passed = report.feedback.empty();
    return report;
}

}  // namespace anaflow
