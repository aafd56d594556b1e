#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef ANAFLOW_FIXTURES
#error "ANAFLOW_FIXTURES must point at tests/fixtures"
#endif

namespace anaflow::testing {

inline std::string fixture_path(const std::string& name) { return std::string(ANAFLOW_FIXTURES) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name));
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One pass/fail fixture pair per circuit type. The fail netlist differs
// from the pass netlist by one card (integrator: the op-amp is removed).
struct MatrixRow {
    const char* type;
    int task_id;
    const char* stem;  // <stem>_pass.sp / <stem>_fail.sp
    bool standard_inverter = false;
};

inline const std::vector<MatrixRow>& criteria_matrix() {
    static const std::vector<MatrixRow> rows = {
        {"Amplifier", 1, "amp"},
        {"CurrentMirror", 8, "mirror"},
        {"Inverter", 6, "inverter", true},
        {"Opamp", 13, "opamp"},
        {"Oscillator", 16, "oscillator"},
        {"Integrator", 18, "integrator"},
        {"Differentiator", 19, "differentiator"},
        {"Adder", 20, "adder"},
        {"Subtractor", 21, "subtractor"},
        {"SchmittTrigger", 22, "schmitt"},
        {"VCO", 23, "vco"},
        {"PLL", 24, "pll"},
    };
    return rows;
}

}  // namespace anaflow::testing
