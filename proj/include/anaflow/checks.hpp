#pragma once

// Verification stages 2-4 and the pipeline that runs all four in order.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anaflow/netlist.hpp"
#include "anaflow/report.hpp"
#include "anaflow/simulator.hpp"
#include "anaflow/tasks.hpp"

namespace anaflow {

struct CheckOptions {
    double vdd = 5.0;
    /// Inverter polarity. true (default) applies the criteria table's literal
    /// ordering, Vout <= Vdd/2 at Vin=0 and >= Vdd/2 at Vin=Vdd; false checks
    /// a conventional inverter (high at Vin=0, low at Vin=Vdd).
    bool inverter_verbatim = true;
    /// Composite tasks must instantiate a library subcircuit.
    bool library_active = false;
};

/// Voltage source that drives `node`, preferring one whose other terminal is
/// ground. Returns its element name.
std::optional<std::string> driving_source(const Circuit& circuit, std::string_view node);

/// First task input driven by a voltage source, as a source name.
std::optional<std::string> designated_input(const Circuit& circuit, const TaskSpec& task);

/// Node the checks observe: the task output named "Vout" when the circuit
/// has it, otherwise the task's first output.
std::string observed_output(const Circuit& circuit, const TaskSpec& task);

StageReport check_operating_points(const OpSolution& op);

struct DcSweepCheck {
    StageReport report;
    Circuit circuit;  // with the input source set to the substituted bias
    std::optional<std::pair<std::string, double>> substitution;
};

/// Expects a flattened circuit.
DcSweepCheck run_dc_sweep_check(const Circuit& flattened, const TaskSpec& task, const CheckOptions& options = {});

/// Expects a flattened circuit with bias substitutions applied.
StageReport run_function_check(const Circuit& flattened, const TaskSpec& task, const CheckOptions& options = {});

/// Waveform-level oscillator criteria: N > 3 peaks, amplitude > 1e-6 V,
/// period variability <= 0.2.
StageReport evaluate_oscillation(const std::vector<double>& time_s, const std::vector<double>& vout);

struct AdderSample {
    double vin1 = 0.0;
    double vin2 = 0.0;
    double vout = 0.0;
};

/// Adder criterion on deviations from the base voltage v0 (v0 = 0 gives the
/// absolute form). Points whose input sum deviation is below 1 mV are
/// skipped.
StageReport evaluate_adder(const std::vector<AdderSample>& samples, double v0);

/// Runs requirement, op_check, dc_sweep and function in order, stopping at
/// the first failure.
VerificationOutcome verify(const Circuit& parsed, const TaskSpec& task, const CheckOptions& options = {});
/// Parses first; a parse error fails the requirement stage with the parser
/// diagnostics as feedback.
VerificationOutcome verify_netlist(std::string_view text, const TaskSpec& task, const CheckOptions& options = {});

}  // namespace anaflow
