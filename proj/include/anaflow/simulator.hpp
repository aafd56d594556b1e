#pragma once

// Modified nodal analysis over a flattened Circuit: DC operating point,
// DC sweep, fixed-grid transient and small-signal AC.

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "anaflow/device.hpp"
#include "anaflow/netlist.hpp"

namespace anaflow {

struct SimOptions {
    double gmin = 1e-12;          // drain-bulk and source-bulk leak of every mosfet
    double vntol = 1e-6;          // max node-voltage update at convergence
    double abstol = 1e-9;         // max KCL residual at convergence, A
    double max_step_v = 0.5;      // Newton damping clamp per node per iteration
    int max_iterations = 150;
};

/// Node voltages and branch currents are keyed by node_key / name_key; use
/// the accessors for case-insensitive lookup.
struct OpSolution {
    std::map<std::string, double> node_voltages;
    std::map<std::string, double> branch_currents;  // voltage sources, into the + terminal
    std::vector<DeviceState> devices;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    std::string diagnostic;  // set when not converged

    /// Throws SimulationError for an unknown node.
    double voltage(std::string_view node) const;
    double current(std::string_view source) const;
    const DeviceState* device(std::string_view name) const;
};

struct SweepPoint {
    double input = 0.0;
    OpSolution op;
};

struct SweepResult {
    std::string swept_source;
    std::vector<SweepPoint> points;
};

struct Waveform {
    std::vector<double> time_s;
    std::map<std::string, std::vector<double>> signals;  // keyed by node_key
    bool truncated = false;
    std::string diagnostic;

    const std::vector<double>& signal(std::string_view node) const;
};

struct AcResult {
    double frequency_hz = 0.0;
    std::map<std::string, std::complex<double>> node_phasors;  // keyed by node_key

    std::complex<double> phasor(std::string_view node) const;
};

/// A reusable solver bound to one flattened circuit. Source values can be
/// overridden between solves, which is how sweeps and checks drive inputs.
class Simulator {
public:
    explicit Simulator(const Circuit& flattened, SimOptions options = {});
    ~Simulator();
    Simulator(Simulator&&) noexcept;
    Simulator& operator=(Simulator&&) noexcept;

    /// Replaces a V or I source's value with a DC level (waveform dropped).
    void set_dc(std::string_view source, double value);
    /// Replaces a V or I source's full specification.
    void set_source(std::string_view source, const SourceSpec& spec);

    /// Throws SimulationError on singular topology or when Newton, gmin
    /// stepping and source stepping all fail.
    OpSolution solve_op();
    /// Same, starting Newton from a previous solution.
    OpSolution solve_op(const OpSolution& guess);

    /// Solves each value in order, warm-starting from the previous point.
    /// Failed points carry converged=false and a diagnostic.
    SweepResult sweep(std::string_view source, const std::vector<double>& values);

    Waveform transient(double tstep, double tstop);
    /// Starts from a given state (capacitor voltages taken from it) instead
    /// of the operating point with sources at their t=0 values.
    Waveform transient(double tstep, double tstop, const OpSolution& initial);

    /// Small-signal response with the given source excitations (V or A),
    /// linearized at the current operating point.
    AcResult ac(const std::map<std::string, std::complex<double>>& excitation, double frequency_hz);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Convenience wrappers; each flattens nothing and builds a fresh Simulator.
OpSolution solve_op(const Circuit& flattened);
SweepResult dc_sweep(const Circuit& flattened, std::string_view source, double start, double stop, double step);
Waveform transient(const Circuit& flattened, double tstep, double tstop);
AcResult ac_solve(const Circuit& flattened, const std::map<std::string, std::complex<double>>& excitation,
                  double frequency_hz);
/// Output phasor divided by the largest excitation magnitude.
std::complex<double> ac_gain(const Circuit& flattened, const std::map<std::string, std::complex<double>>& excitation,
                             std::string_view output, double frequency_hz);

/// CSV with a time_s column and one column per node, 9 significant digits.
/// Throws SimulationError for a node the waveform does not carry.
std::string waveform_csv(const Waveform& wave, const std::vector<std::string>& nodes);

/// Inclusive grid start, start+step, ... <= stop (within a small tolerance).
std::vector<double> sweep_grid(double start, double stop, double step);

}  // namespace anaflow
