#include "anaflow/checks.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "anaflow/errors.hpp"
#include "anaflow/signal.hpp"
#include "check_detail.hpp"

namespace anaflow {

using detail::fmtv;

std::optional<std::string> driving_source(const Circuit& circuit, std::string_view node) {
    const auto key = node_key(node);
    const Element* fallback = nullptr;
    for (const auto& el : circuit.elements) {
        if (el.kind != ElementKind::VoltageSource) continue;
        const auto p = node_key(el.nodes[0]);
        const auto n = node_key(el.nodes[1]);
        if ((p == key && n == kGround) || (n == key && p == kGround)) return el.name;
        if (!fallback && (p == key || n == key)) fallback = &el;
    }
    if (fallback) return fallback->name;
    return std::nullopt;
}

std::optional<std::string> designated_input(const Circuit& circuit, const TaskSpec& task) {
    for (const auto& input : task.input_nodes) {
        if (!circuit.has_node(input)) continue;
        if (auto src = driving_source(circuit, input)) return src;
    }
    return std::nullopt;
}

std::string observed_output(const Circuit& circuit, const TaskSpec& task) {
    for (const auto& o : task.output_nodes) {
        if (node_key(o) == node_key("Vout") && circuit.has_node(o)) return o;
    }
    return task.output_nodes.empty() ? std::string("Vout") : task.output_nodes.front();
}

StageReport check_operating_points(const OpSolution& op) {
    constexpr double kMargin = 1e-3;
    StageReport report;
    report.stage = Stage::OpCheck;
    double min_id = INFINITY;
    for (const auto& d : op.devices) {
        min_id = std::min(min_id, std::abs(d.id));
        const bool n = d.polarity == Polarity::Nmos;
        // Reflect pmos quantities so both polarities test the same way.
        const double vgs = n ? d.vgs : -d.vgs;
        const double vds = n ? d.vds : -d.vds;
        const double vth = n ? d.vto : -d.vto;
        const double ov = vgs - vth;
        const char* gs = n ? "Vgs" : "Vsg";
        const char* ds = n ? "Vds" : "Vsd";
        const char* kind = n ? "nmos" : "pmos";
        if (!(ov > kMargin)) {
            report.add_finding(fmt::format("{} ({}) is in cutoff: {} = {} V is not greater than |Vth| = {} V.", d.name,
                                           kind, gs, fmtv(vgs), fmtv(vth)));
        } else if (!(vds - ov > kMargin)) {
            report.add_finding(fmt::format(
                "{} ({}) is in triode: {} = {} V is not greater than {} - |Vth| = {} V ({} = {} V, |Vth| = {} V).",
                d.name, kind, ds, fmtv(vds), gs, fmtv(ov), gs, fmtv(vgs), fmtv(vth)));
        }
    }
    if (!report.feedback.empty()) {
        report.add_finding("Every MOSFET must be in saturation (Vgs > Vth and Vds > Vgs - Vth); adjust sizes or biases.");
    }
    if (std::isfinite(min_id)) report.measurements["id_amps"] = min_id;
    report.passed = report.feedback.empty();
    return report;
}

DcSweepCheck run_dc_sweep_check(const Circuit& flattened, const TaskSpec& task, const CheckOptions& options) {
    DcSweepCheck out;
    out.circuit = flattened;
    out.report.stage = Stage::DcSweep;
    const auto input = designated_input(flattened, task);
    if (!input) {
        out.report.passed = true;
        out.report.add_finding("skipped: the task has no input driven by a voltage source.");
        return out;
    }
    const auto output = observed_output(flattened, task);
    SweepResult sweep;
    try {
        sweep = Simulator(flattened).sweep(*input, sweep_grid(0.0, options.vdd, 0.05));
    } catch (const Error& e) {
        out.report.add_finding(std::string("DC sweep failed: ") + e.what());
        return out;
    }
    double lo = INFINITY, hi = -INFINITY;
    double best_input = 0.0, best_distance = INFINITY;
    std::string last_error;
    int converged = 0;
    for (const auto& p : sweep.points) {
        if (!p.op.converged) {
            last_error = p.op.diagnostic;
            continue;
        }
        ++converged;
        const double v = p.op.voltage(output);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        const double distance = std::abs(v - options.vdd / 2.0);
        if (distance < best_distance) {
            best_distance = distance;
            best_input = p.input;
        }
    }
    if (converged == 0) {
        out.report.add_finding("DC sweep of " + *input + " did not converge at any point: " + last_error);
        return out;
    }
    out.report.measurements["output_range_v"] = hi - lo;
    if (!(hi - lo > 1e-3)) {
        out.report.add_finding(fmt::format(
            "the output {} does not respond to the input: sweeping {} from 0 to {} V changes it by only {} V.", output,
            *input, fmtv(options.vdd), fmtv(hi - lo)));
        return out;
    }
    out.report.passed = true;
    out.report.measurements["substituted_input_v"] = best_input;
    out.substitution = std::make_pair(*input, best_input);
    if (auto* el = out.circuit.find_element(*input)) {
        el->source = SourceSpec{};
        el->source.dc_value = best_input;
    }
    return out;
}

StageReport evaluate_oscillation(const std::vector<double>& time_s, const std::vector<double>& vout) {
    StageReport report;
    report.stage = Stage::Function;
    if (vout.size() < 3) {
        report.add_finding("no oscillation: the waveform has fewer than 3 samples.");
        return report;
    }
    const auto [mn, mx] = std::minmax_element(vout.begin(), vout.end());
    const double prom = std::max(0.1 * (*mx - *mn), 1e-7);
    const auto peaks = find_peaks(vout, prom);
    const auto troughs = find_troughs(vout, prom);
    report.measurements["peak_count"] = static_cast<double>(peaks.size());
    if (peaks.size() <= 3) {
        report.add_finding(fmt::format("the output does not oscillate: {} peak(s) found, more than 3 are required.",
                                       peaks.size()));
        return report;
    }
    double mean_peak = 0.0, mean_trough = 0.0;
    for (auto i : peaks) mean_peak += vout[i];
    mean_peak /= static_cast<double>(peaks.size());
    for (auto i : troughs) mean_trough += vout[i];
    mean_trough = troughs.empty() ? *mn : mean_trough / static_cast<double>(troughs.size());
    const double amplitude = (mean_peak - mean_trough) / 2.0;
    report.measurements["amplitude_v"] = amplitude;
    if (!(amplitude > 1e-6)) {
        report.add_finding(fmt::format("oscillation amplitude {} V is not above 1e-6 V.", fmtv(amplitude)));
    }
    std::vector<double> times;
    for (auto i : peaks) times.push_back(time_s[i]);
    const auto stats = period_stats(times);
    report.measurements["period_s"] = stats.mean_period;
    report.measurements["period_variability"] = stats.variability;
    if (stats.variability > 0.2) {
        report.add_finding(fmt::format("oscillation period variability dT/T = {} exceeds 0.2.", fmtv(stats.variability)));
    }
    report.passed = report.feedback.empty();
    return report;
}

StageReport evaluate_adder(const std::vector<AdderSample>& samples, double v0) {
    StageReport report;
    report.stage = Stage::Function;
    double worst = 0.0;
    int used = 0;
    for (const auto& s : samples) {
        const double sum = (s.vin1 - v0) + (s.vin2 - v0);
        if (std::abs(sum) < 1e-3) continue;
        ++used;
        const double eps = std::abs(((s.vout - v0) + sum) / sum);
        if (eps > worst) worst = eps;
        if (eps > 0.2) {
            report.add_finding(fmt::format(
                "at Vin1 = {} V, Vin2 = {} V the output is {} V but should be {} V (error {} > 0.2).", fmtv(s.vin1),
                fmtv(s.vin2), fmtv(s.vout), fmtv(v0 - sum), fmtv(eps)));
        }
    }
    if (used == 0) report.add_finding("the adder sweep produced no usable points.");
    report.measurements["epsilon"] = worst;
    report.passed = report.feedback.empty();
    return report;
}

namespace {

StageReport failed(Stage stage, const std::string& text) {
    StageReport r;
    r.stage = stage;
    r.add_finding(text);
    return r;
}

bool push(VerificationOutcome& out, StageReport report) {
    const bool ok = report.passed;
    out.stages.push_back(std::move(report));
    return ok;
}

}  // namespace

VerificationOutcome verify(const Circuit& parsed, const TaskSpec& task, const CheckOptions& options) {
    VerificationOutcome out;
    out.task_id = task.id;
    RequirementOptions req;
    req.library_active = options.library_active;
    if (!push(out, check_requirements(parsed, task, req))) return out;

    Circuit flat;
    try {
        flat = flatten(parsed);
        auto op = Simulator(flat).solve_op();
        if (!push(out, check_operating_points(op))) return out;
    } catch (const Error& e) {
        push(out, failed(Stage::OpCheck, std::string("simulation failed: ") + e.what()));
        return out;
    }

    auto sweep = run_dc_sweep_check(flat, task, options);
    if (sweep.substitution) out.bias_substitutions[sweep.substitution->first] = sweep.substitution->second;
    if (!push(out, std::move(sweep.report))) return out;

    if (!push(out, run_function_check(sweep.circuit, task, options))) return out;
    out.final_pass = true;
    return out;
}

VerificationOutcome verify_netlist(std::string_view text, const TaskSpec& task, const CheckOptions& options) {
    try {
        const auto circuit = parse_netlist(text);
        return verify(circuit, task, options);
    } catch (const ParseError& e) {
        VerificationOutcome out;
        out.task_id = task.id;
        out.stages.push_back(failed(Stage::Requirement, std::string("netlist could not be parsed:\n") + e.what()));
        return out;
    }
}

}  // namespace anaflow
