#include <algorithm>
#include <cmath>
#include <complex>
#include <fmt/format.h>
#include <numbers>

#include "anaflow/checks.hpp"
#include "anaflow/errors.hpp"
#include "anaflow/signal.hpp"
#include "check_detail.hpp"

namespace anaflow {

using detail::fmtv;

namespace {

constexpr double kAcProbeHz = 100.0;
constexpr double kSquarePeriod = 1e-3;
constexpr double kWaveStep = 1e-6;
constexpr double kWaveStop = 5e-3;

StageReport fresh() {
    StageReport r;
    r.stage = Stage::Function;
    return r;
}

StageReport fail_with(std::string text) {
    auto r = fresh();
    r.add_finding(std::move(text));
    return r;
}

StageReport finish(StageReport r) {
    r.passed = r.feedback.empty();
    return r;
}

double prominence(const std::vector<double>& v) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return std::max(0.1 * (*mx - *mn), 1e-7);
}

// Adds a finding for any mosfet without drain current.
void require_drain_current(StageReport& r, const OpSolution& op) {
    for (const auto& d : op.devices) {
        if (!(std::abs(d.id) > 0.0)) r.add_finding(fmt::format("{} carries no drain current (I_D = 0).", d.name));
    }
}

std::string input_node_of(const Circuit& c, const std::string& source) {
    const auto* el = c.find_element(source);
    return node_key(el->nodes[0]) == kGround ? el->nodes[1] : el->nodes[0];
}

// Samples with t >= t0.
std::pair<std::vector<double>, std::vector<double>> tail(const Waveform& w, std::string_view node, double t0) {
    const auto& v = w.signal(node);
    std::vector<double> t_out, v_out;
    for (std::size_t i = 0; i < w.time_s.size(); ++i) {
        if (w.time_s[i] >= t0 - 1e-15) {
            t_out.push_back(w.time_s[i]);
            v_out.push_back(v[i]);
        }
    }
    return {t_out, v_out};
}

// Mean peak spacing after the first 20% of the window; nullopt with a
// reason when fewer than three peaks remain.
std::optional<double> measured_period(const Waveform& w, std::string_view node, double tstop, std::string& why) {
    auto [t, v] = tail(w, node, 0.2 * tstop);
    if (v.size() < 3) {
        why = "the waveform is too short";
        return std::nullopt;
    }
    const auto peaks = find_peaks(v, prominence(v));
    if (peaks.size() < 3) {
        why = fmt::format("{} peak(s) after start-up, at least 3 are needed", peaks.size());
        return std::nullopt;
    }
    std::vector<double> times;
    for (auto i : peaks) times.push_back(t[i]);
    return period_stats(times).mean_period;
}

Waveform run_transient(Simulator& sim, double tstep, double tstop) {
    auto w = sim.transient(tstep, tstop);
    if (w.truncated) throw SimulationError("transient stopped early: " + w.diagnostic);
    return w;
}

StageReport check_amplifier(const Circuit& c, const TaskSpec& task) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the amplifier input.");
    const auto out = observed_output(c, task);
    Simulator sim(c);
    auto r = fresh();
    require_drain_current(r, sim.solve_op());
    const auto g = sim.ac({{*src, 1.0}}, kAcProbeHz).phasor(out);
    const double mag = std::abs(g);
    r.measurements["gain_db"] = 20.0 * std::log10(std::max(mag, 1e-300));
    r.measurements["phase_deg"] = std::arg(g) * 180.0 / std::numbers::pi;
    if (!(mag > 1e-6)) {
        r.add_finding(fmt::format("gain |Av| at 100 Hz is {} (zero output swing); it must be greater than 0. "
                                  "Check that {} is not tied to a supply or ground.",
                                  fmtv(mag), out));
    }
    return finish(std::move(r));
}

StageReport check_current_mirror(const Circuit& c, const TaskSpec& task) {
    const auto out = observed_output(c, task);
    const auto* load = detail::element_at(c, ElementKind::Resistor, out);
    if (!load) return fail_with(fmt::format("no load resistor is connected to {}; add one so the output current can be measured.", out));
    const std::string load_name = load->name;
    auto r = fresh();
    require_drain_current(r, Simulator(c).solve_op());

    std::vector<double> currents;
    Circuit probe = c;
    auto* el = probe.find_element(load_name);
    for (const double ohms : sweep_grid(100.0, 1000.0, 100.0)) {
        el->value = ohms;
        const auto op = Simulator(probe).solve_op();
        currents.push_back(std::abs(op.voltage(el->nodes[0]) - op.voltage(el->nodes[1])) / ohms);
    }
    double best = INFINITY;
    for (std::size_t i = 1; i < currents.size(); ++i) best = std::min(best, std::abs(currents[i] - currents[i - 1]));
    r.measurements["output_current_a"] = currents.front();
    r.measurements["min_delta_current_a"] = best;
    if (!(best < 1e-5)) {
        r.add_finding(fmt::format("the output current changes by at least {} A between adjacent load values "
                                  "(load {} swept 100 to 1000 ohm); a change below 1e-05 A is required. "
                                  "Adjust the load resistor or keep the output transistor saturated.",
                                  fmtv(best), load_name));
    }
    return finish(std::move(r));
}

StageReport check_inverter(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the inverter input.");
    const auto out = observed_output(c, task);
    const auto sweep = Simulator(c).sweep(*src, sweep_grid(0.0, o.vdd, 0.01));
    std::vector<double> v;
    for (const auto& p : sweep.points) {
        if (!p.op.converged) return fail_with(fmt::format("DC sweep failed at Vin = {} V: {}", fmtv(p.input), p.op.diagnostic));
        v.push_back(p.op.voltage(out));
    }
    auto r = fresh();
    const double mid = o.vdd / 2.0;
    const double low_in = v.front(), high_in = v.back();
    r.measurements["vout_at_vin_0"] = low_in;
    r.measurements["vout_at_vin_vdd"] = high_in;
    if (o.inverter_verbatim) {
        if (!(low_in <= mid)) r.add_finding(fmt::format("Vout = {} V at Vin = 0; required Vout <= {} V.", fmtv(low_in), fmtv(mid)));
        if (!(high_in >= mid)) r.add_finding(fmt::format("Vout = {} V at Vin = Vdd; required Vout >= {} V.", fmtv(high_in), fmtv(mid)));
    } else {
        if (!(low_in >= mid)) r.add_finding(fmt::format("Vout = {} V at Vin = 0; required Vout >= {} V.", fmtv(low_in), fmtv(mid)));
        if (!(high_in <= mid)) r.add_finding(fmt::format("Vout = {} V at Vin = Vdd; required Vout <= {} V.", fmtv(high_in), fmtv(mid)));
    }
    double jump = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) jump = std::max(jump, std::abs(v[i] - v[i - 1]));
    r.measurements["max_step_v"] = jump;
    if (!(jump <= 1.0)) {
        r.add_finding(fmt::format("Vout jumps by {} V between adjacent 0.01 V input steps; at most 1.0 V is allowed.", fmtv(jump)));
    }
    return finish(std::move(r));
}

StageReport check_opamp(const Circuit& c, const TaskSpec& task) {
    const auto vp = driving_source(c, "Vinp");
    const auto vn = driving_source(c, "Vinn");
    if (!vp || !vn) return fail_with("both Vinp and Vinn must be driven by voltage sources.");
    const auto out = observed_output(c, task);
    Simulator sim(c);
    auto r = fresh();
    require_drain_current(r, sim.solve_op());
    const auto dm_phasor = sim.ac({{*vp, 0.5}, {*vn, -0.5}}, kAcProbeHz).phasor(out);
    const double dm = std::abs(dm_phasor);
    const double cm = std::abs(sim.ac({{*vp, 1.0}, {*vn, 1.0}}, kAcProbeHz).phasor(out));
    r.measurements["gain_db"] = 20.0 * std::log10(std::max(dm, 1e-300));
    r.measurements["common_mode_gain_db"] = 20.0 * std::log10(std::max(cm, 1e-300));
    r.measurements["phase_deg"] = std::arg(dm_phasor) * 180.0 / std::numbers::pi;
    if (!(dm > 1e-6)) {
        r.add_finding(fmt::format("differential-mode gain at 100 Hz is {}; it must be greater than 0.", fmtv(dm)));
    } else if (!(dm > cm)) {
        r.add_finding(fmt::format("differential-mode gain {} is not greater than common-mode gain {} at 100 Hz.",
                                  fmtv(dm), fmtv(cm)));
    }
    return finish(std::move(r));
}

StageReport check_oscillator(const Circuit& c, const TaskSpec& task) {
    Simulator sim(c);
    const auto w = run_transient(sim, 1e-6, 10e-3);
    return evaluate_oscillation(w.time_s, w.signal(observed_output(c, task)));
}

StageReport check_integrator(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the integrator input.");
    const auto out = observed_output(c, task);
    const auto in = input_node_of(c, *src);
    const auto* r1 = detail::element_at(c, ElementKind::Resistor, in);
    if (!r1) return fail_with(fmt::format("no input resistor R1 is connected to {}.", in));
    const auto n1 = detail::other_end(*r1, in);
    const auto* cf = detail::element_at(c, ElementKind::Capacitor, out, n1);
    if (!cf) cf = detail::element_at(c, ElementKind::Capacitor, out);
    if (!cf) return fail_with(fmt::format("no feedback capacitor Cf is connected to {}.", out));
    if (!detail::driven_by_transistor(c, out)) {
        return fail_with("the output is not driven by an active stage; a passive RC network is not an integrator.");
    }
    const double v0 = o.vdd / 2.0, step = 1.0, t = kSquarePeriod;
    const double expected = step / (r1->value * cf->value);

    Simulator sim(c);
    sim.set_dc(*src, v0);
    const auto initial = sim.solve_op();
    SourceSpec square;
    square.dc_value = v0;
    square.waveform = PulseWave{v0 - step, v0 + step, t / 4, 1e-6, 1e-6, t / 2 - 1e-6, t};
    sim.set_source(*src, square);
    auto w = sim.transient(kWaveStep, kWaveStop, initial);
    if (w.truncated) throw SimulationError("transient stopped early: " + w.diagnostic);
    const auto& v = w.signal(out);

    auto r = fresh();
    const double prom = prominence(v);
    const auto peaks = find_peaks(v, prom);
    const auto troughs = find_troughs(v, prom);
    r.measurements["peak_count"] = static_cast<double>(peaks.size());
    r.measurements["expected_slope_v_per_s"] = expected;
    if (peaks.size() <= 2) {
        r.add_finding(fmt::format("the output shows {} peak(s) under a 1 kHz square input; more than 2 are required.", peaks.size()));
        return finish(std::move(r));
    }
    // Rising edges run from each trough to the next peak, trimmed by 10% at
    // both ends to keep the corners out of the fit.
    double slope_sum = 0.0, min_r2 = 1.0;
    int edges = 0;
    for (auto tr : troughs) {
        auto it = std::upper_bound(peaks.begin(), peaks.end(), tr);
        if (it == peaks.end()) break;
        const std::size_t len = *it - tr;
        const std::size_t trim = len / 10;
        const std::size_t a = tr + trim, b = *it - trim;
        if (b <= a + 2) continue;
        std::vector<double> x(w.time_s.begin() + a, w.time_s.begin() + b + 1);
        std::vector<double> y(v.begin() + a, v.begin() + b + 1);
        const auto fit = linear_fit(x, y);
        slope_sum += fit.slope;
        min_r2 = std::min(min_r2, fit.r_squared);
        ++edges;
    }
    if (edges == 0) {
        r.add_finding("no rising edge of the output could be isolated for a slope fit.");
        return finish(std::move(r));
    }
    const double k = slope_sum / edges;
    const double rel = std::abs(k - expected) / expected;
    r.measurements["slope_v_per_s"] = k;
    r.measurements["slope_error"] = rel;
    r.measurements["r_squared"] = min_r2;
    if (!(rel <= 0.3)) {
        r.add_finding(fmt::format("output slope k = {} V/s differs from k' = Vstep/(R1*Cf) = {} V/s by {}%; at most 30% is allowed.",
                                  fmtv(k), fmtv(expected), fmtv(rel * 100.0)));
    }
    if (!(min_r2 > 0.9)) {
        r.add_finding(fmt::format("rising edges are not linear: R^2 = {}, required > 0.9.", fmtv(min_r2)));
    }
    return finish(std::move(r));
}

StageReport check_differentiator(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the differentiator input.");
    const auto out = observed_output(c, task);
    const auto in = input_node_of(c, *src);
    const auto* c1 = detail::element_at(c, ElementKind::Capacitor, in);
    if (!c1) return fail_with(fmt::format("no input capacitor C1 is connected to {}.", in));
    const auto n1 = detail::other_end(*c1, in);
    const auto* rf = detail::element_at(c, ElementKind::Resistor, out, n1);
    if (!rf) rf = detail::element_at(c, ElementKind::Resistor, out);
    if (!rf) return fail_with(fmt::format("no feedback resistor Rf is connected to {}.", out));
    if (!detail::driven_by_transistor(c, out)) {
        return fail_with("the output is not driven by an active stage; a passive CR network is not a differentiator.");
    }
    const double v0 = o.vdd / 2.0, step = 1.0, t = kSquarePeriod;
    // A triangle of amplitude `step` has slope 4*step/T.
    const double expected = rf->value * c1->value * 4.0 * step / t;

    Simulator sim(c);
    SourceSpec tri;
    tri.dc_value = v0;
    tri.waveform = PulseWave{v0 - step, v0 + step, 0.0, t / 2, t / 2, 0.0, t};
    sim.set_source(*src, tri);
    const auto w = run_transient(sim, kWaveStep, kWaveStop);
    const auto [ts, v] = tail(w, out, t);

    auto r = fresh();
    const double prom = prominence(v);
    const auto peaks = find_peaks(v, prom);
    r.measurements["peak_count"] = static_cast<double>(peaks.size());
    r.measurements["expected_amplitude_v"] = expected;
    if (peaks.empty()) {
        r.add_finding("the output shows no peaks under a 1 kHz triangular input; at least one is required.");
        return finish(std::move(r));
    }
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double up = *mx - v0, down = v0 - *mn;
    r.measurements["peak_excursion_v"] = up;
    r.measurements["trough_excursion_v"] = down;
    if (!(std::abs(up - down) <= 0.1 * (std::abs(up) + std::abs(down)) / 2.0)) {
        r.add_finding(fmt::format("the output square wave is not symmetric about V0 = {} V: it reaches {} V above and {} V below.",
                                  fmtv(v0), fmtv(up), fmtv(down)));
    }
    if (!(up >= 0.9 * expected) || !(down >= 0.9 * expected)) {
        r.add_finding(fmt::format("output excursions of {} V above and {} V below V0 fall short of 90% of the expected Rf*C1*dVin/dt = {} V.",
                                  fmtv(up), fmtv(down), fmtv(expected)));
    }
    return finish(std::move(r));
}

StageReport check_adder(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto s1 = driving_source(c, "Vin1");
    const auto s2 = driving_source(c, "Vin2");
    if (!s1 || !s2) return fail_with("both Vin1 and Vin2 must be driven by voltage sources.");
    const auto out = observed_output(c, task);
    const double v0 = o.vdd / 2.0;
    Simulator sim(c);
    sim.set_dc(*s2, v0);
    const auto sweep = sim.sweep(*s1, sweep_grid(v0, v0 + 0.5, 0.05));
    std::vector<AdderSample> samples;
    for (const auto& p : sweep.points) {
        if (!p.op.converged) return fail_with(fmt::format("DC sweep failed at Vin1 = {} V: {}", fmtv(p.input), p.op.diagnostic));
        samples.push_back({p.input, v0, p.op.voltage(out)});
    }
    return evaluate_adder(samples, v0);
}

StageReport check_subtractor(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto s1 = driving_source(c, "Vin1");
    const auto s2 = driving_source(c, "Vin2");
    if (!s1 || !s2) return fail_with("both Vin1 and Vin2 must be driven by voltage sources.");
    const auto out = observed_output(c, task);
    const double v2 = o.vdd;  // 2 * V0
    Simulator sim(c);
    sim.set_dc(*s2, v2);
    const auto sweep = sim.sweep(*s1, sweep_grid(v2 - 2.25, v2 - 1.75, 0.05));
    auto r = fresh();
    double worst = 0.0;
    for (const auto& p : sweep.points) {
        if (!p.op.converged) return fail_with(fmt::format("DC sweep failed at Vin1 = {} V: {}", fmtv(p.input), p.op.diagnostic));
        const double diff = v2 - p.input;
        const double vout = p.op.voltage(out);
        const double eps = std::abs((vout - diff) / diff);
        worst = std::max(worst, eps);
        if (eps > 0.2) {
            r.add_finding(fmt::format("at Vin1 = {} V, Vin2 = {} V the output is {} V but should be {} V (error {} > 0.2).",
                                      fmtv(p.input), fmtv(v2), fmtv(vout), fmtv(diff), fmtv(eps)));
        }
    }
    r.measurements["epsilon"] = worst;
    return finish(std::move(r));
}

// Input value where `v` first crosses `level`, linearly interpolated.
std::optional<double> crossing(const std::vector<double>& x, const std::vector<double>& v, double level) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double a = v[i - 1] - level, b = v[i] - level;
        if (a == 0.0) return x[i - 1];
        if ((a < 0.0) != (b < 0.0)) return x[i - 1] + (x[i] - x[i - 1]) * (-a) / (b - a);
    }
    return std::nullopt;
}

bool monotone(const std::vector<double>& v) {
    constexpr double tol = 1e-6;
    bool up = true, down = true;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] < v[i - 1] - tol) up = false;
        if (v[i] > v[i - 1] + tol) down = false;
    }
    return up || down;
}

StageReport check_schmitt(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the Schmitt trigger input.");
    const auto out = observed_output(c, task);
    const auto up_in = sweep_grid(0.0, o.vdd, 0.01);
    std::vector<double> path = up_in;
    path.insert(path.end(), up_in.rbegin() + 1, up_in.rend());
    const auto sweep = Simulator(c).sweep(*src, path);
    std::vector<double> x_up, v_up, x_down, v_down;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        const auto& p = sweep.points[i];
        if (!p.op.converged) return fail_with(fmt::format("DC sweep failed at Vin = {} V: {}", fmtv(p.input), p.op.diagnostic));
        auto& xs = i < up_in.size() ? x_up : x_down;
        auto& vs = i < up_in.size() ? v_up : v_down;
        xs.push_back(p.input);
        vs.push_back(p.op.voltage(out));
    }
    auto r = fresh();
    const double mid = o.vdd / 2.0;
    const auto hi = crossing(x_up, v_up, mid);
    const auto lo = crossing(x_down, v_down, mid);
    if (!hi || !lo) {
        r.add_finding(fmt::format("Vout does not cross Vdd/2 = {} V on the {} sweep.", fmtv(mid),
                                  !hi ? "rising" : "falling"));
        return finish(std::move(r));
    }
    const double hyst = std::abs(*hi - *lo);
    r.measurements["vin_high_v"] = *hi;
    r.measurements["vin_low_v"] = *lo;
    r.measurements["hysteresis_v"] = hyst;
    if (!(hyst > 0.05)) {
        r.add_finding(fmt::format("switching thresholds Vin,high = {} V and Vin,low = {} V differ by {} V; hysteresis must exceed 0.05 V.",
                                  fmtv(*hi), fmtv(*lo), fmtv(hyst)));
    }
    if (!monotone(v_up) || !monotone(v_down)) {
        r.add_finding("Vout is not monotone within a sweep direction.");
    }
    return finish(std::move(r));
}

StageReport check_vco(const Circuit& c, const TaskSpec& task) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the VCO control input.");
    const auto out = observed_output(c, task);
    constexpr double tstop = 10e-3;
    const double controls[] = {0.7, 0.8, 0.85};
    std::vector<double> periods;
    auto r = fresh();
    for (const double vin : controls) {
        Simulator sim(c);
        sim.set_dc(*src, vin);
        const auto w = run_transient(sim, 1e-6, tstop);
        std::string why;
        const auto p = measured_period(w, out, tstop, why);
        if (!p) {
            r.add_finding(fmt::format("no oscillation at Vin = {} V: {}.", fmtv(vin), why));
            return finish(std::move(r));
        }
        r.measurements[fmt::format("period_s_at_{}", fmtv(vin))] = *p;
        periods.push_back(*p);
    }
    for (std::size_t i = 0; i < periods.size(); ++i) {
        for (std::size_t j = i + 1; j < periods.size(); ++j) {
            const double d = std::abs(periods[i] - periods[j]);
            if (!(d > 1e-6)) {
                r.add_finding(fmt::format("output periods at Vin = {} V and {} V differ by {} s; more than 1e-06 s is required.",
                                          fmtv(controls[i]), fmtv(controls[j]), fmtv(d)));
            }
        }
    }
    return finish(std::move(r));
}

StageReport check_pll(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    const auto src = designated_input(c, task);
    if (!src) return fail_with("no voltage source drives the reference clock input.");
    const auto out = observed_output(c, task);
    constexpr double tstop = 20e-6, fref = 10e6;
    Simulator sim(c);
    SourceSpec clk;
    clk.waveform = PulseWave{0.0, o.vdd, 0.0, 1e-9, 1e-9, 49e-9, 100e-9};
    sim.set_source(*src, clk);
    const auto w = run_transient(sim, 1e-9, tstop);
    auto r = fresh();
    std::string why;
    const auto p = measured_period(w, out, tstop, why);
    if (!p) {
        r.add_finding(fmt::format("{} does not oscillate: {}.", out, why));
        return finish(std::move(r));
    }
    const double f = 1.0 / *p;
    const double dev = std::abs(f - fref) / fref;
    r.measurements["frequency_hz"] = f;
    r.measurements["frequency_error"] = dev;
    if (!(dev <= 0.05)) {
        r.add_finding(fmt::format("{} runs at {} Hz, {}% away from the 10 MHz reference; at most 5% is allowed.", out,
                                  fmtv(f), fmtv(dev * 100.0)));
    }
    return finish(std::move(r));
}

StageReport dispatch(const Circuit& c, const TaskSpec& task, const CheckOptions& o) {
    switch (task.circuit_type) {
        case CircuitType::Amplifier: return check_amplifier(c, task);
        case CircuitType::CurrentMirror: return check_current_mirror(c, task);
        case CircuitType::Inverter: return check_inverter(c, task, o);
        case CircuitType::Opamp: return check_opamp(c, task);
        case CircuitType::Oscillator: return check_oscillator(c, task);
        case CircuitType::Integrator: return check_integrator(c, task, o);
        case CircuitType::Differentiator: return check_differentiator(c, task, o);
        case CircuitType::Adder: return check_adder(c, task, o);
        case CircuitType::Subtractor: return check_subtractor(c, task, o);
        case CircuitType::SchmittTrigger: return check_schmitt(c, task, o);
        case CircuitType::VCO: return check_vco(c, task);
        case CircuitType::PLL: return check_pll(c, task, o);
    }
    return fail_with("unknown circuit type.");
}

}  // namespace

StageReport run_function_check(const Circuit& flattened, const TaskSpec& task, const CheckOptions& options) {
    try {
        return dispatch(flattened, task, options);
    } catch (const Error& e) {
        return fail_with(std::string("simulation failed during the function check: ") + e.what());
    }
}

}  // namespace anaflow
