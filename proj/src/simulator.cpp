#include "anaflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "anaflow/errors.hpp"
#include "dense_lu.hpp"

namespace anaflow {
namespace {

using detail::DenseMatrix;

constexpr int kGroundIndex = -1;

struct TwoTerminal {
    int a, b;
    double value;
    std::string name;
};

struct Source {
    int p, n;
    SourceSpec spec;
    std::string name;
    int branch;  // unknown index for V sources, -1 for I sources
};

struct Mos {
    int d, g, s, b;
    DeviceModel model;
    double w, l;
    std::string name;
};

struct Companion {
    double geq = 0.0;
    double ieq = 0.0;
};

// Thrown inside the solver when a pivot vanishes; converted to a
// SimulationError naming the unknown at the public boundary.
struct Singular {
    long column;
};

struct Context {
    double source_scale = 1.0;
    double gshunt = 0.0;
    // Pseudo-transient: a conductance from every node to an anchor voltage.
    double ganchor = 0.0;
    const std::vector<double>* anchor = nullptr;
    double time = -1.0;  // < 0: DC values; otherwise waveform values at time
    const std::vector<Companion>* caps = nullptr;
};

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

}  // namespace

struct Simulator::Impl {
    SimOptions opt;
    std::vector<std::string> node_names;  // display names, index = unknown
    std::map<std::string, int> node_index;
    std::vector<TwoTerminal> resistors;
    std::vector<TwoTerminal> capacitors;
    std::vector<Source> vsources;
    std::vector<Source> isources;
    std::vector<Mos> mosfets;
    std::size_t nn = 0;
    std::size_t size = 0;
    std::string structural_error;

    DenseMatrix<double> a;
    std::vector<double> rhs;
    std::vector<std::size_t> perm;

    int node(const std::string& name) {
        const auto key = node_key(name);
        if (key == kGround) return kGroundIndex;
        auto [it, inserted] = node_index.emplace(key, static_cast<int>(node_names.size()));
        if (inserted) node_names.push_back(name);
        return it->second;
    }

    Impl(const Circuit& c, SimOptions o) : opt(o) {
        for (const auto& el : c.elements) {
            switch (el.kind) {
                case ElementKind::Resistor:
                    resistors.push_back({node(el.nodes[0]), node(el.nodes[1]), el.value, el.name});
                    break;
                case ElementKind::Capacitor:
                    capacitors.push_back({node(el.nodes[0]), node(el.nodes[1]), el.value, el.name});
                    break;
                case ElementKind::VoltageSource:
                    vsources.push_back({node(el.nodes[0]), node(el.nodes[1]), el.source, el.name, 0});
                    break;
                case ElementKind::CurrentSource:
                    isources.push_back({node(el.nodes[0]), node(el.nodes[1]), el.source, el.name, -1});
                    break;
                case ElementKind::Mosfet: {
                    const auto* model = c.find_model(el.model_name);
                    if (!model) throw SimulationError("mosfet " + el.name + " references unknown model '" + el.model_name + "'");
                    mosfets.push_back({node(el.nodes[0]), node(el.nodes[1]), node(el.nodes[2]), node(el.nodes[3]),
                                       *model, el.width_m, el.length_m, el.name});
                    break;
                }
                case ElementKind::Instance:
                    throw SimulationError("circuit must be flattened before simulation (found instance " + el.name + ")");
            }
        }
        nn = node_names.size();
        for (std::size_t k = 0; k < vsources.size(); ++k) vsources[k].branch = static_cast<int>(nn + k);
        size = nn + vsources.size();
        if (size == 0) throw SimulationError("circuit has no nodes to solve");
        a = DenseMatrix<double>(size);
        rhs.assign(size, 0.0);
        check_structure(c);
    }

    void check_structure(const Circuit& c) {
        std::vector<int> count(nn, 0);
        std::vector<std::string> via(nn);
        for (const auto& el : c.elements) {
            for (const auto& n : el.nodes) {
                const auto key = node_key(n);
                if (key == kGround) continue;
                const int i = node_index.at(key);
                ++count[static_cast<std::size_t>(i)];
                via[static_cast<std::size_t>(i)] = el.name;
            }
        }
        std::vector<std::string> findings;
        for (std::size_t i = 0; i < nn; ++i) {
            if (count[i] < 2) {
                findings.push_back(fmt::format("node '{}' has only one connection (to {})", node_names[i], via[i]));
            }
        }
        if (!findings.empty()) {
            structural_error = "floating node or degenerate topology: ";
            for (std::size_t i = 0; i < findings.size(); ++i) {
                if (i) structural_error += "; ";
                structural_error += findings[i];
            }
        }
    }

    bool nonlinear() const { return !mosfets.empty(); }

    double v(const std::vector<double>& x, int i) const { return i < 0 ? 0.0 : x[static_cast<std::size_t>(i)]; }

    void add(int r, int c, double g) {
        if (r >= 0 && c >= 0) a(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += g;
    }

    void add_rhs(int r, double value) {
        if (r >= 0) rhs[static_cast<std::size_t>(r)] += value;
    }

    void conductance(int p, int n, double g) {
        add(p, p, g);
        add(n, n, g);
        add(p, n, -g);
        add(n, p, -g);
    }

    // Current `i` leaving node p and entering node n through the element.
    void current(int p, int n, double i) {
        add_rhs(p, -i);
        add_rhs(n, i);
    }

    double source_value(const Source& s, const Context& ctx) const {
        const double base = ctx.time < 0.0 ? s.spec.dc_value : s.spec.value_at(ctx.time);
        return base * ctx.source_scale;
    }

    DeviceState evaluate(const Mos& m, const std::vector<double>& x) const {
        const double vs = v(x, m.s);
        auto st = device_current(m.model, m.w, m.l, v(x, m.g) - vs, v(x, m.d) - vs);
        st.name = m.name;
        return st;
    }

    void assemble(const std::vector<double>& x, const Context& ctx) {
        a.clear();
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (const auto& r : resistors) conductance(r.a, r.b, 1.0 / r.value);
        if (ctx.caps) {
            for (std::size_t k = 0; k < capacitors.size(); ++k) {
                const auto& c = capacitors[k];
                const auto& comp = (*ctx.caps)[k];
                conductance(c.a, c.b, comp.geq);
                current(c.a, c.b, comp.ieq);
            }
        }
        for (const auto& s : vsources) {
            add(s.p, s.branch, 1.0);
            add(s.n, s.branch, -1.0);
            add(s.branch, s.p, 1.0);
            add(s.branch, s.n, -1.0);
            rhs[static_cast<std::size_t>(s.branch)] = source_value(s, ctx);
        }
        for (const auto& s : isources) current(s.p, s.n, source_value(s, ctx));
        for (const auto& m : mosfets) {
            const auto st = evaluate(m, x);
            const double ieq = st.id - st.gm * st.vgs - st.gds * st.vds;
            add(m.d, m.g, st.gm);
            add(m.d, m.s, -(st.gm + st.gds));
            add(m.d, m.d, st.gds);
            add(m.s, m.g, -st.gm);
            add(m.s, m.s, st.gm + st.gds);
            add(m.s, m.d, -st.gds);
            current(m.d, m.s, ieq);
            conductance(m.d, m.b, opt.gmin);
            conductance(m.s, m.b, opt.gmin);
        }
        if (ctx.gshunt > 0.0) {
            for (std::size_t i = 0; i < nn; ++i) a(i, i) += ctx.gshunt;
        }
        if (ctx.anchor) {
            for (std::size_t i = 0; i < nn; ++i) {
                a(i, i) += ctx.ganchor;
                rhs[i] += ctx.ganchor * (*ctx.anchor)[i];
            }
        }
    }

    // Backward-Euler relaxation with a small capacitor on every node, the
    // step growing until the anchors no longer matter. Settles into a stable
    // equilibrium near the starting state, which keeps bistable circuits on
    // their current branch.
    bool pseudo_transient(std::vector<double>& x, Context ctx, int& iterations) {
        constexpr double cnode = 1e-12;
        std::vector<double> prev = x;
        double dt = 1e-9;
        ctx.anchor = &prev;
        for (int step = 0; step < 2000; ++step) {
            ctx.ganchor = cnode / dt;
            std::vector<double> trial = prev;
            const auto r = newton(trial, ctx);
            iterations += r.iterations;
            if (!r.converged) {
                dt /= 8.0;
                if (dt < 1e-18) return false;
                continue;
            }
            double change = 0.0;
            for (std::size_t i = 0; i < nn; ++i) change = std::max(change, std::abs(trial[i] - prev[i]));
            prev = std::move(trial);
            if (ctx.ganchor < 1e-15 && change < opt.vntol) break;
            dt *= r.iterations < 10 ? 4.0 : 1.5;
        }
        ctx.anchor = nullptr;
        ctx.ganchor = 0.0;
        x = prev;
        const auto r = newton(x, ctx);
        iterations += r.iterations;
        return r.converged;
    }

    double residual(const std::vector<double>& x) const {
        const auto ax = a.multiply(x);
        double r = 0.0;
        for (std::size_t i = 0; i < nn; ++i) r = std::max(r, std::abs(ax[i] - rhs[i]));
        return r;
    }

    std::vector<double> factor_and_solve() {
        DenseMatrix<double> lu = a;
        const long bad = detail::lu_factor(lu, perm);
        if (bad >= 0) throw Singular{bad};
        return detail::lu_solve(lu, perm, rhs);
    }

    NewtonResult newton(std::vector<double>& x, const Context& ctx) {
        NewtonResult result;
        double last_dv = INFINITY;
        for (int iter = 1; iter <= opt.max_iterations; ++iter) {
            assemble(x, ctx);
            if (iter > 1) {
                result.residual = residual(x);
                if (last_dv < opt.vntol && result.residual < opt.abstol) {
                    result.converged = true;
                    result.iterations = iter - 1;
                    return result;
                }
            }
            auto xn = factor_and_solve();
            if (!std::all_of(xn.begin(), xn.end(), [](double d) { return std::isfinite(d); })) {
                result.iterations = iter;
                return result;
            }
            if (!nonlinear()) {
                x = std::move(xn);
                result.residual = residual(x);
                result.converged = true;
                result.iterations = 1;
                return result;
            }
            double dv = 0.0;
            for (std::size_t i = 0; i < size; ++i) {
                double d = xn[i] - x[i];
                if (i < nn) {
                    d = std::clamp(d, -opt.max_step_v, opt.max_step_v);
                    dv = std::max(dv, std::abs(d));
                }
                x[i] += d;
            }
            last_dv = dv;
            result.iterations = iter;
        }
        return result;
    }

    std::string describe_unknown(long column) const {
        const auto c = static_cast<std::size_t>(column);
        if (c < nn) return "node '" + node_names[c] + "'";
        return "voltage source " + vsources[c - nn].name;
    }

    [[noreturn]] void throw_singular(long column) const {
        throw SimulationError("floating node or degenerate topology: singular matrix at " + describe_unknown(column) +
                              " (no DC path to ground or a loop of voltage sources)");
    }

    // Newton, then pseudo-transient relaxation, gmin stepping and source
    // stepping.
    std::vector<double> operating_point(const std::vector<double>& guess, double time, NewtonResult& out) {
        if (!structural_error.empty()) throw SimulationError(structural_error);
        try {
            Context ctx;
            ctx.time = time;
            std::vector<double> x = guess;
            out = newton(x, ctx);
            if (out.converged) return x;

            int total = out.iterations;
            x = guess;
            if (nonlinear() && pseudo_transient(x, ctx, total)) {
                out.converged = true;
                out.iterations = total;
                out.residual = residual(x);
                return x;
            }

            x = guess;
            bool ok = true;
            for (double g = 1e-3; g >= 1e-12 * 0.999 && ok; g /= 10.0) {
                ctx.gshunt = g;
                auto r = newton(x, ctx);
                total += r.iterations;
                ok = r.converged;
            }
            if (ok) {
                ctx.gshunt = 0.0;
                out = newton(x, ctx);
                out.iterations += total;
                if (out.converged) return x;
            }

            x.assign(size, 0.0);
            ctx.gshunt = 0.0;
            ok = true;
            for (int k = 1; k <= 10 && ok; ++k) {
                ctx.source_scale = k / 10.0;
                out = newton(x, ctx);
                total += out.iterations;
                ok = out.converged;
            }
            out.iterations = total;
            if (ok) return x;
            throw SimulationError(fmt::format(
                "operating point did not converge after gmin and source stepping (last residual {:.3g} A)",
                out.residual));
        } catch (const Singular& s) {
            throw_singular(s.column);
        }
    }

    OpSolution package(const std::vector<double>& x, const NewtonResult& r) const {
        OpSolution op;
        op.converged = r.converged;
        op.iterations = r.iterations;
        op.residual = r.residual;
        op.node_voltages[std::string(kGround)] = 0.0;
        for (std::size_t i = 0; i < nn; ++i) op.node_voltages[node_key(node_names[i])] = x[i];
        for (const auto& s : vsources) op.branch_currents[name_key(s.name)] = x[static_cast<std::size_t>(s.branch)];
        for (const auto& m : mosfets) op.devices.push_back(evaluate(m, x));
        return op;
    }

    std::vector<double> to_vector(const OpSolution& op) const {
        std::vector<double> x(size, 0.0);
        for (std::size_t i = 0; i < nn; ++i) {
            auto it = op.node_voltages.find(node_key(node_names[i]));
            if (it != op.node_voltages.end()) x[i] = it->second;
        }
        for (const auto& s : vsources) {
            auto it = op.branch_currents.find(name_key(s.name));
            if (it != op.branch_currents.end()) x[static_cast<std::size_t>(s.branch)] = it->second;
        }
        return x;
    }

    Source* find_source(std::string_view name) {
        const auto key = name_key(name);
        for (auto* list : {&vsources, &isources}) {
            for (auto& s : *list) {
                if (name_key(s.name) == key) return &s;
            }
        }
        return nullptr;
    }

    Waveform run_transient(double tstep, double tstop, const std::vector<double>* initial);
    AcResult run_ac(const std::map<std::string, std::complex<double>>& excitation, double frequency_hz);
};

}  // namespace anaflow

namespace anaflow {

Waveform Simulator::Impl::run_transient(double tstep, double tstop, const std::vector<double>* initial) {
    if (!(tstep > 0.0) || !(tstop >= 10.0 * tstep * (1.0 - 1e-12))) {
        throw SimulationError(fmt::format("transient needs tstep > 0 and tstop >= 10*tstep (got tstep={}, tstop={})",
                                          tstep, tstop));
    }
    if (!structural_error.empty()) throw SimulationError(structural_error);
    NewtonResult nr;
    std::vector<double> x = initial ? *initial : operating_point(std::vector<double>(size, 0.0), 0.0, nr);

    Waveform wave;
    auto record = [&](double t) {
        wave.time_s.push_back(t);
        wave.signals[std::string(kGround)].push_back(0.0);
        for (std::size_t i = 0; i < nn; ++i) wave.signals[node_key(node_names[i])].push_back(x[i]);
    };
    record(0.0);

    std::vector<double> breakpoints;
    for (const auto* list : {&vsources, &isources}) {
        for (const auto& s : *list) {
            auto bp = s.spec.breakpoints(tstop);
            breakpoints.insert(breakpoints.end(), bp.begin(), bp.end());
        }
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    std::vector<double> cap_v(capacitors.size());
    std::vector<double> cap_i(capacitors.size(), 0.0);
    for (std::size_t k = 0; k < capacitors.size(); ++k) cap_v[k] = v(x, capacitors[k].a) - v(x, capacitors[k].b);
    std::vector<Companion> comp(capacitors.size());

    const auto steps = static_cast<long>(std::llround(tstop / tstep));
    const double eps = 1e-9 * tstep;
    const double hmin = tstep / 64.0;
    double t = 0.0;
    bool backward_euler = true;
    std::size_t next_bp = 0;

    try {
        for (long k = 1; k <= steps; ++k) {
            const double target = static_cast<double>(k) * tstep;
            while (t < target - eps) {
                while (next_bp < breakpoints.size() && breakpoints[next_bp] <= t + eps) ++next_bp;
                double h = target - t;
                bool hits_bp = false;
                if (next_bp < breakpoints.size() && breakpoints[next_bp] < target - eps) {
                    h = breakpoints[next_bp] - t;
                    hits_bp = true;
                }
                std::vector<double> trial;
                for (;;) {
                    for (std::size_t c = 0; c < capacitors.size(); ++c) {
                        const double cv = capacitors[c].value;
                        if (backward_euler) {
                            comp[c].geq = cv / h;
                            comp[c].ieq = -comp[c].geq * cap_v[c];
                        } else {
                            comp[c].geq = 2.0 * cv / h;
                            comp[c].ieq = -comp[c].geq * cap_v[c] - cap_i[c];
                        }
                    }
                    Context ctx;
                    ctx.time = t + h;
                    ctx.caps = &comp;
                    trial = x;
                    if (newton(trial, ctx).converged) break;
                    h *= 0.5;
                    hits_bp = false;
                    backward_euler = true;
                    if (h < hmin * (1.0 - 1e-9)) {
                        wave.truncated = true;
                        wave.diagnostic = fmt::format(
                            "transient step did not converge at t={:.6g} s even with step {:.3g} s; waveform truncated",
                            t, h * 2.0);
                        return wave;
                    }
                }
                x = std::move(trial);
                for (std::size_t c = 0; c < capacitors.size(); ++c) {
                    cap_v[c] = v(x, capacitors[c].a) - v(x, capacitors[c].b);
                    cap_i[c] = comp[c].geq * cap_v[c] + comp[c].ieq;
                }
                t = hits_bp ? breakpoints[next_bp] : t + h;
                if (std::abs(t - target) <= eps) t = target;
                // Slope discontinuities make the trapezoidal rule ring; the
                // step right after one is taken with backward Euler.
                backward_euler = hits_bp || (next_bp < breakpoints.size() && std::abs(breakpoints[next_bp] - t) <= eps);
            }
            record(target);
        }
    } catch (const Singular& s) {
        throw_singular(s.column);
    }
    return wave;
}

AcResult Simulator::Impl::run_ac(const std::map<std::string, std::complex<double>>& excitation, double frequency_hz) {
    using cd = std::complex<double>;
    if (!(frequency_hz > 0.0)) throw SimulationError("AC frequency must be positive");
    for (const auto& [name, value] : excitation) {
        if (!find_source(name)) throw SimulationError("AC excitation names unknown source '" + name + "'");
    }
    NewtonResult nr;
    const auto x = operating_point(std::vector<double>(size, 0.0), -1.0, nr);

    DenseMatrix<cd> m(size);
    std::vector<cd> b(size, cd{});
    auto add_c = [&](int r, int c, cd g) {
        if (r >= 0 && c >= 0) m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += g;
    };
    auto admittance = [&](int p, int n, cd y) {
        add_c(p, p, y);
        add_c(n, n, y);
        add_c(p, n, -y);
        add_c(n, p, -y);
    };
    auto stimulus = [&](const std::string& name) {
        for (const auto& [k, value] : excitation) {
            if (name_key(k) == name_key(name)) return value;
        }
        return cd{};
    };
    const double omega = 2.0 * M_PI * frequency_hz;
    for (const auto& r : resistors) admittance(r.a, r.b, 1.0 / r.value);
    for (const auto& c : capacitors) admittance(c.a, c.b, cd(0.0, omega * c.value));
    for (const auto& s : vsources) {
        add_c(s.p, s.branch, 1.0);
        add_c(s.n, s.branch, -1.0);
        add_c(s.branch, s.p, 1.0);
        add_c(s.branch, s.n, -1.0);
        b[static_cast<std::size_t>(s.branch)] = stimulus(s.name);
    }
    for (const auto& s : isources) {
        const cd i = stimulus(s.name);
        if (s.p >= 0) b[static_cast<std::size_t>(s.p)] -= i;
        if (s.n >= 0) b[static_cast<std::size_t>(s.n)] += i;
    }
    for (const auto& mos : mosfets) {
        const auto st = evaluate(mos, x);
        add_c(mos.d, mos.g, st.gm);
        add_c(mos.d, mos.s, -(st.gm + st.gds));
        add_c(mos.d, mos.d, st.gds);
        add_c(mos.s, mos.g, -st.gm);
        add_c(mos.s, mos.s, st.gm + st.gds);
        add_c(mos.s, mos.d, -st.gds);
        admittance(mos.d, mos.b, opt.gmin);
        admittance(mos.s, mos.b, opt.gmin);
    }
    std::vector<std::size_t> p;
    const long bad = detail::lu_factor(m, p);
    if (bad >= 0) throw_singular(bad);
    const auto sol = detail::lu_solve(m, p, b);

    AcResult out;
    out.frequency_hz = frequency_hz;
    out.node_phasors[std::string(kGround)] = cd{};
    for (std::size_t i = 0; i < nn; ++i) out.node_phasors[node_key(node_names[i])] = sol[i];
    return out;
}

// ---- public surface ----

double OpSolution::voltage(std::string_view node) const {
    auto it = node_voltages.find(node_key(node));
    if (it == node_voltages.end()) throw SimulationError("unknown node '" + std::string(node) + "'");
    return it->second;
}

double OpSolution::current(std::string_view source) const {
    auto it = branch_currents.find(name_key(source));
    if (it == branch_currents.end()) throw SimulationError("unknown voltage source '" + std::string(source) + "'");
    return it->second;
}

const DeviceState* OpSolution::device(std::string_view name) const {
    for (const auto& d : devices) {
        if (name_key(d.name) == name_key(name)) return &d;
    }
    return nullptr;
}

const std::vector<double>& Waveform::signal(std::string_view node) const {
    auto it = signals.find(node_key(node));
    if (it == signals.end()) throw SimulationError("unknown node '" + std::string(node) + "'");
    return it->second;
}

std::complex<double> AcResult::phasor(std::string_view node) const {
    auto it = node_phasors.find(node_key(node));
    if (it == node_phasors.end()) throw SimulationError("unknown node '" + std::string(node) + "'");
    return it->second;
}

Simulator::Simulator(const Circuit& flattened, SimOptions options)
    : impl_(std::make_unique<Impl>(flattened, options)) {}
Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

void Simulator::set_dc(std::string_view source, double value) {
    SourceSpec spec;
    spec.dc_value = value;
    set_source(source, spec);
}

void Simulator::set_source(std::string_view source, const SourceSpec& spec) {
    auto* s = impl_->find_source(source);
    if (!s) throw SimulationError("unknown source '" + std::string(source) + "'");
    s->spec = spec;
}

OpSolution Simulator::solve_op() {
    NewtonResult r;
    const auto x = impl_->operating_point(std::vector<double>(impl_->size, 0.0), -1.0, r);
    return impl_->package(x, r);
}

OpSolution Simulator::solve_op(const OpSolution& guess) {
    NewtonResult r;
    const auto x = impl_->operating_point(impl_->to_vector(guess), -1.0, r);
    return impl_->package(x, r);
}

SweepResult Simulator::sweep(std::string_view source, const std::vector<double>& values) {
    auto* s = impl_->find_source(source);
    if (!s || s->branch < 0) throw SimulationError("sweep source '" + std::string(source) + "' is not a voltage source");
    SweepResult result;
    result.swept_source = s->name;
    std::vector<double> x(impl_->size, 0.0);
    for (double value : values) {
        s->spec = SourceSpec{};
        s->spec.dc_value = value;
        SweepPoint point;
        point.input = value;
        try {
            NewtonResult r;
            x = impl_->operating_point(x, -1.0, r);
            point.op = impl_->package(x, r);
        } catch (const SimulationError& e) {
            point.op.converged = false;
            point.op.diagnostic = e.what();
        }
        result.points.push_back(std::move(point));
    }
    return result;
}

Waveform Simulator::transient(double tstep, double tstop) { return impl_->run_transient(tstep, tstop, nullptr); }

Waveform Simulator::transient(double tstep, double tstop, const OpSolution& initial) {
    const auto x = impl_->to_vector(initial);
    return impl_->run_transient(tstep, tstop, &x);
}

AcResult Simulator::ac(const std::map<std::string, std::complex<double>>& excitation, double frequency_hz) {
    return impl_->run_ac(excitation, frequency_hz);
}

std::vector<double> sweep_grid(double start, double stop, double step) {
    if (!(step > 0.0)) throw SimulationError("sweep step must be positive");
    if (!(start < stop)) throw SimulationError("sweep start must be below stop");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

OpSolution solve_op(const Circuit& flattened) { return Simulator(flattened).solve_op(); }

SweepResult dc_sweep(const Circuit& flattened, std::string_view source, double start, double stop, double step) {
    const auto grid = sweep_grid(start, stop, step);
    return Simulator(flattened).sweep(source, grid);
}

Waveform transient(const Circuit& flattened, double tstep, double tstop) {
    return Simulator(flattened).transient(tstep, tstop);
}

AcResult ac_solve(const Circuit& flattened, const std::map<std::string, std::complex<double>>& excitation,
                  double frequency_hz) {
    return Simulator(flattened).ac(excitation, frequency_hz);
}

std::complex<double> ac_gain(const Circuit& flattened, const std::map<std::string, std::complex<double>>& excitation,
                             std::string_view output, double frequency_hz) {
    double scale = 0.0;
    for (const auto& [name, value] : excitation) scale = std::max(scale, std::abs(value));
    if (!(scale > 0.0)) throw SimulationError("AC gain needs a nonzero excitation");
    return ac_solve(flattened, excitation, frequency_hz).phasor(output) / scale;
}

}  // namespace anaflow
