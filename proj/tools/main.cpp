// anaflow command line: simulate, check, design, bench and library.
//
// Exit codes: 0 success, 1 verification failure (or a trial that did not
// produce a passing design), 2 usage or configuration error.

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "anaflow/agent.hpp"
#include "anaflow/bench.hpp"
#include "anaflow/checks.hpp"
#include "anaflow/config.hpp"
#include "anaflow/errors.hpp"
#include "anaflow/library.hpp"
#include "anaflow/netlist.hpp"
#include "anaflow/simulator.hpp"
#include "anaflow/tasks.hpp"

using namespace anaflow;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Globals {
    std::string config_path;
    Settings flags;
    // raw flag values; copied into `flags` only when given
    std::string vdd, library, output, concurrency, generator, script;
    bool inverter_standard = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void emit(const json& record) { std::cout << record.dump() << "\n"; }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

int parse_int(const std::string& what, const std::string& s) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw ConfigError(fmt::format("{} must be an integer, got '{}'", what, s));
}

CheckOptions check_options(const RunConfig& cfg) {
    CheckOptions o;
    o.vdd = cfg.vdd;
    o.inverter_verbatim = !cfg.inverter_standard;
    return o;
}

ToolLibrary open_library(const RunConfig& cfg) {
    if (cfg.library_path.empty()) return {};
    return load_library(cfg.library_path);
}

std::unique_ptr<Generator> make_generator(const RunConfig& cfg, const std::string& script_path) {
    if (cfg.generator == "remote") {
        RunConfig c = cfg;
        require_api_key(c, process_environment());
        return std::make_unique<RemoteGenerator>(c.remote);
    }
    if (script_path.empty()) throw ConfigError("the replay generator needs --script");
    return std::make_unique<ReplayGenerator>(load_replay_script(script_path));
}

// ---- text rendering ----

void print_outcome(const VerificationOutcome& o) {
    for (const auto& s : o.stages) {
        std::cout << fmt::format("{:<12} {}\n", to_string(s.stage), s.passed ? "PASS" : "FAIL");
        if (!s.passed && !s.feedback.empty()) {
            std::istringstream fb(s.feedback);
            for (std::string line; std::getline(fb, line);) std::cout << "  " << line << "\n";
        }
    }
    for (const auto& [src, v] : o.bias_substitutions) std::cout << fmt::format("bias {} = {:.6g} V\n", src, v);
    if (const auto* f = o.first_failure()) std::cout << fmt::format("result: FAIL at {}\n", to_string(f->stage));
    else std::cout << "result: PASS\n";
}

void print_trial(const TrialRecord& r) {
    if (!r.selected_tools.empty() || r.retrieval_failed) {
        std::string ids;
        for (int id : r.selected_tools) ids += (ids.empty() ? "" : ",") + std::to_string(id);
        std::cout << fmt::format("tools: [{}]{}\n", ids, r.retrieval_failed ? " (retrieval reply unparsable)" : "");
    }
    for (const auto& a : r.attempts) {
        std::cout << fmt::format("attempt {}\n", a.index);
        if (!a.extraction_error.empty()) {
            std::cout << "  extraction: " << a.extraction_error << "\n";
            continue;
        }
        if (a.outcome)
            for (const auto& s : a.outcome->stages)
                std::cout << fmt::format("  {:<12} {}\n", to_string(s.stage), s.passed ? "PASS" : "FAIL");
    }
    if (!r.transport_error.empty()) std::cout << "transport error: " << r.transport_error << "\n";
    std::cout << fmt::format("task {}: {} after {} attempt(s)\n", r.task_id, r.success ? "PASS" : "FAIL",
                             r.attempts.size());
}

// ---- subcommands ----

struct SimulateArgs {
    std::string netlist;
    std::string analysis = "op";
    std::string source;
    double start = 0.0, stop = 5.0, step = 0.1;
    double freq = 100.0;
    std::vector<std::string> excite;
    double tstep = 1e-6, tstop = 1e-3;
    std::string nodes;
    std::string csv;
};

int run_simulate(const SimulateArgs& a, const RunConfig& cfg) {
    const auto circuit = flatten(parse_netlist(read_file(a.netlist)));
    const bool jl = cfg.output == OutputFormat::JsonLines;
    std::vector<std::string> nodes = split_list(a.nodes);
    if (nodes.empty())
        for (const auto& n : circuit.nodes())
            if (node_key(n) != kGround) nodes.push_back(n);

    if (a.analysis == "op") {
        const auto op = solve_op(circuit);
        if (jl) {
            json v = json::object(), d = json::array();
            for (const auto& n : nodes) v[n] = finite_or_string(op.voltage(n));
            for (const auto& s : op.devices)
                d.push_back({{"name", s.name}, {"region", std::string(to_string(s.region))}, {"id", s.id},
                             {"vgs", s.vgs}, {"vds", s.vds}, {"gm", s.gm}, {"gds", s.gds}});
            emit({{"kind", "op"}, {"converged", op.converged}, {"iterations", op.iterations}, {"node_voltages", v},
                  {"devices", d}});
        } else {
            std::cout << fmt::format("{:<16} {:>14}\n", "node", "voltage_V");
            for (const auto& n : nodes) std::cout << fmt::format("{:<16} {:>14.6g}\n", n, op.voltage(n));
            if (!op.devices.empty()) {
                std::cout << fmt::format("\n{:<16} {:<11} {:>12} {:>10} {:>10}\n", "device", "region", "id_A", "vgs_V",
                                         "vds_V");
                for (const auto& s : op.devices)
                    std::cout << fmt::format("{:<16} {:<11} {:>12.4e} {:>10.4f} {:>10.4f}\n", s.name,
                                             to_string(s.region), s.id, s.vgs, s.vds);
            }
        }
        return kExitOk;
    }
    if (a.analysis == "dc") {
        if (a.source.empty()) throw ConfigError("dc analysis needs --source");
        const auto sweep = dc_sweep(circuit, a.source, a.start, a.stop, a.step);
        if (!jl) {
            std::string head = fmt::format("{:>12}", a.source);
            for (const auto& n : nodes) head += fmt::format(" {:>14}", n);
            std::cout << head << "\n";
        }
        for (const auto& p : sweep.points) {
            if (jl) {
                json v = json::object();
                for (const auto& n : nodes) v[n] = p.op.converged ? finite_or_string(p.op.voltage(n)) : json();
                emit({{"kind", "dc_point"}, {"source", a.source}, {"input", p.input}, {"converged", p.op.converged},
                      {"node_voltages", v}});
            } else {
                std::string line = fmt::format("{:>12.6g}", p.input);
                for (const auto& n : nodes)
                    line += p.op.converged ? fmt::format(" {:>14.6g}", p.op.voltage(n)) : fmt::format(" {:>14}", "-");
                std::cout << line << "\n";
            }
        }
        return kExitOk;
    }
    if (a.analysis == "ac") {
        std::map<std::string, std::complex<double>> excitation;
        for (const auto& e : a.excite) {
            const auto eq = e.find('=');
            excitation[e.substr(0, eq)] = eq == std::string::npos ? 1.0 : std::stod(e.substr(eq + 1));
        }
        if (excitation.empty()) throw ConfigError("ac analysis needs at least one --excite SOURCE[=amplitude]");
        const auto res = ac_solve(circuit, excitation, a.freq);
        if (!jl) std::cout << fmt::format("{:<16} {:>14} {:>12}\n", "node", "magnitude", "phase_deg");
        for (const auto& n : nodes) {
            const auto ph = res.phasor(n);
            const double deg = std::arg(ph) * 180.0 / M_PI;
            if (jl)
                emit({{"kind", "ac"}, {"frequency_hz", a.freq}, {"node", n}, {"magnitude", std::abs(ph)},
                      {"phase_deg", deg}});
            else
                std::cout << fmt::format("{:<16} {:>14.6g} {:>12.4f}\n", n, std::abs(ph), deg);
        }
        return kExitOk;
    }
    if (a.analysis == "tran") {
        const auto wave = transient(circuit, a.tstep, a.tstop);
        if (!a.csv.empty()) {
            std::ofstream out(a.csv);
            if (!out) throw ConfigError("cannot write '" + a.csv + "'");
            out << waveform_csv(wave, nodes);
        }
        if (jl) {
            json fin = json::object();
            for (const auto& n : nodes) fin[n] = wave.signal(n).empty() ? json() : finite_or_string(wave.signal(n).back());
            emit({{"kind", "tran"}, {"points", wave.time_s.size()}, {"truncated", wave.truncated},
                  {"diagnostic", wave.diagnostic}, {"final_voltages", fin}, {"csv", a.csv}});
        } else {
            std::cout << fmt::format("{} time points{}\n", wave.time_s.size(), wave.truncated ? " (truncated)" : "");
            if (wave.truncated) std::cout << wave.diagnostic << "\n";
            if (a.csv.empty()) std::cout << waveform_csv(wave, nodes);
            else std::cout << "waveform written to " << a.csv << "\n";
        }
        return kExitOk;
    }
    throw ConfigError("unknown analysis '" + a.analysis + "' (op, dc, ac, tran)");
}

int run_check(const std::string& netlist, int task_id, const RunConfig& cfg) {
    const auto& task = task_by_id(task_id);
    auto opts = check_options(cfg);
    const auto outcome = verify_netlist(read_file(netlist), task, opts);
    if (cfg.output == OutputFormat::JsonLines) {
        auto rec = json::parse(outcome_to_json(outcome));
        rec["kind"] = "check";
        rec["netlist"] = netlist;
        emit(rec);
    } else {
        print_outcome(outcome);
    }
    return outcome.final_pass ? kExitOk : kExitFail;
}

int run_design(int task_id, const RunConfig& cfg) {
    const auto& task = task_by_id(task_id);
    auto lib = open_library(cfg);
    auto gen = make_generator(cfg, cfg.script_path);
    DesignOptions opts;
    opts.check = check_options(cfg);
    const auto rec = run_design_loop(task, *gen, lib, opts);
    if (cfg.output == OutputFormat::JsonLines) emit({{"kind", "trial"}, {"record", json::parse(to_json_line(rec))}});
    else print_trial(rec);
    return rec.success ? kExitOk : kExitFail;
}

struct BenchArgs {
    std::string tasks = "all";
    int n = 5;
    std::string k = "1,5";
    std::string script_dir;
    std::string ledger;
    std::string csv;
    bool freeze_library = false;
};

// Replay scripts for bench: <dir>/task<ID>_trial<T>.txt, else <dir>/task<ID>.txt.
std::string bench_script(const std::string& dir, int task, int trial) {
    namespace fs = std::filesystem;
    const auto specific = fs::path(dir) / fmt::format("task{}_trial{}.txt", task, trial);
    if (fs::exists(specific)) return specific.string();
    const auto shared = fs::path(dir) / fmt::format("task{}.txt", task);
    if (fs::exists(shared)) return shared.string();
    throw ConfigError(fmt::format("no replay script for task {} trial {} in '{}'", task, trial, dir));
}

int run_bench(const BenchArgs& a, const RunConfig& cfg) {
    std::vector<TaskSpec> tasks;
    if (a.tasks == "all") tasks = builtin_tasks();
    else
        for (const auto& id : split_list(a.tasks)) tasks.push_back(task_by_id(parse_int("--tasks", id)));
    if (tasks.empty()) throw ConfigError("--tasks selects no task");

    BenchOptions opts;
    opts.concurrency = cfg.concurrency;
    opts.ks.clear();
    for (const auto& k : split_list(a.k)) opts.ks.push_back(parse_int("--k", k));
    opts.ledger_path = a.ledger;
    opts.freeze_library = a.freeze_library;
    opts.library = open_library(cfg);
    opts.design.check = check_options(cfg);

    GeneratorFactory factory;
    if (cfg.generator == "remote") {
        RunConfig c = cfg;
        require_api_key(c, process_environment());
        factory = [c](const TaskSpec&, int) { return std::make_unique<RemoteGenerator>(c.remote); };
    } else {
        if (a.script_dir.empty() && cfg.script_path.empty())
            throw ConfigError("the replay generator needs --script-dir or --script");
        const auto dir = a.script_dir;
        const auto single = cfg.script_path;
        factory = [dir, single](const TaskSpec& t, int trial) -> std::unique_ptr<Generator> {
            return std::make_unique<ReplayGenerator>(load_replay_script(dir.empty() ? single : bench_script(dir, t.id, trial)));
        };
    }
    const bool jl = cfg.output == OutputFormat::JsonLines;
    if (jl) {
        opts.on_record = [](int task, int trial, const TrialRecord& r) {
            emit({{"kind", "bench_trial"}, {"task_id", task}, {"trial", trial}, {"success", r.success},
                  {"attempts", r.attempts.size()}, {"transport_error", r.transport_error}});
        };
    }

    const auto result = run_benchmark(tasks, factory, a.n, opts);
    if (!a.csv.empty()) {
        std::ofstream out(a.csv);
        if (!out) throw ConfigError("cannot write '" + a.csv + "'");
        out << render_leaderboard_csv(result.report);
    }
    if (jl) {
        for (const auto& [id, s] : result.report.per_task) {
            json pass = json::object();
            for (const auto& [k, v] : s.pass_at) pass[std::to_string(k)] = v;
            emit({{"kind", "bench_task"}, {"task_id", id}, {"n", s.n}, {"c", s.c}, {"pass_at", pass},
                  {"wilson90", {s.wilson_90.first, s.wilson_90.second}}});
        }
        json avg = json::object();
        for (const auto& [k, v] : result.report.avg_pass_at) avg[std::to_string(k)] = v;
        emit({{"kind", "bench_summary"}, {"n_per_task", result.report.n_per_task}, {"avg_pass_at", avg},
              {"num_solved", result.report.num_solved}});
    } else {
        std::cout << render_leaderboard(result.report);
    }
    return kExitOk;
}

int run_library_list(const RunConfig& cfg) {
    const auto lib = open_library(cfg);
    if (cfg.output == OutputFormat::JsonLines) {
        for (const auto& [id, e] : lib.entries)
            emit({{"kind", "library_entry"}, {"task_id", id}, {"name", e.subckt.name},
                  {"circuit_type", e.circuit_type},
                  {"gain_db", e.gain_db ? finite_or_string(*e.gain_db) : json()},
                  {"common_mode_gain_db", e.common_mode_gain_db ? finite_or_string(*e.common_mode_gain_db) : json()},
                  {"ports", e.ports}, {"phase_relation", e.phase_relation}});
    } else if (lib.entries.empty()) {
        std::cout << "library is empty\n";
    } else {
        std::cout << render_library_table(lib);
    }
    return kExitOk;
}

int run_library_export(int id, const RunConfig& cfg) {
    const auto lib = open_library(cfg);
    auto it = lib.entries.find(id);
    if (it == lib.entries.end()) throw ConfigError(fmt::format("library has no entry for task {}", id));
    if (cfg.output == OutputFormat::JsonLines)
        emit({{"kind", "library_export"}, {"task_id", id}, {"text", export_tool(it->second)}});
    else
        std::cout << export_tool(it->second);
    return kExitOk;
}

int run_library_add(const std::string& netlist, int task_id, const RunConfig& cfg) {
    if (cfg.library_path.empty()) throw ConfigError("library add needs --library or ANAFLOW_LIBRARY");
    const auto& task = task_by_id(task_id);
    if (task.composite) throw ConfigError(fmt::format("task {} is composite; only basic designs are archived", task_id));
    const auto lib = open_library(cfg);
    const auto text = read_file(netlist);
    const auto outcome = verify_netlist(text, task, check_options(cfg));
    bool changed = false;
    if (outcome.final_pass) {
        const auto before = lib.entries.count(task_id) ? std::optional(lib.entries.at(task_id)) : std::nullopt;
        const auto after = archive_design(lib, task, parse_netlist(text), outcome);
        changed = !before || !before->same_as(after.entries.at(task_id));
    }
    if (cfg.output == OutputFormat::JsonLines) {
        emit({{"kind", "library_add"}, {"task_id", task_id}, {"verified", outcome.final_pass}, {"archived", changed}});
    } else {
        if (!outcome.final_pass) print_outcome(outcome);
        else std::cout << (changed ? fmt::format("archived as {}\n", tool_name(task_id))
                                   : fmt::format("kept the existing {} entry\n", tool_name(task_id)));
    }
    return outcome.final_pass ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anaflow: analog circuit simulation, verification and design-loop benchmarking"};
    app.require_subcommand(1);
    Globals g;
    auto* o_vdd = app.add_option("--vdd", g.vdd, "supply voltage in V (default 5.0)");
    auto* o_lib = app.add_option("--library", g.library, "tool library file");
    auto* o_out = app.add_option("--output", g.output, "text or json-lines");
    auto* o_conc = app.add_option("--concurrency", g.concurrency, "parallel trials for bench");
    auto* o_gen = app.add_option("--generator", g.generator, "remote or replay");
    auto* o_script = app.add_option("--script", g.script, "replay script file");
    auto* o_inv = app.add_flag("--inverter-standard", g.inverter_standard,
                               "check inverters as high at Vin=0 and low at Vin=Vdd");
    app.add_option("--config", g.config_path, "key=value configuration file");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "run op, dc, ac or tran on a netlist");
    c_sim->add_option("netlist", sim.netlist, "netlist file")->required();
    c_sim->add_option("--analysis", sim.analysis, "op, dc, ac or tran")->capture_default_str();
    c_sim->add_option("--source", sim.source, "dc: swept source");
    c_sim->add_option("--start", sim.start, "dc: first value")->capture_default_str();
    c_sim->add_option("--stop", sim.stop, "dc: last value")->capture_default_str();
    c_sim->add_option("--step", sim.step, "dc: increment")->capture_default_str();
    c_sim->add_option("--freq", sim.freq, "ac: frequency in Hz")->capture_default_str();
    c_sim->add_option("--excite", sim.excite, "ac: SOURCE[=amplitude], repeatable");
    c_sim->add_option("--tstep", sim.tstep, "tran: time step in s")->capture_default_str();
    c_sim->add_option("--tstop", sim.tstop, "tran: stop time in s")->capture_default_str();
    c_sim->add_option("--nodes", sim.nodes, "comma-separated nodes to report (default all)");
    c_sim->add_option("--csv", sim.csv, "tran: write the waveform CSV here");

    std::string check_netlist;
    int check_task = 0;
    auto* c_check = app.add_subcommand("check", "verify a netlist against a task");
    c_check->add_option("netlist", check_netlist, "netlist file")->required();
    c_check->add_option("--task", check_task, "task id 1-24")->required();

    int design_task = 0;
    auto* c_design = app.add_subcommand("design", "run the generate-verify-feedback loop for one task");
    c_design->add_option("--task", design_task, "task id 1-24")->required();

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "run n trials per task and report Pass@k");
    c_bench->add_option("--tasks", bench.tasks, "all or comma-separated ids")->capture_default_str();
    c_bench->add_option("--n", bench.n, "trials per task")->capture_default_str();
    c_bench->add_option("--k", bench.k, "comma-separated k values")->capture_default_str();
    c_bench->add_option("--script-dir", bench.script_dir, "replay scripts task<ID>[_trial<T>].txt");
    c_bench->add_option("--ledger", bench.ledger, "resumable trial ledger");
    c_bench->add_option("--csv", bench.csv, "write the leaderboard CSV here");
    c_bench->add_flag("--freeze-library", bench.freeze_library, "do not archive basic successes");

    auto* c_lib = app.add_subcommand("library", "inspect or extend the tool library");
    c_lib->require_subcommand(1);
    auto* c_list = c_lib->add_subcommand("list", "print the library table");
    int export_id = 0;
    auto* c_export = c_lib->add_subcommand("export", "print one entry as an includable file");
    c_export->add_option("id", export_id, "task id")->required();
    std::string add_netlist;
    int add_task = 0;
    auto* c_add = c_lib->add_subcommand("add", "verify a netlist and archive it");
    c_add->add_option("netlist", add_netlist, "netlist file")->required();
    c_add->add_option("--task", add_task, "task id 1-24")->required();

    for (auto* sub : {c_sim, c_check, c_design, c_bench, c_lib, c_list, c_export, c_add}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (o_vdd->count()) g.flags["vdd"] = g.vdd;
        if (o_lib->count()) g.flags["library"] = g.library;
        if (o_out->count()) g.flags["output"] = g.output;
        if (o_conc->count()) g.flags["concurrency"] = g.concurrency;
        if (o_gen->count()) g.flags["generator"] = g.generator;
        if (o_script->count()) g.flags["script"] = g.script;
        if (o_inv->count()) g.flags["inverter_standard"] = "true";
        const Settings file = g.config_path.empty() ? Settings{} : read_config_file(g.config_path);
        const RunConfig cfg = load_config(file, process_environment(), g.flags);

        if (*c_sim) return run_simulate(sim, cfg);
        if (*c_check) return run_check(check_netlist, check_task, cfg);
        if (*c_design) return run_design(design_task, cfg);
        if (*c_bench) return run_bench(bench, cfg);
        if (*c_list) return run_library_list(cfg);
        if (*c_export) return run_library_export(export_id, cfg);
        if (*c_add) return run_library_add(add_netlist, add_task, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        // a netlist given to simulate that does not parse
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFail;
    }
    return kExitUsage;
}
