#include "anaflow/library.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "anaflow/checks.hpp"
#include "anaflow/errors.hpp"
#include "anaflow/prompts.hpp"

namespace anaflow {

namespace {

constexpr std::string_view kLibraryHeader = "# anaflow tool library v1";

bool gain_keyed(std::string_view type) { return type == "Amplifier" || type == "Opamp"; }

const StageReport* function_report(const VerificationOutcome& outcome) {
    for (const auto& s : outcome.stages)
        if (s.stage == Stage::Function) return &s;
    return nullptr;
}

std::optional<double> measured(const StageReport* r, const std::string& key) {
    if (!r) return std::nullopt;
    auto it = r->measurements.find(key);
    if (it == r->measurements.end()) return std::nullopt;
    return it->second;
}

// Task inputs that are circuit nodes; bias inputs are folded into the body
// unless nothing else is left.
std::vector<std::string> signal_inputs(const TaskSpec& task, const Circuit& circuit) {
    std::vector<std::string> nodes, signals;
    for (const auto& in : task.input_nodes) {
        if (!circuit.has_node(in)) continue;
        nodes.push_back(in);
        if (node_key(in).rfind("vbias", 0) != 0) signals.push_back(in);
    }
    return signals.empty() ? nodes : signals;
}

std::string instance_line(const ToolEntry& e, int index) {
    std::string line = "X" + std::to_string(index);
    for (const auto& p : e.ports) line += " " + p;
    return line + " " + e.subckt.name;
}

std::string fmt_gain(const std::optional<double>& g) {
    if (!g) return "NA";
    auto s = fmt::format("{:.2f}", *g);
    return s == "-0.00" ? "0.00" : s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

bool ToolEntry::same_as(const ToolEntry& o) const {
    return task_id == o.task_id && circuit_type == o.circuit_type && gain_db == o.gain_db &&
           common_mode_gain_db == o.common_mode_gain_db && num_inputs == o.num_inputs &&
           num_outputs == o.num_outputs && phase_relation == o.phase_relation && ports == o.ports &&
           call_snippet == o.call_snippet && subckt.same_as(o.subckt);
}

bool ToolLibrary::same_as(const ToolLibrary& o) const {
    if (entries.size() != o.entries.size()) return false;
    for (const auto& [id, e] : entries) {
        auto it = o.entries.find(id);
        if (it == o.entries.end() || !e.same_as(it->second)) return false;
    }
    return true;
}

std::string tool_name(int task_id) {
    static const std::map<int, std::string> names = {
        {1, "CommonSourceAmp"},   {2, "ThreeStageAmp"},      {3, "SourceFollower"},
        {4, "CommonGateAmp"},     {5, "CascodeAmp"},         {6, "NmosInverter"},
        {7, "CmosInverter"},      {8, "CurrentSource"},      {9, "DiodeLoadAmp"},
        {10, "TwoStageAmp"},      {11, "SingleStageOpamp"},  {12, "CascodeCurrentMirror"},
        {13, "ResistiveLoadOpamp"}, {14, "TwoStageOpamp"},   {15, "TelescopicOpamp"},
    };
    auto it = names.find(task_id);
    return it != names.end() ? it->second : "Tool" + std::to_string(task_id);
}

std::string include_file_name(int task_id) { return "p" + std::to_string(task_id) + "_lib.sp"; }

ToolEntry make_tool_entry(const TaskSpec& task, const Circuit& circuit, const VerificationOutcome& outcome) {
    if (task.composite) throw ConfigError("task " + std::to_string(task.id) + " is composite; only basic circuits are archived");
    if (!outcome.final_pass) throw ConfigError("only verified designs are archived");

    const Circuit flat = flatten(circuit);
    ToolEntry e;
    e.task_id = task.id;
    e.circuit_type = std::string(to_string(task.circuit_type));

    const auto inputs = signal_inputs(task, flat);
    const auto output = observed_output(flat, task);
    e.ports = inputs;
    e.ports.push_back(output);
    e.num_inputs = static_cast<int>(inputs.size());
    e.num_outputs = 1;

    const auto* fn = function_report(outcome);
    if (gain_keyed(e.circuit_type)) {
        e.gain_db = measured(fn, "gain_db");
        if (task.circuit_type == CircuitType::Opamp) e.common_mode_gain_db = measured(fn, "common_mode_gain_db");
        if (auto phase = measured(fn, "phase_deg")) {
            const bool inverting = std::cos(*phase * M_PI / 180.0) < 0.0;
            if (task.circuit_type == CircuitType::Opamp) {
                e.phase_relation = inverting ? "inverting, non-inverting" : "non-inverting, inverting";
            } else {
                e.phase_relation = inverting ? "inverting" : "non-inverting";
            }
        }
    }

    e.subckt.name = tool_name(task.id);
    e.subckt.ports = e.ports;
    e.subckt.models = flat.models;
    std::vector<std::string> stripped;
    for (const auto& in : inputs) {
        if (auto src = driving_source(flat, in)) {
            const auto* el = flat.find_element(*src);
            if (el && el->kind == ElementKind::VoltageSource &&
                (node_key(el->nodes[0]) == kGround || node_key(el->nodes[1]) == kGround))
                stripped.push_back(name_key(*src));
        }
    }
    for (const auto& el : flat.elements) {
        if (std::find(stripped.begin(), stripped.end(), name_key(el.name)) == stripped.end())
            e.subckt.elements.push_back(el);
    }
    e.call_snippet = instance_line(e, 1);
    return e;
}

ToolLibrary archive_design(const ToolLibrary& lib, const TaskSpec& task, const Circuit& circuit,
                           const VerificationOutcome& outcome) {
    auto entry = make_tool_entry(task, circuit, outcome);
    ToolLibrary out = lib;
    auto it = out.entries.find(task.id);
    bool store = it == out.entries.end();
    if (!store && gain_keyed(entry.circuit_type)) {
        const double old_gain = it->second.gain_db.value_or(-INFINITY);
        store = entry.gain_db.value_or(-INFINITY) > old_gain;
    }
    if (!store) return out;
    out.entries.insert_or_assign(task.id, std::move(entry));
    if (!out.persistence_path.empty()) save_library(out, out.persistence_path);
    return out;
}

std::string render_entry_table(const std::vector<ToolEntry>& entries) {
    std::string out =
        "| Id | Circuit Type | Gain/Differential-mode gain | Common-mode gain | Input | Output |\n"
        "|----|--------------|-----------------------------|------------------|-------|--------|\n";
    for (const auto& e : entries) {
        const std::vector<std::string> ins(e.ports.begin(), e.ports.begin() + e.num_inputs);
        const std::vector<std::string> outs(e.ports.begin() + e.num_inputs, e.ports.end());
        out += fmt::format("| {} | {} | {} | {} | {} | {} |\n", e.task_id, e.circuit_type, fmt_gain(e.gain_db),
                           fmt_gain(e.common_mode_gain_db), ins.empty() ? "NA" : join_names(ins), join_names(outs));
    }
    return out;
}

std::string render_library_table(const ToolLibrary& lib) {
    std::vector<ToolEntry> entries;
    for (const auto& [id, e] : lib.entries) entries.push_back(e);
    return render_entry_table(entries);
}

std::optional<std::vector<int>> parse_tool_list(std::string_view reply) {
    static const std::regex list_re(R"(\[\s*((?:\d+\s*,\s*)*\d+)?\s*,?\s*\])");
    static const std::regex int_re(R"(\d+)");
    const std::string text(reply);
    std::optional<std::vector<int>> last;
    for (std::sregex_iterator it(text.begin(), text.end(), list_re), end; it != end; ++it) {
        std::vector<int> ids;
        const std::string body = (*it)[1].str();
        for (std::sregex_iterator n(body.begin(), body.end(), int_re); n != end; ++n) ids.push_back(std::stoi(n->str()));
        last = std::move(ids);
    }
    return last;
}

ToolSelection select_tools(const ToolLibrary& lib, const TaskSpec& task, Generator& generator) {
    if (lib.entries.empty()) throw ConfigError("tool retrieval needs a non-empty library");
    ToolSelection sel;
    sel.prompt = fill_template(retrieval_template(),
                               {{"TABLE", render_library_table(lib)}, {"TASK", task.description}});
    sel.reply = generator.send({{"system", std::string(system_prompt())}, {"user", sel.prompt}});
    const auto ids = parse_tool_list(sel.reply);
    if (!ids) {
        sel.retrieval_failed = true;
        return sel;
    }
    for (int id : *ids) {
        auto& bucket = lib.entries.count(id) ? sel.ids : sel.dropped_ids;
        if (std::find(bucket.begin(), bucket.end(), id) == bucket.end()) bucket.push_back(id);
    }
    return sel;
}

std::string render_call_code(const std::vector<ToolEntry>& entries) {
    std::string out = "```\n";
    int index = 1;
    for (const auto& e : entries) {
        out += "* declare the subcircuit\n.include " + include_file_name(e.task_id) + "\n";
        out += "* create a subcircuit instance\n" + instance_line(e, index++) + "\n";
    }
    return out + "```";
}

std::string render_note_info(const std::vector<ToolEntry>& entries, const TaskSpec& task) {
    std::vector<std::string> lines;
    for (const auto& e : entries) {
        const auto& name = e.subckt.name;
        if (e.circuit_type == "Opamp" && e.num_inputs >= 2) {
            const bool swapped = e.phase_relation.rfind("inverting", 0) == 0;
            const auto& p = e.ports[0];
            const auto& n = e.ports[1];
            lines.push_back(fmt::format("The {} of {} is the inverting input.", swapped ? p : n, name));
            lines.push_back(fmt::format("The {} of {} is the non-inverting input.", swapped ? n : p, name));
            lines.push_back(fmt::format("The DC operating voltage for {}/{} is 2.5 V.", n, p));
        } else if (e.phase_relation == "inverting" || e.phase_relation == "non-inverting") {
            for (int i = 0; i < e.num_inputs; ++i)
                lines.push_back(fmt::format("The {} of {} is the {} input.", e.ports[i], name, e.phase_relation));
        }
    }
    if (task.circuit_type == CircuitType::Oscillator) {
        lines.push_back(
            "Due to the operational range of the op-amp being 0 to 5V, please connect the nodes that were originally "
            "grounded to a 2.5V DC power source.");
        lines.push_back("Please increase the gain as much as possible to maintain oscillation.");
    }
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += "\n\n";
        out += l;
    }
    return out;
}

std::string render_call_info(const std::vector<ToolEntry>& entries, const TaskSpec& task) {
    if (entries.empty()) throw ConfigError("call info needs at least one tool");
    std::string out = render_call_code(entries);
    const auto note = render_note_info(entries, task);
    if (!note.empty()) out += "\n\nNOTE:\n\n" + note;
    return out;
}

std::string serialize_library(const ToolLibrary& lib) {
    std::string out = std::string(kLibraryHeader) + "\n";
    for (const auto& [id, e] : lib.entries) {
        out += "\n[entry]\n";
        out += fmt::format("task_id = {}\n", e.task_id);
        out += fmt::format("circuit_type = {}\n", e.circuit_type);
        out += "gain_db = " + (e.gain_db ? fmt::format("{:.17g}", *e.gain_db) : std::string("NA")) + "\n";
        out += "common_mode_gain_db = " +
               (e.common_mode_gain_db ? fmt::format("{:.17g}", *e.common_mode_gain_db) : std::string("NA")) + "\n";
        out += fmt::format("num_inputs = {}\nnum_outputs = {}\n", e.num_inputs, e.num_outputs);
        out += fmt::format("phase_relation = {}\n", e.phase_relation);
        out += "ports =";
        for (const auto& p : e.ports) out += " " + p;
        out += "\n" + serialize(e.subckt) + "[end]\n";
    }
    return out;
}

ToolLibrary parse_library(std::string_view text) {
    ToolLibrary lib;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) { throw ParseError(fmt::format("library line {}: {}", line_no, msg)); };
    auto number = [&](const std::string& v) -> std::optional<double> {
        if (v == "NA") return std::nullopt;
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) fail("bad number '" + v + "'");
            return d;
        } catch (const std::logic_error&) {
            fail("bad number '" + v + "'");
        }
        return std::nullopt;
    };
    auto integer = [&](const std::string& v) {
        try {
            std::size_t used = 0;
            const int i = std::stoi(v, &used);
            if (used != v.size()) fail("bad integer '" + v + "'");
            return i;
        } catch (const std::logic_error&) {
            fail("bad integer '" + v + "'");
        }
        return 0;
    };

    std::optional<ToolEntry> cur;
    std::string body;
    int body_start = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (!cur) {
            if (line.empty() || line[0] == '#') continue;
            if (line != "[entry]") fail("expected [entry], got '" + line + "'");
            cur.emplace();
            body.clear();
            body_start = 0;
            continue;
        }
        if (line == "[end]") {
            if (body.empty()) fail("entry has no subcircuit");
            Circuit c;
            try {
                c = parse_netlist("* tool\n" + body);
            } catch (const ParseError& e) {
                fail(fmt::format("subcircuit starting at line {}: {}", body_start, e.what()));
            }
            if (c.subckt_defs.size() != 1 || !c.elements.empty()) fail("entry must hold exactly one subcircuit");
            cur->subckt = c.subckt_defs.begin()->second;
            cur->call_snippet = instance_line(*cur, 1);
            if (static_cast<int>(cur->ports.size()) != cur->num_inputs + cur->num_outputs)
                fail("ports do not match num_inputs + num_outputs");
            if (lib.entries.count(cur->task_id)) fail("duplicate task_id " + std::to_string(cur->task_id));
            lib.entries.emplace(cur->task_id, std::move(*cur));
            cur.reset();
            continue;
        }
        if (!body.empty() || (!line.empty() && line[0] == '.')) {
            if (body.empty()) body_start = line_no;
            body += raw + "\n";
            continue;
        }
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value, got '" + line + "'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "task_id") cur->task_id = integer(value);
        else if (key == "circuit_type") cur->circuit_type = value;
        else if (key == "gain_db") cur->gain_db = number(value);
        else if (key == "common_mode_gain_db") cur->common_mode_gain_db = number(value);
        else if (key == "num_inputs") cur->num_inputs = integer(value);
        else if (key == "num_outputs") cur->num_outputs = integer(value);
        else if (key == "phase_relation") cur->phase_relation = value;
        else if (key == "ports") {
            std::istringstream ps(value);
            cur->ports.clear();
            for (std::string p; ps >> p;) cur->ports.push_back(p);
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (cur) fail("unterminated entry");
    return lib;
}

void save_library(const ToolLibrary& lib, const std::string& path) {
    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write library '" + path + "'");
        out << serialize_library(lib);
        if (!out) throw ConfigError("cannot write library '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot replace library '" + path + "'");
}

ToolLibrary load_library(const std::string& path) {
    std::ifstream in(path);
    ToolLibrary lib;
    if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        lib = parse_library(ss.str());
    }
    lib.persistence_path = path;
    return lib;
}

std::string export_tool(const ToolEntry& entry) {
    return fmt::format("* {} (task {})\n", entry.subckt.name, entry.task_id) + serialize(entry.subckt);
}

}  // namespace anaflow
