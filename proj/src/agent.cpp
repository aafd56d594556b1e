#include "anaflow/agent.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "anaflow/errors.hpp"
#include "anaflow/prompts.hpp"

namespace anaflow {

using nlohmann::json;

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string first_token(const std::string& line) {
    std::istringstream in(line);
    std::string tok;
    in >> tok;
    return tok;
}

// Element card shape: a name, at least two node tokens and a digit somewhere
// (names, values or ground), which rules out most prose.
bool is_element(const std::string& line) {
    static const std::regex element(R"(^\s*[RrCcVvIiMmXx]\w*(\s+[^\s=]+){2,}.*$)");
    return std::regex_match(line, element) && std::any_of(line.begin(), line.end(), ::isdigit);
}

bool card_like(const std::string& line) {
    static const std::regex directive(R"(^\s*\.(model|subckt|ends|end|include|param)\b.*$)", std::regex::icase);
    return is_element(line) || std::regex_match(line, directive);
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string input_text(const TaskSpec& task) {
    return task.input_nodes.empty() ? "None" : join_names(task.input_nodes);
}

long conversation_chars(const Conversation& c) {
    long n = 0;
    for (const auto& m : c) n += static_cast<long>(m.content.size());
    return n;
}

}  // namespace

Conversation build_basic_prompt(const TaskSpec& task) {
    const auto user = fill_template(basic_template(), {{"TASK", task.description},
                                                       {"INPUT", input_text(task)},
                                                       {"OUTPUT", join_names(task.output_nodes)}});
    return {{"system", std::string(system_prompt())}, {"user", user}};
}

Conversation build_composite_prompt(const TaskSpec& task, const std::vector<ToolEntry>& tools) {
    std::string info = "No subcircuits are available for this task.";
    std::string call = "None.";
    if (!tools.empty()) {
        info = render_entry_table(tools);
        if (!info.empty() && info.back() == '\n') info.pop_back();
        call = render_call_code(tools);
    }
    auto note = render_note_info(tools, task);
    if (note.empty()) note = "None.";
    const auto user = fill_template(composite_template(), {{"TASK", task.description},
                                                           {"INPUT", input_text(task)},
                                                           {"OUTPUT", join_names(task.output_nodes)},
                                                           {"SUBCIRCUITS_INFO", info},
                                                           {"NOTE_INFO", note},
                                                           {"CALL_INFO", call}});
    return {{"system", std::string(system_prompt())}, {"user", user}};
}

Conversation build_feedback_prompt(const Attempt& prior, const StageReport& report) {
    Conversation c = prior.prompt_messages;
    c.push_back({"assistant", prior.raw_reply});
    std::string msg = fmt::format("Your design failed the {} check with the following feedback:\n\n{}\n\n",
                                  to_string(report.stage), report.feedback);
    msg += "Please fix the problems above and give the complete corrected NgSpice netlist in one code block.";
    c.push_back({"user", std::move(msg)});
    return c;
}

std::string normalize_netlist(std::string_view text) {
    static const std::vector<std::pair<std::string, std::string>> units = {
        {"kOhm", "k"}, {"kohm", "k"}, {"MOhm", "meg"}, {"Ohm", ""},  {"ohm", ""},  {"kHz", "k"}, {"MHz", "meg"},
        {"GHz", "g"},  {"Hz", ""},    {"mV", "m"},     {"uV", "u"},  {"kV", "k"},  {"V", ""},   {"mA", "m"},
        {"uA", "u"},   {"nA", "n"},   {"pA", "p"},     {"A", ""},    {"uF", "u"},  {"nF", "n"}, {"pF", "p"},
        {"fF", "f"},   {"mF", "m"},   {"F", ""},       {"ms", "m"},  {"us", "u"},  {"ns", "n"}, {"ps", "p"},
        {"s", ""},     {"um", "u"},   {"nm", "n"},     {"mm", "m"},  {"m", ""},
    };
    static const std::regex unit_re(R"(\s*@\s*u_(\w+))");
    static const std::vector<std::string> dropped = {".op", ".tran", ".ac", ".dc", ".print", ".plot", ".probe",
                                                     ".save", ".options", ".option", ".meas", ".measure",
                                                     ".temp", ".ic", ".nodeset", ".global"};
    std::vector<std::string> out;
    bool in_control = false;
    for (auto line : split_lines(text)) {
        const auto head = lower(first_token(line));
        if (head == ".control") {
            in_control = true;
            continue;
        }
        if (in_control) {
            if (head == ".endc") in_control = false;
            continue;
        }
        if (std::find(dropped.begin(), dropped.end(), head) != dropped.end()) continue;

        std::string fixed;
        auto begin = std::sregex_iterator(line.begin(), line.end(), unit_re);
        std::size_t last = 0;
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            fixed.append(line, last, it->position() - last);
            const auto unit = (*it)[1].str();
            auto u = std::find_if(units.begin(), units.end(), [&](const auto& p) { return p.first == unit; });
            fixed += u != units.end() ? u->second : it->str();
            last = it->position() + it->length();
        }
        fixed.append(line, last);
        for (std::size_t pos; (pos = fixed.find("circuit.gnd")) != std::string::npos;) fixed.replace(pos, 11, "0");
        out.push_back(std::move(fixed));
    }
    return join_lines(out);
}

std::string extract_netlist(std::string_view reply) {
    const auto lines = split_lines(reply);
    // Last fenced block; an unterminated final fence runs to the end.
    auto fence = [](const std::string& l) {
        const auto t = l.find_first_not_of(" \t");
        return t != std::string::npos && l.compare(t, 3, "```") == 0;
    };
    std::optional<std::vector<std::string>> block;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!fence(lines[i])) continue;
        std::vector<std::string> body;
        std::size_t j = i + 1;
        while (j < lines.size() && !fence(lines[j])) body.push_back(lines[j++]);
        block = std::move(body);
        i = j;
    }
    if (block) {
        const auto text = normalize_netlist(join_lines(*block));
        if (text.find_first_not_of(" \t\r\n") != std::string::npos) return text;
    }

    std::vector<std::string> best, cur;
    auto close_run = [&] {
        const bool has_element = std::any_of(cur.begin(), cur.end(), is_element);
        if (has_element && cur.size() > best.size()) best = cur;
        cur.clear();
    };
    for (const auto& l : lines) {
        const auto t = l.find_first_not_of(" \t");
        const bool comment = t != std::string::npos && l[t] == '*';
        if (card_like(l) || comment) {
            cur.push_back(l);
        } else {
            close_run();
        }
    }
    close_run();
    if (best.empty()) throw ParseError(std::string(kNoCodeBlock));
    return normalize_netlist(join_lines(best));
}

std::string splice_tools(std::string_view netlist, const ToolLibrary& lib, const std::vector<ToolEntry>& tools) {
    static const std::regex include_re(R"(^\s*\.include\s+["']?p(\d+)_lib\.sp["']?\s*$)", std::regex::icase);
    std::vector<const ToolEntry*> needed;
    auto want = [&](const ToolEntry* e) {
        const auto key = name_key(e->subckt.name);
        if (std::none_of(needed.begin(), needed.end(), [&](const ToolEntry* n) { return name_key(n->subckt.name) == key; }))
            needed.push_back(e);
    };
    for (const auto& t : tools) want(&t);
    std::vector<std::string> kept;
    for (const auto& line : split_lines(netlist)) {
        std::smatch m;
        if (std::regex_match(line, m, include_re)) {
            auto it = lib.entries.find(std::stoi(m[1].str()));
            if (it != lib.entries.end()) want(&it->second);
            continue;
        }
        kept.push_back(line);
    }
    const auto body = join_lines(kept);
    const auto body_lower = lower(body);
    std::string defs;
    for (const auto* e : needed) {
        if (body_lower.find(".subckt " + lower(e->subckt.name)) != std::string::npos) continue;
        defs += serialize(e->subckt);
    }
    if (defs.empty()) return body;
    // Keep a leading comment block first so it still reads as the title.
    std::size_t split = 0;
    while (split < kept.size() && !kept[split].empty() && kept[split].find_first_not_of(" \t") != std::string::npos &&
           kept[split][kept[split].find_first_not_of(" \t")] == '*')
        ++split;
    std::vector<std::string> head(kept.begin(), kept.begin() + split);
    std::vector<std::string> tail(kept.begin() + split, kept.end());
    return join_lines(head) + defs + join_lines(tail);
}

TrialRecord run_design_trial(const TaskSpec& task, Generator& generator, const ToolLibrary& lib,
                             const DesignOptions& options) {
    TrialRecord rec;
    rec.task_id = task.id;
    long chars = 0;
    std::vector<ToolEntry> tools;
    Conversation messages;
    try {
        if (task.composite) {
            if (!lib.entries.empty()) {
                const auto sel = select_tools(lib, task, generator);
                chars += static_cast<long>(sel.prompt.size() + system_prompt().size() + sel.reply.size());
                rec.selected_tools = sel.ids;
                rec.dropped_tools = sel.dropped_ids;
                rec.retrieval_failed = sel.retrieval_failed;
                for (int id : sel.ids) tools.push_back(lib.entries.at(id));
            }
            messages = build_composite_prompt(task, tools);
        } else {
            messages = build_basic_prompt(task);
        }

        CheckOptions check = options.check;
        check.library_active = task.composite && !tools.empty();
        const int cap = task.composite ? kCompositeGenerationCap : kBasicGenerationCap;
        for (int i = 1; i <= cap; ++i) {
            Attempt a;
            a.index = i;
            a.prompt_messages = messages;
            a.raw_reply = generator.send(messages);
            chars += conversation_chars(messages) + static_cast<long>(a.raw_reply.size());

            StageReport failure;
            try {
                auto text = extract_netlist(a.raw_reply);
                if (task.composite) text = splice_tools(text, lib, tools);
                a.extracted_netlist = text;
                a.outcome = verify_netlist(text, task, check);
                if (const auto* f = a.outcome->first_failure()) failure = *f;
            } catch (const ParseError& e) {
                a.extraction_error = e.what();
                failure.stage = Stage::Requirement;
                failure.feedback = e.what();
            }
            rec.success = a.outcome && a.outcome->final_pass;
            rec.attempts.push_back(std::move(a));
            if (rec.success || i == cap) break;
            messages = build_feedback_prompt(rec.attempts.back(), failure);
        }
    } catch (const TransportError& e) {
        rec.transport_error = e.what();
        rec.success = false;
    }
    rec.tokens_estimate = chars / 4;
    return rec;
}

bool archive_trial(ToolLibrary& lib, const TaskSpec& task, const TrialRecord& record) {
    if (task.composite || !record.success || record.attempts.empty()) return false;
    const auto& last = record.attempts.back();
    if (!last.extracted_netlist || !last.outcome) return false;
    auto updated = archive_design(lib, task, parse_netlist(*last.extracted_netlist), *last.outcome);
    const bool changed = !updated.same_as(lib);
    lib = std::move(updated);
    return changed;
}

TrialRecord run_design_loop(const TaskSpec& task, Generator& generator, ToolLibrary& lib,
                            const DesignOptions& options) {
    auto rec = run_design_trial(task, generator, lib, options);
    if (!options.freeze_library) archive_trial(lib, task, rec);
    return rec;
}

// ---- records ----

namespace {

json measurements_json(const std::map<std::string, double>& m) {
    json out = json::object();
    for (const auto& [k, v] : m) {
        if (std::isfinite(v)) out[k] = v;
        else out[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    return out;
}

std::map<std::string, double> measurements_from(const json& j) {
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) {
        if (v.is_number()) out[k] = v.get<double>();
        else out[k] = std::stod(v.get<std::string>());
    }
    return out;
}

Stage stage_from(const std::string& s) {
    for (auto st : {Stage::Requirement, Stage::OpCheck, Stage::DcSweep, Stage::Function})
        if (to_string(st) == s) return st;
    throw ParseError("unknown stage '" + s + "'");
}

json outcome_json(const VerificationOutcome& o) {
    json stages = json::array();
    for (const auto& s : o.stages) {
        stages.push_back({{"stage", std::string(to_string(s.stage))},
                          {"passed", s.passed},
                          {"feedback", s.feedback},
                          {"measurements", measurements_json(s.measurements)}});
    }
    return {{"task_id", o.task_id},
            {"final_pass", o.final_pass},
            {"bias_substitutions", o.bias_substitutions},
            {"stages", stages}};
}

VerificationOutcome outcome_from(const json& j) {
    VerificationOutcome o;
    o.task_id = j.at("task_id");
    o.final_pass = j.at("final_pass");
    o.bias_substitutions = j.at("bias_substitutions").get<std::map<std::string, double>>();
    for (const auto& s : j.at("stages")) {
        StageReport r;
        r.stage = stage_from(s.at("stage"));
        r.passed = s.at("passed");
        r.feedback = s.at("feedback");
        r.measurements = measurements_from(s.at("measurements"));
        o.stages.push_back(std::move(r));
    }
    return o;
}

}  // namespace

std::string outcome_to_json(const VerificationOutcome& outcome) { return outcome_json(outcome).dump(); }

std::string to_json_line(const TrialRecord& r) {
    json attempts = json::array();
    for (const auto& a : r.attempts) {
        json msgs = json::array();
        for (const auto& m : a.prompt_messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
        json ja = {{"index", a.index},
                   {"prompt_messages", msgs},
                   {"raw_reply", a.raw_reply},
                   {"extracted_netlist", a.extracted_netlist ? json(*a.extracted_netlist) : json(nullptr)},
                   {"outcome", a.outcome ? outcome_json(*a.outcome) : json(nullptr)},
                   {"extraction_error", a.extraction_error}};
        attempts.push_back(std::move(ja));
    }
    json j = {{"task_id", r.task_id},
              {"success", r.success},
              {"tokens_estimate", r.tokens_estimate},
              {"transport_error", r.transport_error},
              {"selected_tools", r.selected_tools},
              {"dropped_tools", r.dropped_tools},
              {"retrieval_failed", r.retrieval_failed},
              {"attempts", attempts}};
    return j.dump();
}

TrialRecord trial_from_json_line(std::string_view line) {
    try {
        const auto j = json::parse(line);
        TrialRecord r;
        r.task_id = j.at("task_id");
        r.success = j.at("success");
        r.tokens_estimate = j.at("tokens_estimate");
        r.transport_error = j.at("transport_error");
        r.selected_tools = j.at("selected_tools").get<std::vector<int>>();
        r.dropped_tools = j.at("dropped_tools").get<std::vector<int>>();
        r.retrieval_failed = j.at("retrieval_failed");
        for (const auto& ja : j.at("attempts")) {
            Attempt a;
            a.index = ja.at("index");
            for (const auto& m : ja.at("prompt_messages")) a.prompt_messages.push_back({m.at("role"), m.at("content")});
            a.raw_reply = ja.at("raw_reply");
            if (!ja.at("extracted_netlist").is_null()) a.extracted_netlist = ja.at("extracted_netlist").get<std::string>();
            if (!ja.at("outcome").is_null()) a.outcome = outcome_from(ja.at("outcome"));
            a.extraction_error = ja.at("extraction_error");
            r.attempts.push_back(std::move(a));
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed trial record: ") + e.what());
    }
}

bool TrialRecord::operator==(const TrialRecord& other) const { return to_json_line(*this) == to_json_line(other); }

}  // namespace anaflow
