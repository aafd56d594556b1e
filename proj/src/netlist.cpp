#include "anaflow/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "anaflow/errors.hpp"
#include "anaflow/units.hpp"

namespace anaflow {

ParseError::ParseError(std::vector<std::string> diagnostics)
    : Error([&] {
          std::string joined;
          for (const auto& d : diagnostics) {
              if (!joined.empty()) joined += '\n';
              joined += d;
          }
          return joined;
      }()),
      diagnostics_(std::move(diagnostics)) {}

ParseError::ParseError(std::string diagnostic)
    : Error(diagnostic), diagnostics_{std::move(diagnostic)} {}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

bool is_ground(std::string_view name) {
    auto k = lower(name);
    return k == "0" || k == "gnd";
}

std::string normalize_node(std::string_view name) {
    return is_ground(name) ? std::string(kGround) : std::string(name);
}

// Splits on whitespace after isolating "(", ")", "," and "=" so that
// "w = 50u", "w=50u" and "SIN(0 1 1k)" all tokenize the same way. Returns
// tokens with "key=value" pairs rejoined.
std::vector<std::string> tokenize(std::string_view line) {
    std::string spaced;
    spaced.reserve(line.size() + 8);
    for (char c : line) {
        if (c == '(' || c == ')' || c == ',') {
            spaced += ' ';
        } else if (c == '=') {
            spaced += " = ";
        } else {
            spaced += c;
        }
    }
    std::istringstream in(spaced);
    std::vector<std::string> raw;
    for (std::string tok; in >> tok;) raw.push_back(tok);

    std::vector<std::string> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == "=" && !out.empty() && i + 1 < raw.size()) {
            out.back() += "=" + raw[i + 1];
            ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

bool is_param(const std::string& tok) { return tok.find('=') != std::string::npos; }

std::pair<std::string, std::string> split_param(const std::string& tok) {
    auto eq = tok.find('=');
    return {lower(tok.substr(0, eq)), tok.substr(eq + 1)};
}

bool looks_numeric(const std::string& tok) {
    if (tok.empty()) return false;
    char c = tok.front();
    if (c == '+' || c == '-' || c == '.') return tok.size() > 1;
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

struct LogicalLine {
    int number = 0;
    std::string text;
};

std::vector<LogicalLine> logical_lines(std::string_view text) {
    std::vector<LogicalLine> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++number;
        std::string line(raw);
        if (auto sc = line.find(';'); sc != std::string::npos) line.erase(sc);
        line = trim(line);
        if (!line.empty() && line.front() == '+' && !lines.empty() && lines.back().text.front() != '*') {
            lines.back().text += " " + line.substr(1);
        } else if (!line.empty()) {
            lines.push_back({number, line});
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return lines;
}

class Parser {
public:
    Circuit run(std::string_view text) {
        auto lines = logical_lines(text);
        bool seen_card = false;
        for (const auto& line : lines) {
            if (line.text.front() == '*') {
                if (!seen_card && circuit_.title.empty()) circuit_.title = trim(line.text.substr(1));
                continue;
            }
            seen_card = true;
            if (lower(line.text) == ".end") {
                ended_ = true;
                break;
            }
            parse_card(line);
        }
        if (current_) {
            errors_.push_back("line " + std::to_string(current_line_) + ": subcircuit '" + current_->name +
                              "' is missing .ends");
        }
        if (!seen_card || (circuit_.elements.empty() && circuit_.subckt_defs.empty() && circuit_.models.empty() &&
                           errors_.empty())) {
            throw ParseError("empty netlist: no element cards found");
        }
        if (errors_.empty()) resolve();
        if (!errors_.empty()) throw ParseError(errors_);
        return std::move(circuit_);
    }

private:
    void fail(const LogicalLine& line, const std::string& message) {
        errors_.push_back("line " + std::to_string(line.number) + ": " + message + ": " + line.text);
    }

    std::vector<Element>& scope_elements() { return current_ ? current_->elements : circuit_.elements; }
    std::map<std::string, DeviceModel>& scope_models() { return current_ ? current_->models : circuit_.models; }

    bool value_ok(const LogicalLine& line, const std::string& tok, double& out) {
        try {
            out = parse_value(tok);
            return true;
        } catch (const ParseError& e) {
            fail(line, e.what());
            return false;
        }
    }

    void parse_card(const LogicalLine& line) {
        auto tokens = tokenize(line.text);
        const char head = static_cast<char>(std::toupper(static_cast<unsigned char>(tokens[0].front())));
        if (head == '.') {
            parse_dot(line, tokens);
            return;
        }
        Element el;
        el.name = tokens[0];
        el.line = line.number;
        bool ok = false;
        switch (head) {
            case 'R': el.kind = ElementKind::Resistor; ok = parse_passive(line, tokens, el); break;
            case 'C': el.kind = ElementKind::Capacitor; ok = parse_passive(line, tokens, el); break;
            case 'V': el.kind = ElementKind::VoltageSource; ok = parse_source(line, tokens, el); break;
            case 'I': el.kind = ElementKind::CurrentSource; ok = parse_source(line, tokens, el); break;
            case 'M': el.kind = ElementKind::Mosfet; ok = parse_mosfet(line, tokens, el); break;
            case 'X': el.kind = ElementKind::Instance; ok = parse_instance(line, tokens, el); break;
            default:
                fail(line, "unknown card type '" + tokens[0] + "' (supported: R, C, V, I, M, X, .model, .subckt, .ends, .end)");
                return;
        }
        if (!ok) return;
        auto& elements = scope_elements();
        const auto key = name_key(el.name);
        for (const auto& existing : elements) {
            if (name_key(existing.name) == key) {
                fail(line, "duplicate element name '" + el.name + "' (first defined on line " +
                               std::to_string(existing.line) + ")");
                return;
            }
        }
        elements.push_back(std::move(el));
    }

    bool parse_passive(const LogicalLine& line, const std::vector<std::string>& t, Element& el) {
        if (t.size() != 4) {
            fail(line, "expected '" + std::string(1, t[0][0]) + "name node1 node2 value'");
            return false;
        }
        el.nodes = {normalize_node(t[1]), normalize_node(t[2])};
        if (!value_ok(line, t[3], el.value)) return false;
        if (el.kind == ElementKind::Resistor && !(el.value > 0.0)) {
            fail(line, "resistor value must be positive");
            return false;
        }
        if (el.kind == ElementKind::Capacitor && el.value < 0.0) {
            fail(line, "capacitor value must not be negative");
            return false;
        }
        return true;
    }

    bool parse_source(const LogicalLine& line, const std::vector<std::string>& t, Element& el) {
        if (t.size() < 4) {
            fail(line, "expected '" + std::string(1, t[0][0]) + "name node+ node- value'");
            return false;
        }
        el.nodes = {normalize_node(t[1]), normalize_node(t[2])};
        bool have_dc = false;
        std::size_t i = 3;
        while (i < t.size()) {
            const auto word = upper(t[i]);
            if (word == "DC") {
                if (i + 1 >= t.size() || !value_ok(line, t[i + 1], el.source.dc_value)) {
                    if (i + 1 >= t.size()) fail(line, "DC keyword without a value");
                    return false;
                }
                have_dc = true;
                i += 2;
            } else if (word == "AC") {
                // Small-signal magnitude/phase are accepted and ignored; AC
                // stimulus is chosen by the analysis, not the netlist.
                ++i;
                while (i < t.size() && looks_numeric(t[i])) ++i;
            } else if (word == "SIN" || word == "PULSE") {
                std::vector<double> args;
                ++i;
                while (i < t.size() && looks_numeric(t[i])) {
                    double v = 0.0;
                    if (!value_ok(line, t[i], v)) return false;
                    args.push_back(v);
                    ++i;
                }
                if (word == "SIN") {
                    if (args.size() < 3 || args.size() > 5) {
                        fail(line, "SIN expects (offset amplitude frequency [delay [damping]])");
                        return false;
                    }
                    SinWave w{args[0], args[1], args[2], args.size() > 3 ? args[3] : 0.0, args.size() > 4 ? args[4] : 0.0};
                    if (!(w.frequency_hz > 0.0)) {
                        fail(line, "SIN frequency must be positive");
                        return false;
                    }
                    el.source.waveform = w;
                } else {
                    if (args.size() < 2 || args.size() > 7) {
                        fail(line, "PULSE expects (v1 v2 [delay rise fall width period])");
                        return false;
                    }
                    args.resize(7, 0.0);
                    PulseWave w{args[0], args[1], args[2], args[3], args[4], args[5], args[6]};
                    if (w.rise_s < 0 || w.fall_s < 0 || w.width_s < 0 || w.delay_s < 0 ||
                        (w.period_s > 0 && !(w.period_s > w.width_s))) {
                        fail(line, "PULSE requires rise, fall, width >= 0 and period > width");
                        return false;
                    }
                    el.source.waveform = w;
                }
            } else if (looks_numeric(t[i]) && !have_dc) {
                if (!value_ok(line, t[i], el.source.dc_value)) return false;
                have_dc = true;
                ++i;
            } else {
                fail(line, "unexpected token '" + t[i] + "' in source card");
                return false;
            }
        }
        if (!have_dc && !el.source.waveform) {
            fail(line, "source has no value");
            return false;
        }
        if (!have_dc) el.source.dc_value = el.source.value_at(0.0);
        return true;
    }

    bool parse_mosfet(const LogicalLine& line, const std::vector<std::string>& t, Element& el) {
        std::vector<std::string> positional;
        std::vector<std::string> params;
        for (std::size_t i = 1; i < t.size(); ++i) (is_param(t[i]) ? params : positional).push_back(t[i]);
        if (positional.size() != 5) {
            const auto nodes = positional.empty() ? 0 : positional.size() - 1;
            fail(line, "mosfet '" + el.name + "' needs exactly 4 nodes (drain gate source bulk) and a model, got " +
                           std::to_string(nodes) + " node(s)");
            return false;
        }
        for (int i = 0; i < 4; ++i) el.nodes.push_back(normalize_node(positional[static_cast<std::size_t>(i)]));
        el.model_name = positional[4];
        el.width_m = 100e-6;
        el.length_m = 100e-6;
        for (const auto& p : params) {
            auto [key, value] = split_param(p);
            if (key == "w" || key == "l") {
                double v = 0.0;
                if (!value_ok(line, value, v)) return false;
                if (!(v > 0.0)) {
                    fail(line, "mosfet " + key + " must be positive");
                    return false;
                }
                (key == "w" ? el.width_m : el.length_m) = v;
            }
        }
        return true;
    }

    bool parse_instance(const LogicalLine& line, const std::vector<std::string>& t, Element& el) {
        if (t.size() < 3) {
            fail(line, "expected 'Xname node... subcircuit'");
            return false;
        }
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (is_param(t[i])) {
                fail(line, "subcircuit parameters are not supported");
                return false;
            }
        }
        for (std::size_t i = 1; i + 1 < t.size(); ++i) el.nodes.push_back(normalize_node(t[i]));
        el.subckt_name = t.back();
        return true;
    }

    void parse_dot(const LogicalLine& line, const std::vector<std::string>& t) {
        const auto card = lower(t[0]);
        if (card == ".model") {
            parse_model(line, t);
        } else if (card == ".subckt") {
            if (current_) {
                fail(line, "nested .subckt definitions are not supported");
                return;
            }
            if (t.size() < 2) {
                fail(line, "expected '.subckt name port...'");
                return;
            }
            if (circuit_.subckt_defs.count(name_key(t[1])) != 0) {
                fail(line, "duplicate subcircuit '" + t[1] + "'");
                return;
            }
            SubcircuitDef def;
            def.name = t[1];
            for (std::size_t i = 2; i < t.size(); ++i) def.ports.push_back(normalize_node(t[i]));
            current_ = std::move(def);
            current_line_ = line.number;
        } else if (card == ".ends") {
            if (!current_) {
                fail(line, ".ends without a matching .subckt");
                return;
            }
            auto key = name_key(current_->name);
            circuit_.subckt_defs.emplace(key, std::move(*current_));
            current_.reset();
        } else {
            fail(line, "unsupported card '" + t[0] + "' (supported: R, C, V, I, M, X, .model, .subckt, .ends, .end)");
        }
    }

    void parse_model(const LogicalLine& line, const std::vector<std::string>& t) {
        if (t.size() < 3) {
            fail(line, "expected '.model name nmos|pmos params'");
            return;
        }
        DeviceModel m;
        m.name = t[1];
        const auto type = lower(t[2]);
        if (type == "nmos") {
            m.polarity = Polarity::Nmos;
        } else if (type == "pmos") {
            m.polarity = Polarity::Pmos;
        } else {
            fail(line, "unsupported model type '" + t[2] + "' (only nmos and pmos)");
            return;
        }
        for (std::size_t i = 3; i < t.size(); ++i) {
            if (!is_param(t[i])) {
                fail(line, "unexpected token '" + t[i] + "' in .model");
                return;
            }
            auto [key, value] = split_param(t[i]);
            double v = 0.0;
            if (!value_ok(line, value, v)) return;
            if (key == "level") {
                if (v != 1.0) {
                    fail(line, "only level=1 mosfet models are supported");
                    return;
                }
            } else if (key == "kp") {
                m.kp = v;
            } else if (key == "vto" || key == "vth0") {
                m.vto = v;
            } else if (key == "lambda") {
                m.lambda = v;
            }
        }
        if (!(m.kp > 0.0) || m.lambda < 0.0) {
            fail(line, "model requires kp > 0 and lambda >= 0");
            return;
        }
        auto& models = scope_models();
        if (!models.emplace(name_key(m.name), m).second) fail(line, "duplicate model '" + m.name + "'");
    }

    void resolve_elements(const std::vector<Element>& elements, const std::map<std::string, DeviceModel>* local,
                          const std::string& where) {
        for (const auto& el : elements) {
            if (el.kind == ElementKind::Mosfet) {
                const auto key = name_key(el.model_name);
                const bool found = (local && local->count(key)) || circuit_.models.count(key);
                if (!found) {
                    errors_.push_back("line " + std::to_string(el.line) + ": unknown model '" + el.model_name +
                                      "' referenced by " + el.name + where);
                }
            } else if (el.kind == ElementKind::Instance) {
                if (!circuit_.subckt_defs.count(name_key(el.subckt_name))) {
                    errors_.push_back("line " + std::to_string(el.line) + ": unknown subcircuit '" + el.subckt_name +
                                      "' referenced by " + el.name + where);
                }
            }
        }
    }

    void resolve() {
        resolve_elements(circuit_.elements, nullptr, "");
        for (const auto& [key, def] : circuit_.subckt_defs) {
            resolve_elements(def.elements, &def.models, " in subcircuit " + def.name);
        }
    }

    Circuit circuit_;
    std::optional<SubcircuitDef> current_;
    int current_line_ = 0;
    bool ended_ = false;
    std::vector<std::string> errors_;
};

bool same_name(const std::string& a, const std::string& b) { return name_key(a) == name_key(b); }

bool same_nodes(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (node_key(a[i]) != node_key(b[i])) return false;
    }
    return true;
}

std::string render_source(const SourceSpec& s) {
    std::string out = "DC " + format_value(s.dc_value);
    if (!s.waveform) return out;
    if (const auto* sin = std::get_if<SinWave>(&*s.waveform)) {
        out += " SIN(" + format_value(sin->offset) + " " + format_value(sin->amplitude) + " " +
               format_value(sin->frequency_hz);
        if (sin->delay_s != 0.0 || sin->damping != 0.0) out += " " + format_value(sin->delay_s);
        if (sin->damping != 0.0) out += " " + format_value(sin->damping);
        out += ")";
    } else {
        const auto& p = std::get<PulseWave>(*s.waveform);
        out += " PULSE(" + format_value(p.v1) + " " + format_value(p.v2) + " " + format_value(p.delay_s) + " " +
               format_value(p.rise_s) + " " + format_value(p.fall_s) + " " + format_value(p.width_s) + " " +
               format_value(p.period_s) + ")";
    }
    return out;
}

void render_element(std::ostringstream& out, const Element& el) {
    out << el.name;
    for (const auto& n : el.nodes) out << ' ' << n;
    switch (el.kind) {
        case ElementKind::Resistor:
        case ElementKind::Capacitor:
            out << ' ' << format_value(el.value);
            break;
        case ElementKind::VoltageSource:
        case ElementKind::CurrentSource:
            out << ' ' << render_source(el.source);
            break;
        case ElementKind::Mosfet:
            out << ' ' << el.model_name << " w=" << format_value(el.width_m) << " l=" << format_value(el.length_m);
            break;
        case ElementKind::Instance:
            out << ' ' << el.subckt_name;
            break;
    }
    out << '\n';
}

void render_model(std::ostringstream& out, const DeviceModel& m) {
    out << ".model " << m.name << ' ' << to_string(m.polarity) << " level=1 kp=" << format_value(m.kp)
        << " vto=" << format_value(m.vto);
    if (m.lambda != 0.0) out << " lambda=" << format_value(m.lambda);
    out << '\n';
}

void render_subckt(std::ostringstream& out, const SubcircuitDef& def) {
    out << ".subckt " << def.name;
    for (const auto& p : def.ports) out << ' ' << p;
    out << '\n';
    for (const auto& [key, m] : def.models) render_model(out, m);
    for (const auto& el : def.elements) render_element(out, el);
    out << ".ends " << def.name << '\n';
}

// ---- flattening ----

struct Flattener {
    const Circuit& top;
    Circuit out;

    void merge_model(const DeviceModel& m) {
        auto key = name_key(m.name);
        auto [it, inserted] = out.models.emplace(key, m);
        if (!inserted && !(it->second.kp == m.kp && it->second.vto == m.vto && it->second.lambda == m.lambda &&
                           it->second.polarity == m.polarity)) {
            throw FlattenError("model '" + m.name + "' is defined with conflicting parameters in different scopes");
        }
    }

    void expand(const Element& inst, const std::string& prefix, const std::map<std::string, std::string>& outer_ports,
                std::vector<std::string>& stack) {
        auto def_it = top.subckt_defs.find(name_key(inst.subckt_name));
        if (def_it == top.subckt_defs.end()) {
            throw FlattenError("instance " + inst.name + " references unknown subcircuit '" + inst.subckt_name + "'");
        }
        const auto& def = def_it->second;
        const auto def_key = name_key(def.name);
        if (std::find(stack.begin(), stack.end(), def_key) != stack.end()) {
            throw FlattenError("recursive subcircuit definition: '" + def.name + "' instantiates itself");
        }
        if (static_cast<int>(stack.size()) >= kMaxSubcircuitDepth) {
            throw FlattenError("subcircuit nesting deeper than " + std::to_string(kMaxSubcircuitDepth) + " levels at " +
                               inst.name);
        }
        if (inst.nodes.size() != def.ports.size()) {
            throw FlattenError("instance " + prefix + inst.name + " passes " + std::to_string(inst.nodes.size()) +
                               " node(s) to subcircuit '" + def.name + "' which has " +
                               std::to_string(def.ports.size()) + " port(s)");
        }
        const std::string inner_prefix = prefix + inst.name + ".";
        std::map<std::string, std::string> port_map;
        for (std::size_t i = 0; i < def.ports.size(); ++i) {
            port_map[node_key(def.ports[i])] = map_node(inst.nodes[i], prefix, outer_ports);
        }
        for (const auto& [key, m] : def.models) merge_model(m);
        stack.push_back(def_key);
        for (const auto& el : def.elements) {
            if (el.kind == ElementKind::Instance) {
                Element renamed = el;
                expand(renamed, inner_prefix, port_map, stack);
                continue;
            }
            Element copy = el;
            copy.name = inner_prefix + el.name;
            for (auto& n : copy.nodes) n = map_node(n, inner_prefix, port_map);
            out.elements.push_back(std::move(copy));
        }
        stack.pop_back();
    }

    static std::string map_node(const std::string& node, const std::string& prefix,
                                const std::map<std::string, std::string>& ports) {
        if (node_key(node) == kGround) return std::string(kGround);
        if (auto it = ports.find(node_key(node)); it != ports.end()) return it->second;
        return prefix + node;
    }
};

}  // namespace

std::string node_key(std::string_view name) {
    auto k = lower(name);
    if (k == "gnd") return std::string(kGround);
    return k;
}

std::string name_key(std::string_view name) { return lower(name); }

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Resistor: return "resistor";
        case ElementKind::Capacitor: return "capacitor";
        case ElementKind::VoltageSource: return "voltage-source";
        case ElementKind::CurrentSource: return "current-source";
        case ElementKind::Mosfet: return "mosfet";
        case ElementKind::Instance: return "subcircuit-instance";
    }
    return "?";
}

std::string_view to_string(Polarity polarity) { return polarity == Polarity::Nmos ? "nmos" : "pmos"; }

double SourceSpec::value_at(double t) const {
    if (!waveform) return dc_value;
    if (const auto* s = std::get_if<SinWave>(&*waveform)) {
        if (t < s->delay_s) return s->offset;
        const double tt = t - s->delay_s;
        return s->offset + s->amplitude * std::exp(-s->damping * tt) * std::sin(2.0 * M_PI * s->frequency_hz * tt);
    }
    const auto& p = std::get<PulseWave>(*waveform);
    if (t <= p.delay_s) return p.v1;
    double tt = t - p.delay_s;
    if (p.period_s > 0.0) tt = std::fmod(tt, p.period_s);
    // Edges are left-continuous, so a zero rise time steps just after the
    // edge instant rather than at it.
    if (tt <= 0.0) return p.v1;
    if (tt < p.rise_s) return p.v1 + (p.v2 - p.v1) * tt / p.rise_s;
    tt -= p.rise_s;
    if (tt < p.width_s) return p.v2;
    tt -= p.width_s;
    if (tt < p.fall_s) return p.v2 + (p.v1 - p.v2) * tt / p.fall_s;
    return p.v1;
}

std::vector<double> SourceSpec::breakpoints(double tstop) const {
    std::vector<double> out;
    if (!waveform) return out;
    if (const auto* s = std::get_if<SinWave>(&*waveform)) {
        if (s->delay_s <= tstop) out.push_back(s->delay_s);
        return out;
    }
    const auto& p = std::get<PulseWave>(*waveform);
    constexpr std::size_t kMaxPoints = 4'000'000;
    for (std::size_t k = 0;; ++k) {
        const double base = p.delay_s + static_cast<double>(k) * p.period_s;
        if (base > tstop || out.size() > kMaxPoints) break;
        for (double offset : {0.0, p.rise_s, p.rise_s + p.width_s, p.rise_s + p.width_s + p.fall_s}) {
            if (base + offset <= tstop) out.push_back(base + offset);
        }
        if (p.period_s <= 0.0) break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool Element::same_as(const Element& o) const {
    if (kind != o.kind || !same_name(name, o.name) || !same_nodes(nodes, o.nodes)) return false;
    switch (kind) {
        case ElementKind::Resistor:
        case ElementKind::Capacitor:
            return value == o.value;
        case ElementKind::VoltageSource:
        case ElementKind::CurrentSource:
            return source == o.source;
        case ElementKind::Mosfet:
            return same_name(model_name, o.model_name) && width_m == o.width_m && length_m == o.length_m;
        case ElementKind::Instance:
            return same_name(subckt_name, o.subckt_name);
    }
    return false;
}

bool SubcircuitDef::same_as(const SubcircuitDef& o) const {
    if (!same_name(name, o.name) || !same_nodes(ports, o.ports) || models != o.models) return false;
    if (elements.size() != o.elements.size()) return false;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (!elements[i].same_as(o.elements[i])) return false;
    }
    return true;
}

std::vector<std::string> Circuit::nodes() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& el : elements) {
        for (const auto& n : el.nodes) {
            if (seen.insert(node_key(n)).second) out.push_back(n);
        }
    }
    return out;
}

bool Circuit::has_node(std::string_view name) const {
    const auto key = node_key(name);
    for (const auto& el : elements) {
        for (const auto& n : el.nodes) {
            if (node_key(n) == key) return true;
        }
    }
    return false;
}

const Element* Circuit::find_element(std::string_view name) const {
    const auto key = name_key(name);
    for (const auto& el : elements) {
        if (name_key(el.name) == key) return &el;
    }
    return nullptr;
}

Element* Circuit::find_element(std::string_view name) {
    return const_cast<Element*>(std::as_const(*this).find_element(name));
}

const DeviceModel* Circuit::find_model(std::string_view name) const {
    auto it = models.find(name_key(name));
    return it == models.end() ? nullptr : &it->second;
}

bool Circuit::same_as(const Circuit& o) const {
    if (title != o.title || models != o.models || elements.size() != o.elements.size() ||
        subckt_defs.size() != o.subckt_defs.size()) {
        return false;
    }
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (!elements[i].same_as(o.elements[i])) return false;
    }
    for (const auto& [key, def] : subckt_defs) {
        auto it = o.subckt_defs.find(key);
        if (it == o.subckt_defs.end() || !def.same_as(it->second)) return false;
    }
    return true;
}

Circuit parse_netlist(std::string_view text) {
    if (trim(text).empty()) throw ParseError("empty netlist: no element cards found");
    return Parser{}.run(text);
}

std::string serialize(const Circuit& circuit) {
    std::ostringstream out;
    if (!circuit.title.empty()) out << "* " << circuit.title << '\n';
    for (const auto& [key, m] : circuit.models) render_model(out, m);
    for (const auto& [key, def] : circuit.subckt_defs) render_subckt(out, def);
    for (const auto& el : circuit.elements) render_element(out, el);
    out << ".end\n";
    return out.str();
}

std::string serialize(const SubcircuitDef& def) {
    std::ostringstream out;
    render_subckt(out, def);
    return out.str();
}

Circuit flatten(const Circuit& circuit) {
    Flattener f{circuit, {}};
    f.out.title = circuit.title;
    f.out.models = circuit.models;
    f.out.subckt_defs = circuit.subckt_defs;
    for (const auto& el : circuit.elements) {
        if (el.kind == ElementKind::Instance) {
            std::vector<std::string> stack;
            f.expand(el, "", {}, stack);
        } else {
            f.out.elements.push_back(el);
        }
    }
    return std::move(f.out);
}

}  // namespace anaflow
