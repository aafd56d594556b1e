#pragma once

// SPICE-subset netlists: R, C, V, I, M and X cards, .model, .subckt/.ends,
// "*" comments and a terminating .end. Node and element names compare
// case-insensitively; "0" and "gnd" both denote ground and are stored as "0".

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace anaflow {

inline constexpr std::string_view kGround = "0";

/// Case-folded identity of a node or element name; ground spellings map to "0".
std::string node_key(std::string_view name);
std::string name_key(std::string_view name);

enum class ElementKind { Resistor, Capacitor, VoltageSource, CurrentSource, Mosfet, Instance };
enum class Polarity { Nmos, Pmos };

std::string_view to_string(ElementKind kind);
std::string_view to_string(Polarity polarity);

struct SinWave {
    double offset = 0.0;
    double amplitude = 0.0;
    double frequency_hz = 0.0;
    double delay_s = 0.0;
    double damping = 0.0;

    bool operator==(const SinWave&) const = default;
};

struct PulseWave {
    double v1 = 0.0;
    double v2 = 0.0;
    double delay_s = 0.0;
    double rise_s = 0.0;
    double fall_s = 0.0;
    double width_s = 0.0;
    double period_s = 0.0;  // 0 means a single pulse

    bool operator==(const PulseWave&) const = default;
};

struct SourceSpec {
    double dc_value = 0.0;
    std::optional<std::variant<SinWave, PulseWave>> waveform;

    /// Instantaneous value; without a waveform this is dc_value.
    double value_at(double t) const;
    /// Slope discontinuities in [0, tstop], ascending.
    std::vector<double> breakpoints(double tstop) const;

    bool operator==(const SourceSpec&) const = default;
};

struct Element {
    ElementKind kind = ElementKind::Resistor;
    std::string name;
    std::vector<std::string> nodes;  // mosfet: drain, gate, source, bulk
    double value = 0.0;              // R, C
    std::string model_name;          // mosfet
    double width_m = 0.0;
    double length_m = 0.0;
    SourceSpec source;               // V, I
    std::string subckt_name;         // X
    int line = 0;                    // source line, 0 when synthesized

    /// Structural equality; ignores the originating line number and
    /// compares identifiers case-insensitively.
    bool same_as(const Element& other) const;
};

struct DeviceModel {
    std::string name;
    Polarity polarity = Polarity::Nmos;
    double kp = 2e-5;
    double vto = 0.0;
    double lambda = 0.0;

    bool operator==(const DeviceModel&) const = default;
};

struct SubcircuitDef {
    std::string name;
    std::vector<std::string> ports;
    std::vector<Element> elements;
    std::map<std::string, DeviceModel> models;  // keyed by name_key

    bool same_as(const SubcircuitDef& other) const;
};

struct Circuit {
    std::string title;
    std::vector<Element> elements;
    std::map<std::string, DeviceModel> models;          // keyed by name_key
    std::map<std::string, SubcircuitDef> subckt_defs;   // keyed by name_key

    /// Display names of every node referenced by a top-level element, ground
    /// included, in first-appearance order.
    std::vector<std::string> nodes() const;
    bool has_node(std::string_view name) const;

    const Element* find_element(std::string_view name) const;
    Element* find_element(std::string_view name);
    const DeviceModel* find_model(std::string_view name) const;

    bool same_as(const Circuit& other) const;
};

/// Parses netlist text; unresolved model/subcircuit references are collected
/// and reported together. Errors carry "line N:" prefixes.
Circuit parse_netlist(std::string_view text);

/// Emits one card per line with lowercase SI-suffix values.
std::string serialize(const Circuit& circuit);
std::string serialize(const SubcircuitDef& def);

inline constexpr int kMaxSubcircuitDepth = 8;

/// Expands every subcircuit instance. Internal nodes and element names are
/// prefixed with "<instance>."; ports alias the caller's nodes.
Circuit flatten(const Circuit& circuit);

}  // namespace anaflow
