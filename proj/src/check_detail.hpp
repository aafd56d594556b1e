#pragma once

#include <fmt/format.h>

#include <string>
#include <string_view>

#include "anaflow/netlist.hpp"

namespace anaflow::detail {

inline std::string fmtv(double v) { return fmt::format("{:.4g}", v); }

inline bool touches(const Element& el, std::string_view node) {
    const auto key = node_key(node);
    for (const auto& n : el.nodes) {
        if (node_key(n) == key) return true;
    }
    return false;
}

/// The terminal of a two-terminal element opposite `node`.
inline std::string other_end(const Element& el, std::string_view node) {
    return node_key(el.nodes[0]) == node_key(node) ? el.nodes[1] : el.nodes[0];
}

/// First element of `kind` touching `node`; when `far` is non-empty the
/// element must also touch `far`.
inline const Element* element_at(const Circuit& c, ElementKind kind, std::string_view node, std::string_view far = {}) {
    for (const auto& el : c.elements) {
        if (el.kind == kind && touches(el, node) && (far.empty() || touches(el, far))) return &el;
    }
    return nullptr;
}

/// True when a mosfet drain or source sits on `node`.
inline bool driven_by_transistor(const Circuit& c, std::string_view node) {
    const auto key = node_key(node);
    for (const auto& el : c.elements) {
        if (el.kind != ElementKind::Mosfet) continue;
        if (node_key(el.nodes[0]) == key || node_key(el.nodes[2]) == key) return true;
    }
    return false;
}

}  // namespace anaflow::detail
