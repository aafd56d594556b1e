#pragma once

#include <string>
#include <string_view>

namespace anaflow {

/// Parses a SPICE numeric token such as "10k", "2.5meg", "50e-6", "1uF" or the
/// PySpice unit form "1@u_kOhm". Suffixes are case-insensitive except inside
/// the PySpice form, where "M" means mega. Throws ParseError on a malformed
/// numeral.
double parse_value(std::string_view token);

/// Renders a value in lowercase SI-suffix form ("10k", "1u", "2.5meg") such
/// that parse_value(format_value(x)) == x exactly.
std::string format_value(double value);

}  // namespace anaflow
