#include "anaflow/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "anaflow/errors.hpp"

namespace anaflow {
namespace {

struct Suffix {
    std::string_view text;
    double scale;
};

// Ordered largest first; "meg" must be tested before "m".
constexpr std::array<Suffix, 10> kSuffixes{{
    {"t", 1e12}, {"g", 1e9}, {"meg", 1e6}, {"k", 1e3}, {"", 1.0},
    {"m", 1e-3}, {"u", 1e-6}, {"n", 1e-9}, {"p", 1e-12}, {"f", 1e-15},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool all_alpha(std::string_view s) {
    for (char c : s) {
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

[[noreturn]] void malformed(std::string_view token) {
    throw ParseError("malformed numeric value '" + std::string(token) + "'");
}

// Parses the leading numeral; returns the value and the unparsed tail.
std::pair<double, std::string_view> leading_number(std::string_view token) {
    std::string_view body = token;
    bool negative = false;
    if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
        negative = body.front() == '-';
        body.remove_prefix(1);
    }
    if (body.empty() || !(std::isdigit(static_cast<unsigned char>(body.front())) || body.front() == '.')) {
        malformed(token);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value,
                                     std::chars_format::general);
    if (ec != std::errc{}) malformed(token);
    // from_chars happily consumes "1e" style prefixes only when an exponent
    // follows, so the tail is always a suffix or unit.
    std::string_view tail(ptr, static_cast<std::size_t>(body.data() + body.size() - ptr));
    return {negative ? -value : value, tail};
}

double pyspice_scale(std::string_view unit, std::string_view token) {
    static constexpr std::array<std::string_view, 9> kBase{"Ohm", "ohm", "V", "A", "F", "Hz", "s", "S", "W"};
    for (auto base : kBase) {
        if (unit == base) return 1.0;
    }
    if (unit.size() < 2) malformed(token);
    double scale = 0.0;
    switch (unit.front()) {
        case 'T': scale = 1e12; break;
        case 'G': scale = 1e9; break;
        case 'M': scale = 1e6; break;
        case 'k': case 'K': scale = 1e3; break;
        case 'm': scale = 1e-3; break;
        case 'u': case 'U': scale = 1e-6; break;
        case 'n': case 'N': scale = 1e-9; break;
        case 'p': case 'P': scale = 1e-12; break;
        case 'f': scale = 1e-15; break;
        default: malformed(token);
    }
    std::string_view rest = unit.substr(1);
    for (auto base : kBase) {
        if (rest == base) return scale;
    }
    malformed(token);
}

std::string shortest(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

}  // namespace

double parse_value(std::string_view token) {
    if (token.empty()) throw ParseError("empty numeric value");

    if (auto at = token.find("@u_"); at != std::string_view::npos) {
        auto [mantissa, tail] = leading_number(token.substr(0, at));
        if (!tail.empty()) malformed(token);
        return mantissa * pyspice_scale(token.substr(at + 3), token);
    }

    auto [mantissa, tail] = leading_number(token);
    if (tail.empty()) return mantissa;
    std::string suffix = lower(tail);
    if (!all_alpha(suffix)) malformed(token);
    for (const auto& s : kSuffixes) {
        if (s.text.empty()) continue;
        if (suffix.compare(0, s.text.size(), s.text) == 0) {
            return mantissa * s.scale;
        }
    }
    // No scale prefix, only a unit name such as "V" or "ohm".
    return mantissa;
}

std::string format_value(double value) {
    if (value == 0.0) return "0";
    if (!std::isfinite(value)) return shortest(value);
    if (value < 0.0) {
        std::string positive = format_value(-value);
        // Negating the rendered magnitude keeps the round trip exact because
        // parse_value negates the mantissa before scaling.
        return "-" + positive;
    }
    for (const auto& s : kSuffixes) {
        if (value < s.scale) continue;
        if (value >= 1000.0 * s.scale && s.text != "t") break;
        const double mantissa = value / s.scale;
        std::string candidate = shortest(mantissa) + std::string(s.text);
        if (parse_value(candidate) == value) return candidate;
        for (int precision = 15; precision <= 17; ++precision) {
            std::array<char, 64> buf{};
            std::snprintf(buf.data(), buf.size(), "%.*g", precision, mantissa);
            candidate = std::string(buf.data()) + std::string(s.text);
            if (candidate.find('e') == std::string::npos && parse_value(candidate) == value) {
                return candidate;
            }
        }
        break;
    }
    return shortest(value);
}

}  // namespace anaflow
