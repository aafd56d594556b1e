#include <fmt/format.h>

#include "anaflow/simulator.hpp"

namespace anaflow {

std::string waveform_csv(const Waveform& wave, const std::vector<std::string>& nodes) {
    std::vector<const std::vector<double>*> columns;
    std::string out = "time_s";
    for (const auto& n : nodes) {
        columns.push_back(&wave.signal(n));
        out += "," + n;
    }
    out += "\n";
    for (std::size_t i = 0; i < wave.time_s.size(); ++i) {
        out += fmt::format("{:.9g}", wave.time_s[i]);
        for (const auto* c : columns) out += fmt::format(",{:.9g}", (*c)[i]);
        out += "\n";
    }
    return out;
}

}  // namespace anaflow
