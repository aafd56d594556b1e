#pragma once

#include <string>
#include <string_view>

#include "anaflow/netlist.hpp"

namespace anaflow {

enum class Region { Cutoff, Triode, Saturation };

std::string_view to_string(Region region);

/// Operating state of one mosfet. Voltages are terminal differences as wired
/// (vgs = Vg - Vs, vds = Vd - Vs); id flows drain to source, so an nmos is
/// never negative and a conducting pmos is negative.
struct DeviceState {
    std::string name;
    Polarity polarity = Polarity::Nmos;
    Region region = Region::Cutoff;
    double vto = 0.0;
    double id = 0.0;
    double vgs = 0.0;
    double vds = 0.0;
    double gm = 0.0;   // d id / d vgs
    double gds = 0.0;  // d id / d vds
};

/// Level-1 (Shichman-Hodges) evaluation. For vds < 0 the drain and source
/// swap roles; the region then refers to the swapped device.
DeviceState device_current(const DeviceModel& model, double w, double l, double vgs, double vds);

}  // namespace anaflow
