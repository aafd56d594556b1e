#include "anaflow/device.hpp"

namespace anaflow {
namespace {

struct Eval {
    Region region;
    double id, gm, gds;
};

// Forward-biased nmos with vds >= 0.
Eval forward(double beta, double vto, double lambda, double vgs, double vds) {
    const double ov = vgs - vto;
    if (ov <= 0.0) return {Region::Cutoff, 0.0, 0.0, 0.0};
    const double clm = 1.0 + lambda * vds;
    if (vds < ov) {
        const double core = ov * vds - 0.5 * vds * vds;
        return {Region::Triode, beta * core * clm, beta * vds * clm, beta * ((ov - vds) * clm + core * lambda)};
    }
    const double core = 0.5 * ov * ov;
    return {Region::Saturation, beta * core * clm, beta * ov * clm, beta * core * lambda};
}

// nmos in either direction. With vds < 0 the source-side terminal is the
// drain: id(vgs, vds) = -f(vgs - vds, -vds).
Eval nmos(double beta, double vto, double lambda, double vgs, double vds) {
    if (vds >= 0.0) return forward(beta, vto, lambda, vgs, vds);
    const Eval r = forward(beta, vto, lambda, vgs - vds, -vds);
    // d/dvgs: -gm'; d/dvds: -(gm' * -1 + gds' * -1) = gm' + gds'
    return {r.region, -r.id, -r.gm, r.gm + r.gds};
}

}  // namespace

std::string_view to_string(Region region) {
    switch (region) {
        case Region::Cutoff: return "cutoff";
        case Region::Triode: return "triode";
        case Region::Saturation: return "saturation";
    }
    return "?";
}

DeviceState device_current(const DeviceModel& model, double w, double l, double vgs, double vds) {
    const double beta = model.kp * w / l;
    DeviceState s;
    s.polarity = model.polarity;
    s.vto = model.vto;
    s.vgs = vgs;
    s.vds = vds;
    if (model.polarity == Polarity::Nmos) {
        const Eval e = nmos(beta, model.vto, model.lambda, vgs, vds);
        s.region = e.region;
        s.id = e.id;
        s.gm = e.gm;
        s.gds = e.gds;
    } else {
        // id_p(vgs, vds) = -id_n(-vgs, -vds) with the threshold reflected;
        // both derivatives pick up two sign flips and keep their sign.
        const Eval e = nmos(beta, -model.vto, model.lambda, -vgs, -vds);
        s.region = e.region;
        s.id = -e.id;
        s.gm = e.gm;
        s.gds = e.gds;
    }
    return s;
}

}  // namespace anaflow
