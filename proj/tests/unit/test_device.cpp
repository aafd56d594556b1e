#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anaflow/device.hpp"

using namespace anaflow;

namespace {

DeviceModel nmos_model() {
    DeviceModel m;
    m.name = "n";
    m.kp = 100e-6;
    m.vto = 0.5;
    return m;
}

DeviceModel pmos_model() {
    DeviceModel m;
    m.name = "p";
    m.polarity = Polarity::Pmos;
    m.kp = 50e-6;
    m.vto = -0.5;
    return m;
}

// Written out independently of the library: forward nmos only.
double reference_forward(double kp, double wl, double vto, double lambda, double vgs, double vds) {
    if (vgs <= vto) return 0.0;
    if (vds < vgs - vto) return kp * wl * ((vgs - vto) * vds - vds * vds / 2.0) * (1.0 + lambda * vds);
    return kp / 2.0 * wl * (vgs - vto) * (vgs - vto) * (1.0 + lambda * vds);
}

}  // namespace

TEST(Device, SpecExamples) {
    auto m = nmos_model();
    auto cut = device_current(m, 50e-6, 1e-6, 0.3, 2.0);
    EXPECT_EQ(cut.region, Region::Cutoff);
    EXPECT_EQ(cut.id, 0.0);
    auto sat = device_current(m, 50e-6, 1e-6, 1.0, 2.0);
    EXPECT_EQ(sat.region, Region::Saturation);
    EXPECT_NEAR(sat.id, 625e-6, 1e-18);
    auto tri = device_current(m, 50e-6, 1e-6, 1.0, 0.2);
    EXPECT_EQ(tri.region, Region::Triode);
    EXPECT_NEAR(tri.id, 4.0e-4, 1e-18);
}

TEST(Device, MatchesReferenceOnGrid) {
    for (double lambda : {0.0, 0.05}) {
        auto m = nmos_model();
        m.lambda = lambda;
        for (int i = 0; i < 100; ++i) {
            for (int j = 0; j < 100; ++j) {
                const double vgs = 5.0 * i / 99.0;
                const double vds = 5.0 * j / 99.0;
                const double ref = reference_forward(100e-6, 10.0, 0.5, lambda, vgs, vds);
                const double got = device_current(m, 10e-6, 1e-6, vgs, vds).id;
                EXPECT_LE(std::abs(got - ref), 1e-15 * std::max(std::abs(ref), 1e-30));
            }
        }
    }
}

TEST(Device, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const double h = 1e-6;
    int checked = 0;
    for (auto model : {nmos_model(), pmos_model()}) {
        model.lambda = 0.02;
        for (int k = 0; k < 4000; ++k) {
            const double vgs = u(rng);
            const double vds = u(rng);
            const auto s = device_current(model, 20e-6, 1e-6, vgs, vds);
            // Skip points within h of a region boundary where the one-sided
            // derivatives differ.
            const double sign = model.polarity == Polarity::Nmos ? 1.0 : -1.0;
            const double g = sign * vgs, d = sign * vds, vt = sign * model.vto;
            const double ovf = g - vt, ovr = g - d - vt;
            if (std::abs(ovf) < 1e-3 || std::abs(ovr) < 1e-3 || std::abs(d) < 1e-3 || std::abs(d - ovf) < 1e-3 ||
                std::abs(-d - ovr) < 1e-3) {
                continue;
            }
            const double gm = (device_current(model, 20e-6, 1e-6, vgs + h, vds).id -
                               device_current(model, 20e-6, 1e-6, vgs - h, vds).id) / (2 * h);
            const double gds = (device_current(model, 20e-6, 1e-6, vgs, vds + h).id -
                                device_current(model, 20e-6, 1e-6, vgs, vds - h).id) / (2 * h);
            const double scale = std::max({std::abs(s.gm), std::abs(s.gds), 1e-9});
            EXPECT_LE(std::abs(gm - s.gm), 1e-6 * scale) << vgs << " " << vds;
            EXPECT_LE(std::abs(gds - s.gds), 1e-6 * scale) << vgs << " " << vds;
            ++checked;
        }
    }
    EXPECT_GT(checked, 3000);
}

TEST(Device, ContinuityAcrossRegions) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    auto m = nmos_model();
    m.lambda = 0.04;
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double vgs = u(rng);
        // Probe exactly at the saturation edge and at cutoff.
        const double edge = vgs - m.vto;
        if (edge > 0) {
            const double below = device_current(m, 10e-6, 1e-6, vgs, std::nextafter(edge, 0.0)).id;
            const double above = device_current(m, 10e-6, 1e-6, vgs, edge).id;
            worst = std::max(worst, std::abs(above - below));
        }
        const double vds = std::abs(u(rng));
        const double a = device_current(m, 10e-6, 1e-6, std::nextafter(m.vto, 10.0), vds).id;
        worst = std::max(worst, std::abs(a));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Device, PmosIsReflectedNmos) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    auto p = pmos_model();
    p.lambda = 0.03;
    auto n = p;
    n.polarity = Polarity::Nmos;
    n.vto = -p.vto;
    for (int k = 0; k < 2000; ++k) {
        const double vgs = u(rng), vds = u(rng);
        const auto sp = device_current(p, 10e-6, 1e-6, vgs, vds);
        const auto sn = device_current(n, 10e-6, 1e-6, -vgs, -vds);
        EXPECT_EQ(sp.id, -sn.id);
        EXPECT_EQ(sp.gm, sn.gm);
        EXPECT_EQ(sp.gds, sn.gds);
        EXPECT_EQ(sp.region, sn.region);
    }
}

TEST(Device, NmosCurrentNonNegativeForwardAndAntisymmetricReverse) {
    auto m = nmos_model();
    const auto f = device_current(m, 10e-6, 1e-6, 2.0, 1.0);
    EXPECT_GT(f.id, 0.0);
    // Swapping drain and source: vgs' = vgd, vds' = -vds.
    const auto r = device_current(m, 10e-6, 1e-6, 2.0 - 1.0, -1.0);
    const auto f2 = device_current(m, 10e-6, 1e-6, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(r.id, -f2.id);
}
