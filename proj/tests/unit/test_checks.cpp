#include <gtest/gtest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "anaflow/checks.hpp"

using namespace anaflow;
using anaflow::testing::criteria_matrix;
using anaflow::testing::read_fixture;

namespace {

Circuit net(const std::string& text) { return flatten(parse_netlist(text)); }

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

const char* kCs = R"(* cs amp
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 1
M1 Vout Vin 0 0 nmos_model w=10e-6 l=1e-6
R1 Vdd Vout 10k
)";

std::vector<std::string> stage_names(const VerificationOutcome& o) {
    std::vector<std::string> out;
    for (const auto& s : o.stages) out.emplace_back(to_string(s.stage));
    return out;
}

}  // namespace

TEST(OpCheck, SaturatedAmplifierPasses) {
    const auto op = solve_op(net(kCs));
    const auto r = check_operating_points(op);
    EXPECT_TRUE(r.passed) << r.feedback;
    EXPECT_NEAR(r.measurements.at("id_amps"), 125e-6, 1e-12);
}

TEST(OpCheck, TriodeNamesDeviceAndInequality) {
    std::string text = kCs;
    text.replace(text.find("Vin Vin 0 1"), 11, "Vin Vin 0 3");
    const auto r = check_operating_points(solve_op(net(text)));
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(contains(r.feedback, "M1 (nmos) is in triode")) << r.feedback;
    EXPECT_TRUE(contains(r.feedback, "Vgs - |Vth|"));
}

TEST(OpCheck, CutoffReported) {
    std::string text = kCs;
    text.replace(text.find("Vin Vin 0 1"), 11, "Vin Vin 0 0.2");
    const auto r = check_operating_points(solve_op(net(text)));
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(contains(r.feedback, "cutoff"));
}

TEST(OpCheck, PmosReflected) {
    const auto c = net(R"(* pmos cs
.model pmos_model pmos level=1 kp=50e-6 vto=-0.5
Vdd Vdd 0 5
Vin Vin 0 4
M1 Vout Vin Vdd Vdd pmos_model w=20e-6 l=1e-6
R1 Vout 0 10k
)");
    const auto r = check_operating_points(solve_op(c));
    EXPECT_TRUE(r.passed) << r.feedback;
}

TEST(OpCheck, ReferenceTwoStageAmplifierHasM3InTriode) {
    const auto c = net(read_fixture("two_stage_amp.sp"));
    const auto r = check_operating_points(solve_op(c));
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(contains(r.feedback, "M3 (nmos) is in triode")) << r.feedback;
}

TEST(DcSweep, SubstitutionMinimizesDistanceToMid) {
    const auto c = net(read_fixture("inverter_pass.sp"));
    const auto& task = task_by_id(6);
    const auto check = run_dc_sweep_check(c, task);
    ASSERT_TRUE(check.report.passed) << check.report.feedback;
    ASSERT_TRUE(check.substitution);
    const auto sweep = dc_sweep(c, "Vin", 0.0, 5.0, 0.05);
    double best = INFINITY;
    for (const auto& p : sweep.points) best = std::min(best, std::abs(p.op.voltage("Vout") - 2.5));
    const double chosen = check.substitution->second;
    for (const auto& p : sweep.points) {
        if (std::abs(p.input - chosen) < 1e-12) EXPECT_DOUBLE_EQ(std::abs(p.op.voltage("Vout") - 2.5), best);
    }
    EXPECT_DOUBLE_EQ(check.circuit.find_element("Vin")->source.dc_value, chosen);
}

TEST(DcSweep, DividerSubstitutesExactMidpoint) {
    const auto c = net(R"(* divider
Vin Vin 0 1
R1 Vin Vout 1k
R2 Vout 0 1k
)");
    const auto check = run_dc_sweep_check(c, task_by_id(1));
    ASSERT_TRUE(check.report.passed);
    // Vout = Vin/2 reaches 2.5 V only at the top of the sweep.
    EXPECT_DOUBLE_EQ(check.substitution->second, 5.0);
}

TEST(DcSweep, UnresponsiveOutputFails) {
    const auto c = net(R"(* disconnected
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 1
R0 Vin 0 1k
M1 Vout Vb 0 0 nmos_model w=10e-6 l=1e-6
Vb Vb 0 1
R1 Vdd Vout 10k
)");
    const auto check = run_dc_sweep_check(c, task_by_id(1));
    EXPECT_FALSE(check.report.passed);
    EXPECT_TRUE(contains(check.report.feedback, "Vout does not respond"));
}

TEST(DcSweep, CurrentInputTaskIsSkipped) {
    const auto c = net(R"(* mirror
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Iref Vdd g 100u
M1 g g 0 0 nmos_model w=10e-6 l=1e-6
M2 Iout g 0 0 nmos_model w=10e-6 l=1e-6
R1 Vdd Iout 1k
)");
    const auto check = run_dc_sweep_check(c, task_by_id(12));
    EXPECT_TRUE(check.report.passed);
    EXPECT_TRUE(contains(check.report.feedback, "skipped"));
    EXPECT_FALSE(check.substitution);
}

TEST(Oscillation, PureSinePasses) {
    std::vector<double> t, v;
    for (int k = 0; k <= 10000; ++k) {
        t.push_back(k * 1e-6);
        v.push_back(std::sin(2 * M_PI * 1000 * k * 1e-6));
    }
    const auto r = evaluate_oscillation(t, v);
    EXPECT_TRUE(r.passed) << r.feedback;
    EXPECT_EQ(r.measurements.at("peak_count"), 10.0);
    EXPECT_NEAR(r.measurements.at("amplitude_v"), 1.0, 1e-6);
    EXPECT_NEAR(r.measurements.at("period_variability"), 0.0, 1e-9);
}

TEST(Oscillation, DecayingPulseFails) {
    std::vector<double> t, v;
    for (int k = 0; k <= 1000; ++k) {
        t.push_back(k * 1e-5);
        v.push_back(std::exp(-k * 0.01) * std::sin(k * 0.01));
    }
    EXPECT_FALSE(evaluate_oscillation(t, v).passed);
}

TEST(Adder, IdealIdentityHasZeroError) {
    std::vector<AdderSample> s;
    for (double a = 0.0; a <= 0.5 + 1e-9; a += 0.05) s.push_back({2.5 + a, 2.6, 2.5 - (a + 0.1)});
    const auto r = evaluate_adder(s, 2.5);
    EXPECT_TRUE(r.passed) << r.feedback;
    EXPECT_NEAR(r.measurements.at("epsilon"), 0.0, 1e-12);
}

TEST(Adder, WrongSignFails) {
    const auto r = evaluate_adder({{1.0, 1.0, 2.0}}, 0.0);
    EXPECT_FALSE(r.passed);
    EXPECT_NEAR(r.measurements.at("epsilon"), 2.0, 1e-12);
}

// Each circuit type: the pass fixture passes its function check and the
// perturbed one fails it.
class CriteriaMatrix : public ::testing::TestWithParam<std::size_t> {};

TEST_P(CriteriaMatrix, PassAndFail) {
    const auto& row = criteria_matrix()[GetParam()];
    CheckOptions options;
    options.inverter_verbatim = !row.standard_inverter;
    const auto& task = task_by_id(row.task_id);
    const auto pass = run_function_check(net(read_fixture(std::string(row.stem) + "_pass.sp")), task, options);
    EXPECT_TRUE(pass.passed) << row.type << ": " << pass.feedback;
    const auto fail = run_function_check(net(read_fixture(std::string(row.stem) + "_fail.sp")), task, options);
    EXPECT_FALSE(fail.passed) << row.type;
    EXPECT_FALSE(fail.feedback.empty());
}

INSTANTIATE_TEST_SUITE_P(AllTypes, CriteriaMatrix, ::testing::Range<std::size_t>(0, 12),
                         [](const auto& info) { return std::string(criteria_matrix()[info.param].type); });

TEST(Inverter, VerbatimPolarityRejectsConventionalInverter) {
    const auto c = net(read_fixture("inverter_pass.sp"));
    const auto r = run_function_check(c, task_by_id(6));
    EXPECT_FALSE(r.passed);
    EXPECT_TRUE(contains(r.feedback, "required Vout <= 2.5 V"));
}

TEST(Inverter, VerbatimPolarityAcceptsFollower) {
    const auto c = net(R"(* source follower
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 2.5
M1 Vdd Vin Vout 0 nmos_model w=10e-6 l=1e-6
R1 Vout 0 10k
)");
    const auto r = run_function_check(c, task_by_id(6));
    EXPECT_TRUE(r.passed) << r.feedback;
}

TEST(Verify, StagesAreAPrefixAndStopAtFirstFailure) {
    const std::vector<std::string> all = {"requirement", "op_check", "dc_sweep", "function"};
    const auto good = verify_netlist(read_fixture("amp_pass.sp"), task_by_id(1));
    EXPECT_TRUE(good.final_pass);
    EXPECT_EQ(stage_names(good), all);
    EXPECT_TRUE(good.bias_substitutions.count("Vin"));

    const auto broken = verify_netlist(read_fixture("two_stage_amp.sp"), task_by_id(1));
    EXPECT_FALSE(broken.final_pass);
    EXPECT_EQ(stage_names(broken), std::vector<std::string>(all.begin(), all.begin() + 2));
    ASSERT_NE(broken.first_failure(), nullptr);
    EXPECT_EQ(broken.first_failure()->stage, Stage::OpCheck);
}

TEST(Verify, ParseErrorFailsRequirement) {
    const auto o = verify_netlist("* t\nQ1 a b c\n", task_by_id(1));
    ASSERT_EQ(o.stages.size(), 1u);
    EXPECT_EQ(o.stages[0].stage, Stage::Requirement);
    EXPECT_TRUE(contains(o.stages[0].feedback, "line 2"));
}

TEST(Verify, FloatingNodeReportedAtOpCheck) {
    const auto o = verify_netlist(R"(* floating
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 1
M1 Vout Vin 0 0 nmos_model w=10e-6 l=1e-6
R1 Vdd Vout 10k
R2 Vout X 1k
)",
                                task_by_id(1));
    ASSERT_EQ(o.stages.size(), 2u);
    EXPECT_TRUE(contains(o.stages[1].feedback, "floating node"));
}

TEST(Verify, DeterministicFeedback) {
    const auto a = verify_netlist(read_fixture("two_stage_amp.sp"), task_by_id(1));
    const auto b = verify_netlist(read_fixture("two_stage_amp.sp"), task_by_id(1));
    ASSERT_EQ(a.stages.size(), b.stages.size());
    for (std::size_t i = 0; i < a.stages.size(); ++i) EXPECT_EQ(a.stages[i].feedback, b.stages[i].feedback);
}

TEST(Verify, OpampTask11EndToEnd) {
    const auto o = verify_netlist(read_fixture("opamp_task11.sp"), task_by_id(11));
    EXPECT_TRUE(o.final_pass) << (o.first_failure() ? o.first_failure()->feedback : "");
}
