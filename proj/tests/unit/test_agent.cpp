#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "anaflow/agent.hpp"
#include "anaflow/errors.hpp"

using namespace anaflow;
using anaflow::testing::read_fixture;

namespace {

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::string fenced(const std::string& body) { return "Here is the design.\n\n```\n" + body + "```\n"; }

const char* kFloating = R"(* floating
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 1
M1 Vout Vin 0 0 nmos_model w=10e-6 l=1e-6
R1 Vdd Vout 10k
R2 Vout X 1k
.end
)";

const char* kIntegrator = R"(* integrator
.include p11_lib.sp
Vin Vin 0 2.5
Vref Vref 0 2.5
R1 Vin n1 100k
Cf n1 Vout 10n
X1 Vref n1 Vout SingleStageOpamp
.end
)";

ToolLibrary opamp_library() {
    ToolLibrary lib;
    ReplayGenerator g({fenced(read_fixture("opamp_task11.sp"))});
    const auto r = run_design_loop(task_by_id(11), g, lib);
    EXPECT_TRUE(r.success);
    return lib;
}

}  // namespace

TEST(Prompt, BasicTask1) {
    const auto c = build_basic_prompt(task_by_id(1));
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].role, "system");
    EXPECT_EQ(c[0].content, "You are an analog integrated circuits expert.");
    EXPECT_TRUE(contains(c[1].content, "Design a single-stage common-source amplifier with resistive load R."));
    EXPECT_TRUE(contains(c[1].content, "Input node name: Vin"));
    EXPECT_TRUE(contains(c[1].content, "Output node name: Vout."));
    EXPECT_FALSE(contains(c[1].content, "[TASK]"));
}

TEST(Prompt, EveryBasicTaskCarriesTips) {
    for (const auto& t : builtin_tasks()) {
        if (t.composite) continue;
        const auto c = build_basic_prompt(t);
        EXPECT_TRUE(contains(c[1].content, "connect the bulk of a MOSFET to its source")) << t.id;
        EXPECT_TRUE(contains(c[1].content, "Assume the Vdd = 5.0 V")) << t.id;
    }
}

TEST(Prompt, CompositeWithOpampTool) {
    const auto lib = opamp_library();
    const auto c = build_composite_prompt(task_by_id(18), {lib.entries.at(11)});
    EXPECT_TRUE(contains(c[1].content, "an Opamp integrator with resistor R1 and capacitor Cf"));
    EXPECT_TRUE(contains(c[1].content, ".include p11_lib.sp"));
    EXPECT_TRUE(contains(c[1].content, "X1 Vinp Vinn Vout SingleStageOpamp"));
    EXPECT_TRUE(contains(c[1].content, "| 11 | Opamp |"));
    EXPECT_FALSE(contains(c[1].content, "[CALL_INFO]"));
}

TEST(Prompt, OscillatorCompositeNote) {
    const auto lib = opamp_library();
    const auto c = build_composite_prompt(task_by_id(16), {lib.entries.at(11)});
    EXPECT_TRUE(contains(c[1].content, "Please increase the gain as much as possible to maintain oscillation."));
}

TEST(Prompt, CompositeWithoutToolsIsMarked) {
    const auto c = build_composite_prompt(task_by_id(18), {});
    EXPECT_TRUE(contains(c[1].content, "No subcircuits are available for this task."));
}

TEST(Feedback, AppendsReplyAndStageFeedback) {
    Attempt a;
    a.prompt_messages = build_basic_prompt(task_by_id(1));
    a.raw_reply = "reply";
    StageReport r;
    r.stage = Stage::OpCheck;
    r.feedback = "M2 (nmos) is in triode: Vds = 0.1 V < Vgs - |Vth| = 1 V";
    const auto c = build_feedback_prompt(a, r);
    ASSERT_EQ(c.size(), a.prompt_messages.size() + 2);
    EXPECT_EQ(c[2].role, "assistant");
    EXPECT_EQ(c[2].content, "reply");
    EXPECT_EQ(c[3].role, "user");
    EXPECT_TRUE(contains(c[3].content, "op_check"));
    EXPECT_TRUE(contains(c[3].content, r.feedback));
    EXPECT_TRUE(contains(c[3].content, "M2"));
    EXPECT_TRUE(contains(c[3].content, "Vgs"));
}

TEST(Feedback, ParseErrorLineNumberPassesThrough) {
    const auto o = verify_netlist("* t\n.model nmos_model nmos level=1 kp=100e-6 vto=0.5\nVdd Vdd 0 5\nVin Vin 0 1\n"
                                  "R1 Vdd Vout 10k\nM1 Vout Vin 0 0 nmos_model w=1e-6 l=1e-6\nQ7 a b c\n",
                                  task_by_id(1));
    Attempt a;
    a.raw_reply = "x";
    const auto c = build_feedback_prompt(a, *o.first_failure());
    EXPECT_TRUE(contains(c.back().content, "line 7")) << c.back().content;
}

TEST(Feedback, UnresponsiveOutputNamed) {
    ReplayGenerator g({fenced(R"(* disconnected
.model nmos_model nmos level=1 kp=100e-6 vto=0.5
Vdd Vdd 0 5
Vin Vin 0 1
R0 Vin 0 1k
M1 Vout Vb 0 0 nmos_model w=10e-6 l=1e-6
Vb Vb 0 1
R1 Vdd Vout 10k
)"),
                       fenced(read_fixture("amp_pass.sp"))});
    ToolLibrary lib;
    const auto r = run_design_loop(task_by_id(1), g, lib);
    ASSERT_EQ(r.attempts.size(), 2u);
    const auto& msg = r.attempts[1].prompt_messages.back().content;
    EXPECT_TRUE(contains(msg, "dc_sweep"));
    EXPECT_TRUE(contains(msg, "Vout does not respond")) << msg;
}

TEST(Extract, SingleBlock) { EXPECT_EQ(extract_netlist("```\nRD Vdd Vout 10k\n```"), "RD Vdd Vout 10k\n"); }

TEST(Extract, LastOfTwoBlocks) {
    EXPECT_EQ(extract_netlist("Plan:\n```\nR1 a 0 1k\n```\nFinal:\n```spice\nR2 b 0 2k\n```\nDone."), "R2 b 0 2k\n");
}

TEST(Extract, ProseOnlyFails) {
    try {
        extract_netlist("Rather than using a resistor, I would pick a current source.\nThank you.");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(std::string(e.what()), "no code block found");
    }
}

TEST(Extract, UnfencedLongestCardRun) {
    const auto text = extract_netlist("Try this:\nR1 a 0 1k\n\nThe full netlist is\n* amp\nVdd Vdd 0 5\nR1 Vdd Vout 10k\n"
                                      "M1 Vout Vin 0 0 nmos_model w=1e-6 l=1e-6\n.end\nThat is all.");
    EXPECT_EQ(text, "* amp\nVdd Vdd 0 5\nR1 Vdd Vout 10k\nM1 Vout Vin 0 0 nmos_model w=1e-6 l=1e-6\n.end\n");
}

TEST(Extract, NormalizesPySpiceUnitsAndDirectives) {
    const auto text = extract_netlist(
        "```\nR1 Vout circuit.gnd 10@u_kOhm\nC1 a b 5@u_pF\nV1 a 0 1.5@u_V\n.op\n.control\nrun\n.endc\n.tran 1n 1u\n```");
    EXPECT_EQ(text, "R1 Vout 0 10k\nC1 a b 5p\nV1 a 0 1.5\n");
}

TEST(Splice, IncludeReplacedByDefinition) {
    const auto lib = opamp_library();
    const auto text = splice_tools(kIntegrator, lib, {lib.entries.at(11)});
    EXPECT_FALSE(contains(text, ".include"));
    EXPECT_EQ(text.find("* integrator\n"), 0u);
    EXPECT_TRUE(contains(text, ".subckt SingleStageOpamp Vinp Vinn Vout"));
    EXPECT_NO_THROW(flatten(parse_netlist(text)));
    // Already defined: left as is.
    EXPECT_EQ(splice_tools(text, lib, {lib.entries.at(11)}), text);
}

TEST(Loop, FeedbackThenSuccess) {
    ReplayGenerator g({fenced(kFloating), fenced(read_fixture("amp_pass.sp"))});
    ToolLibrary lib;
    const auto r = run_design_loop(task_by_id(1), g, lib);
    EXPECT_TRUE(r.success);
    ASSERT_EQ(r.attempts.size(), 2u);
    const auto& diag = r.attempts[0].outcome->first_failure()->feedback;
    EXPECT_TRUE(contains(diag, "floating node"));
    EXPECT_TRUE(contains(r.attempts[1].prompt_messages.back().content, diag));
    EXPECT_EQ(lib.entries.count(1), 1u);
    EXPECT_GT(r.tokens_estimate, 0);
}

TEST(Loop, CapOnPersistentFailure) {
    ReplayGenerator g({fenced(kFloating), fenced(kFloating), fenced(kFloating), fenced(kFloating)});
    ToolLibrary lib;
    const auto r = run_design_loop(task_by_id(1), g, lib);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.attempts.size(), 3u);
    EXPECT_EQ(g.consumed(), 3u);
    EXPECT_TRUE(lib.entries.empty());
}

TEST(Loop, ConversationGrowsByTwoMessages) {
    ReplayGenerator g({fenced(kFloating), "no netlist here", fenced(kFloating)});
    ToolLibrary lib;
    const auto r = run_design_loop(task_by_id(1), g, lib);
    ASSERT_EQ(r.attempts.size(), 3u);
    for (std::size_t i = 1; i < r.attempts.size(); ++i) {
        const auto& prev = r.attempts[i - 1].prompt_messages;
        const auto& cur = r.attempts[i].prompt_messages;
        ASSERT_EQ(cur.size(), prev.size() + 2);
        EXPECT_TRUE(std::equal(prev.begin(), prev.end(), cur.begin()));
        EXPECT_EQ(cur[prev.size()].content, r.attempts[i - 1].raw_reply);
    }
    EXPECT_EQ(r.attempts[1].extraction_error, "no code block found");
    EXPECT_FALSE(r.attempts[1].outcome);
    EXPECT_FALSE(r.attempts[1].extracted_netlist);
    EXPECT_TRUE(contains(r.attempts[2].prompt_messages.back().content, "no code block found"));
}

TEST(Loop, CompositeCapAndNoLibraryMutation) {
    auto lib = opamp_library();
    const auto before = lib;
    ReplayGenerator g({"[11]", fenced(kFloating), fenced(kFloating), fenced(kFloating)});
    const auto r = run_design_loop(task_by_id(18), g, lib);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.attempts.size(), 2u);
    EXPECT_TRUE(lib.same_as(before));
}

TEST(Loop, CompositeIntegratorWithArchivedOpamp) {
    auto lib = opamp_library();
    const auto before = lib;
    ReplayGenerator g({"I would choose [11].", fenced(kIntegrator)});
    const auto r = run_design_loop(task_by_id(18), g, lib);
    EXPECT_TRUE(r.success) << (r.attempts.back().outcome && r.attempts.back().outcome->first_failure()
                                   ? r.attempts.back().outcome->first_failure()->feedback
                                   : r.attempts.back().extraction_error);
    EXPECT_EQ(r.attempts.size(), 1u);
    EXPECT_EQ(r.selected_tools, std::vector<int>{11});
    EXPECT_TRUE(contains(r.attempts[0].prompt_messages[1].content, "X1 Vinp Vinn Vout SingleStageOpamp"));
    EXPECT_TRUE(lib.same_as(before));
}

TEST(Loop, FrozenLibraryIsNotArchived) {
    ReplayGenerator g({fenced(read_fixture("amp_pass.sp"))});
    ToolLibrary lib;
    DesignOptions o;
    o.freeze_library = true;
    EXPECT_TRUE(run_design_loop(task_by_id(1), g, lib, o).success);
    EXPECT_TRUE(lib.entries.empty());
}

TEST(Loop, TransportFailureAbortsTrial) {
    ReplayGenerator g({fenced(kFloating)});
    ToolLibrary lib;
    const auto r = run_design_loop(task_by_id(1), g, lib);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.attempts.size(), 1u);
    EXPECT_TRUE(contains(r.transport_error, "exhausted"));
}

TEST(Loop, DeterministicAndSerializable) {
    auto run = [] {
        ReplayGenerator g({fenced(kFloating), fenced(read_fixture("amp_pass.sp"))});
        ToolLibrary lib;
        return run_design_loop(task_by_id(1), g, lib);
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(to_json_line(a), to_json_line(b));
    const auto back = trial_from_json_line(to_json_line(a));
    EXPECT_TRUE(back == a);
    EXPECT_EQ(to_json_line(back), to_json_line(a));
    EXPECT_THROW(trial_from_json_line("{"), ParseError);
}
