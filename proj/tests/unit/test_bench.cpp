#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/fixtures.hpp"
#include "anaflow/bench.hpp"
#include "anaflow/errors.hpp"

using namespace anaflow;
using anaflow::testing::read_fixture;

namespace {

double round1(double percent) { return std::round(percent * 10.0) / 10.0; }

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::string fenced(const std::string& body) { return "```\n" + body + "```\n"; }

const char* kFloating = "* floating\nVdd Vdd 0 5\nR1 Vdd Vout 10k\nR2 Vout X 1k\nVin Vin 0 1\nR3 Vin 0 1k\n";

// Trials 1..c succeed on their first reply; the rest never do.
GeneratorFactory scripted(int c) {
    return [c](const TaskSpec&, int trial) -> std::unique_ptr<Generator> {
        if (trial <= c) return std::make_unique<ReplayGenerator>(std::vector<std::string>{fenced(read_fixture("amp_pass.sp"))});
        return std::make_unique<ReplayGenerator>(std::vector<std::string>(3, fenced(kFloating)));
    };
}

std::string temp_path(const std::string& name) {
    auto p = (std::filesystem::temp_directory_path() / name).string();
    std::filesystem::remove(p);
    return p;
}

double exact_wilson_coverage(int n, double p) {
    double cov = 0.0;
    for (int c = 0; c <= n; ++c) {
        const auto [lo, hi] = wilson_interval(c, n, 0.90);
        if (lo <= p && p <= hi) cov += std::exp(std::lgamma(n + 1) - std::lgamma(c + 1) - std::lgamma(n - c + 1)) *
                                       std::pow(p, c) * std::pow(1 - p, n - c);
    }
    return cov;
}

}  // namespace

TEST(PassAtK, TableValues) {
    const std::vector<std::tuple<int, double, double>> rows = {
        {21, 70.0, 99.9}, {1, 3.3, 16.7}, {9, 30.0, 85.7}, {15, 50.0, 97.9}, {3, 10.0, 43.3}};
    for (const auto& [c, p1, p5] : rows) {
        EXPECT_DOUBLE_EQ(round1(100 * pass_at_k(30, c, 1)), p1) << c;
        EXPECT_DOUBLE_EQ(round1(100 * pass_at_k(30, c, 5)), p5) << c;
    }
    EXPECT_NEAR(pass_at_k(30, 1, 5), 5.0 / 30.0, 1e-15);
}

TEST(PassAtK, Boundaries) {
    for (int n : {1, 5, 30})
        for (int k = 1; k <= n; ++k) {
            EXPECT_EQ(pass_at_k(n, 0, k), 0.0);
            EXPECT_EQ(pass_at_k(n, n, k), 1.0);
        }
    EXPECT_EQ(pass_at_k(30, 27, 5), 1.0);
    EXPECT_THROW(pass_at_k(30, 31, 1), ConfigError);
    EXPECT_THROW(pass_at_k(30, 3, 0), ConfigError);
    EXPECT_THROW(pass_at_k(5, 3, 6), ConfigError);
    EXPECT_THROW(pass_at_k(0, 0, 1), ConfigError);
}

TEST(PassAtK, MatchesBinomialRatio) {
    for (int n = 1; n <= 40; ++n)
        for (int c = 0; c <= n; ++c)
            for (int k = 1; k <= n; ++k) {
                const double ratio = n - c < k ? 0.0
                                               : std::exp(std::lgamma(n - c + 1) - std::lgamma(k + 1) - std::lgamma(n - c - k + 1) -
                                                          (std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)));
                EXPECT_NEAR(pass_at_k(n, c, k), 1.0 - ratio, 1e-12);
            }
}

TEST(PassAtK, Monotone) {
    for (int n = 1; n <= 30; ++n)
        for (int c = 0; c <= n; ++c)
            for (int k = 1; k <= n; ++k) {
                if (c < n) EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c + 1, k));
                if (k < n) EXPECT_LE(pass_at_k(n, c, k), pass_at_k(n, c, k + 1));
            }
}

TEST(PassAtK, MonteCarloUnbiased) {
    std::mt19937_64 rng(20240601);
    constexpr int kDraws = 100000;
    for (auto [n, c, k] : std::vector<std::tuple<int, int, int>>{{30, 21, 5}, {30, 1, 5}, {15, 3, 5}, {10, 5, 3}, {30, 9, 1}}) {
        std::vector<int> trials(n, 0);
        std::fill(trials.begin(), trials.begin() + c, 1);
        int hits = 0;
        for (int d = 0; d < kDraws; ++d) {
            // Partial Fisher-Yates: the first k slots are a uniform k-subset.
            bool any = false;
            for (int i = 0; i < k; ++i) {
                std::uniform_int_distribution<int> pick(i, n - 1);
                std::swap(trials[i], trials[pick(rng)]);
                any = any || trials[i];
            }
            hits += any;
        }
        const double p = pass_at_k(n, c, k);
        const double sigma = std::sqrt(p * (1 - p) / kDraws);
        EXPECT_NEAR(static_cast<double>(hits) / kDraws, p, 3 * sigma + 1e-12) << n << " " << c << " " << k;
    }
}

TEST(Wilson, ReferenceValues) {
    // Reference bounds from an independent evaluation (Python statistics.NormalDist).
    const auto [lo, hi] = wilson_interval(15, 30, 0.90);
    EXPECT_NEAR(lo, 0.3561908311988599, 1e-12);
    EXPECT_NEAR(hi, 0.64380916880114, 1e-12);
    EXPECT_DOUBLE_EQ((lo + hi) / 2, 0.5);
    const auto [lo21, hi21] = wilson_interval(21, 30, 0.90);
    EXPECT_NEAR(lo21, 0.5506175038264008, 1e-12);
    EXPECT_NEAR(hi21, 0.8162927729235593, 1e-12);
}

TEST(Wilson, Boundaries) {
    const auto [lo0, hi0] = wilson_interval(0, 30, 0.90);
    EXPECT_EQ(lo0, 0.0);
    EXPECT_NEAR(hi0, 0.08272430812509922, 1e-12);
    EXPECT_EQ(wilson_interval(30, 30, 0.90).second, 1.0);
    for (int n = 1; n <= 40; ++n)
        for (int c = 0; c <= n; ++c) {
            const auto [lo, hi] = wilson_interval(c, n, 0.90);
            const double p = static_cast<double>(c) / n;
            EXPECT_LE(0.0, lo);
            EXPECT_LE(lo, p);
            EXPECT_LE(p, hi);
            EXPECT_LE(hi, 1.0);
        }
    EXPECT_THROW(wilson_interval(3, 0, 0.9), ConfigError);
    EXPECT_THROW(wilson_interval(3, 10, 1.0), ConfigError);
}

TEST(Wilson, ExactCoverage) {
    for (int n : {15, 30})
        for (double p : {0.1, 0.5, 0.9}) EXPECT_GE(exact_wilson_coverage(n, p), 0.88) << n << " " << p;
}

TEST(Report, SingleTaskRow) {
    TrialLedger ledger;
    for (int t = 1; t <= 30; ++t) {
        TrialRecord r;
        r.task_id = 9;
        r.success = t <= 9;
        ledger.records[{9, t}] = r;
    }
    ledger.n_per_task = 30;
    const auto report = compute_report(ledger, {9});
    EXPECT_TRUE(contains(render_leaderboard(report), "30.0  85.7")) << render_leaderboard(report);
    EXPECT_EQ(report.num_solved, 1);
}

TEST(Report, EmptyHasHeaderOnly) {
    const auto text = render_leaderboard(compute_report({}, {}));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_TRUE(contains(text, "Pass@1"));
}

TEST(Report, AverageAndSolved) {
    TrialLedger ledger;
    for (int t = 1; t <= 30; ++t) {
        ledger.records[{1, t}].success = true;
        ledger.records[{2, t}].success = false;
    }
    const auto report = compute_report(ledger, {1, 2});
    EXPECT_DOUBLE_EQ(report.avg_pass_at.at(1), 50.0);
    EXPECT_EQ(report.num_solved, 1);
    const auto text = render_leaderboard(report);
    EXPECT_TRUE(contains(text, "Avg         50.0  50.0"));
    EXPECT_TRUE(contains(text, "# Solved       1"));
    const auto csv = render_leaderboard_csv(report);
    EXPECT_TRUE(contains(csv, "1,30,30,100.0,100.0,"));
    EXPECT_TRUE(contains(csv, "Avg,,,50.0,50.0,,"));
}

TEST(Bench, ScriptedTwentyOneOfThirty) {
    const std::vector<TaskSpec> tasks{task_by_id(1)};
    BenchOptions o;
    o.concurrency = 4;
    const auto res = run_benchmark(tasks, scripted(21), 30, o);
    const auto& s = res.report.per_task.at(1);
    EXPECT_EQ(s.c, 21);
    EXPECT_EQ(round1(s.pass_at.at(1)), 70.0);
    EXPECT_EQ(round1(s.pass_at.at(5)), 99.9);
    EXPECT_EQ(res.ledger.records.size(), 30u);
    EXPECT_EQ(res.library.entries.count(1), 1u);
}

TEST(Bench, AllFailing) {
    const auto res = run_benchmark({task_by_id(1)}, scripted(0), 6, {});
    EXPECT_EQ(res.report.num_solved, 0);
    EXPECT_EQ(res.report.per_task.at(1).pass_at.at(5), 0.0);
    EXPECT_TRUE(res.library.entries.empty());
}

TEST(Bench, FrozenLibraryStaysEmpty) {
    BenchOptions o;
    o.freeze_library = true;
    const auto res = run_benchmark({task_by_id(1)}, scripted(3), 5, o);
    EXPECT_TRUE(res.library.entries.empty());
}

TEST(Bench, FactoryFailureIsRecordedPerTrial) {
    GeneratorFactory broken = [](const TaskSpec&, int) -> std::unique_ptr<Generator> {
        throw ConfigError("no script");
    };
    const auto res = run_benchmark({task_by_id(1)}, broken, 2, BenchOptions{.ks = {1}});
    EXPECT_EQ(res.ledger.records.size(), 2u);
    EXPECT_TRUE(contains(res.ledger.records.at({1, 1}).transport_error, "no script"));
}

TEST(Bench, RejectsBadArguments) {
    EXPECT_THROW(run_benchmark({task_by_id(1)}, scripted(1), 0, {}), ConfigError);
    EXPECT_THROW(run_benchmark({task_by_id(1)}, scripted(1), 3, {}), ConfigError);  // k = 5 > n
}

TEST(Bench, ResumeAfterInterruptionMatchesUninterrupted) {
    const std::vector<TaskSpec> tasks{task_by_id(1), task_by_id(6)};
    const auto full_path = temp_path("anaflow_ledger_full.jsonl");
    BenchOptions o;
    o.ledger_path = full_path;
    o.concurrency = 3;
    const auto full = run_benchmark(tasks, scripted(4), 10, o);

    const auto cut_path = temp_path("anaflow_ledger_cut.jsonl");
    BenchOptions cut = o;
    cut.ledger_path = cut_path;
    int written = 0;
    cut.on_record = [&](int, int, const TrialRecord&) {
        if (++written == 7) throw std::runtime_error("interrupted");
    };
    EXPECT_THROW(run_benchmark(tasks, scripted(4), 10, cut), std::runtime_error);
    const auto partial = read_ledger(cut_path).records.size();
    EXPECT_GE(partial, 7u);
    EXPECT_LT(partial, 20u);
    {
        std::ofstream torn(cut_path, std::ios::app);
        torn << R"({"task_id":6,"trial":9,"rec)";
    }
    BenchOptions resume = o;
    resume.ledger_path = cut_path;
    const auto resumed = run_benchmark(tasks, scripted(4), 10, resume);
    EXPECT_TRUE(resumed.ledger == full.ledger);
    EXPECT_TRUE(read_ledger(cut_path) == read_ledger(full_path));
    EXPECT_EQ(render_leaderboard(resumed.report), render_leaderboard(full.report));
    std::filesystem::remove(full_path);
    std::filesystem::remove(cut_path);
}

TEST(Bench, MalformedLedgerLineIsError) {
    const auto path = temp_path("anaflow_ledger_bad.jsonl");
    {
        std::ofstream out(path);
        out << "not json\n";
    }
    EXPECT_THROW(read_ledger(path), ParseError);
    std::filesystem::remove(path);
}
