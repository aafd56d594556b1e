#pragma once

// Benchmark harness: n trials per task, Pass@k with Wilson intervals, a
// resumable JSON-lines trial ledger and leaderboard rendering.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "anaflow/agent.hpp"

namespace anaflow {

/// 1 - C(n-c, k) / C(n, k) via the product form. Throws ConfigError unless
/// 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

/// Wilson score interval for c successes in n draws at the given two-sided
/// confidence. Throws ConfigError on bad arguments.
std::pair<double, double> wilson_interval(int c, int n, double confidence);

struct TrialLedger {
    std::map<std::pair<int, int>, TrialRecord> records;  // (task_id, trial 1..n)
    int n_per_task = 0;

    bool operator==(const TrialLedger&) const = default;
};

std::string ledger_line(int task_id, int trial, const TrialRecord& record);

/// Reads a ledger file. A torn final line (an interrupted append) is
/// ignored; any other malformed line is a ParseError. A missing file is an
/// empty ledger.
TrialLedger read_ledger(const std::string& path);

struct TaskStats {
    int n = 0;
    int c = 0;
    std::map<int, double> pass_at;  // k -> percent
    std::pair<double, double> wilson_90{0.0, 0.0};
};

struct BenchReport {
    int n_per_task = 0;
    std::vector<int> ks{1, 5};
    std::map<int, TaskStats> per_task;
    std::map<int, double> avg_pass_at;  // k -> percent
    int num_solved = 0;
};

/// Pure function of the ledger. Every k must not exceed the trial count of
/// any task in the report.
BenchReport compute_report(const TrialLedger& ledger, const std::vector<int>& task_ids, const std::vector<int>& ks = {1, 5});

std::string render_leaderboard(const BenchReport& report);
std::string render_leaderboard_csv(const BenchReport& report);

using GeneratorFactory = std::function<std::unique_ptr<Generator>(const TaskSpec& task, int trial)>;

struct BenchOptions {
    int concurrency = 1;
    std::vector<int> ks{1, 5};
    std::string ledger_path;  // empty: in memory only
    bool freeze_library = false;
    ToolLibrary library;
    DesignOptions design;
    /// Called after each new record is appended, from the appending thread.
    std::function<void(int task_id, int trial, const TrialRecord&)> on_record;
};

struct BenchResult {
    TrialLedger ledger;
    BenchReport report;
    ToolLibrary library;
};

/// Runs the missing (task, trial) pairs. Basic tasks run first; their
/// successes are archived in (task, trial) order before composite tasks
/// start, so the library and the ledger do not depend on scheduling.
BenchResult run_benchmark(const std::vector<TaskSpec>& tasks, const GeneratorFactory& factory, int n,
                          BenchOptions options);

}  // namespace anaflow
