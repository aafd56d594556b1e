#include "anaflow/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "anaflow/errors.hpp"

namespace anaflow {

using nlohmann::json;

double pass_at_k(int n, int c, int k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n)
        throw ConfigError(fmt::format("pass@k needs 0 <= c <= n and 1 <= k <= n (n={}, c={}, k={})", n, c, k));
    if (n - c < k) return 1.0;
    double miss = 1.0;
    for (int i = 0; i < k; ++i) miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - miss;
}

std::pair<double, double> wilson_interval(int c, int n, double confidence) {
    if (n < 1 || c < 0 || c > n || !(confidence > 0.0 && confidence < 1.0))
        throw ConfigError(fmt::format("wilson interval needs 0 <= c <= n, n >= 1, 0 < confidence < 1 (c={}, n={})", c, n));
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + confidence / 2.0);
    const double p = static_cast<double>(c) / n;
    const double z2n = z * z / n;
    const double center = (p + z2n / 2.0) / (1.0 + z2n);
    const double half = z / (1.0 + z2n) * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n));
    const double lo = c == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
    const double hi = c == n ? 1.0 : std::clamp(center + half, p, 1.0);
    return {lo, hi};
}

std::string ledger_line(int task_id, int trial, const TrialRecord& record) {
    return fmt::format("{{\"task_id\":{},\"trial\":{},\"record\":{}}}", task_id, trial, to_json_line(record));
}

namespace {

// Returns the ledger and the byte length of its intact prefix.
std::pair<TrialLedger, std::size_t> scan_ledger(const std::string& path) {
    TrialLedger ledger;
    std::ifstream in(path, std::ios::binary);
    if (!in) return {ledger, 0};
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::size_t pos = 0, good = 0;
    int line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // torn append
        const auto line = std::string_view(text).substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            good = pos;
            continue;
        }
        try {
            const auto j = json::parse(line);
            const int task = j.at("task_id");
            const int trial = j.at("trial");
            auto record = trial_from_json_line(j.at("record").dump());
            if (!ledger.records.emplace(std::make_pair(task, trial), std::move(record)).second)
                throw ParseError(fmt::format("ledger line {}: duplicate record for task {} trial {}", line_no, task, trial));
        } catch (const json::exception& e) {
            throw ParseError(fmt::format("ledger line {}: {}", line_no, e.what()));
        }
        good = pos;
    }
    for (const auto& [key, rec] : ledger.records) ledger.n_per_task = std::max(ledger.n_per_task, key.second);
    return {ledger, good};
}

}  // namespace

TrialLedger read_ledger(const std::string& path) { return scan_ledger(path).first; }

BenchReport compute_report(const TrialLedger& ledger, const std::vector<int>& task_ids, const std::vector<int>& ks) {
    BenchReport report;
    report.ks = ks;
    report.n_per_task = ledger.n_per_task;
    for (int id : task_ids) {
        TaskStats s;
        for (auto it = ledger.records.lower_bound({id, 0}); it != ledger.records.end() && it->first.first == id; ++it) {
            ++s.n;
            s.c += it->second.success ? 1 : 0;
        }
        if (s.n == 0) continue;
        for (int k : ks) s.pass_at[k] = 100.0 * pass_at_k(s.n, s.c, k);
        s.wilson_90 = wilson_interval(s.c, s.n, 0.90);
        report.num_solved += s.c >= 1 ? 1 : 0;
        report.per_task.emplace(id, std::move(s));
    }
    for (int k : ks) {
        double sum = 0.0;
        for (const auto& [id, s] : report.per_task) sum += s.pass_at.at(k);
        report.avg_pass_at[k] = report.per_task.empty() ? 0.0 : sum / report.per_task.size();
    }
    return report;
}

std::string render_leaderboard(const BenchReport& report) {
    std::string out = fmt::format("n = {} trials per task\n", report.n_per_task);
    out += fmt::format("{:<10}", "Task");
    for (std::size_t i = 0; i < report.ks.size(); ++i)
        out += i == 0 ? fmt::format("{:>6}", fmt::format("Pass@{}", report.ks[i]))
                      : fmt::format("  {:<6}", fmt::format("Pass@{}", report.ks[i]));
    out += "\n";
    auto row = [&](const std::string& label, const std::map<int, double>& values) {
        std::string line = fmt::format("{:<10}", label);
        for (std::size_t i = 0; i < report.ks.size(); ++i)
            line += i == 0 ? fmt::format("{:>6.1f}", values.at(report.ks[i]))
                          : fmt::format("  {:<6.1f}", values.at(report.ks[i]));
        while (!line.empty() && line.back() == ' ') line.pop_back();
        return line + "\n";
    };
    for (const auto& [id, s] : report.per_task) out += row(std::to_string(id), s.pass_at);
    if (!report.per_task.empty()) {
        out += row("Avg", report.avg_pass_at);
        out += fmt::format("{:<10}{:>6}\n", "# Solved", report.num_solved);
    }
    return out;
}

std::string render_leaderboard_csv(const BenchReport& report) {
    std::string out = "task,n,c";
    for (int k : report.ks) out += fmt::format(",pass_at_{}", k);
    out += ",wilson90_lo,wilson90_hi\n";
    for (const auto& [id, s] : report.per_task) {
        out += fmt::format("{},{},{}", id, s.n, s.c);
        for (int k : report.ks) out += fmt::format(",{:.1f}", s.pass_at.at(k));
        out += fmt::format(",{:.4f},{:.4f}\n", s.wilson_90.first, s.wilson_90.second);
    }
    out += "Avg,,";
    for (int k : report.ks) out += fmt::format(",{:.1f}", report.avg_pass_at.at(k));
    out += ",,\n";
    out += fmt::format("# Solved,,{}", report.num_solved);
    for (std::size_t i = 0; i < report.ks.size(); ++i) out += ",";
    out += ",,\n";
    return out;
}

namespace {

class Appender {
public:
    Appender(std::string path, std::size_t intact_bytes) : path_(std::move(path)) {
        if (path_.empty()) return;
        if (std::filesystem::exists(path_)) std::filesystem::resize_file(path_, intact_bytes);
        out_.open(path_, std::ios::app | std::ios::binary);
        if (!out_) throw ConfigError("cannot open ledger '" + path_ + "'");
    }

    void append(int task, int trial, const TrialRecord& rec, const BenchOptions& options) {
        std::lock_guard lock(mu_);
        if (!path_.empty()) {
            out_ << ledger_line(task, trial, rec) << '\n';
            out_.flush();
            if (!out_) throw ConfigError("write to ledger '" + path_ + "' failed");
        }
        if (options.on_record) options.on_record(task, trial, rec);
    }

private:
    std::string path_;
    std::ofstream out_;
    std::mutex mu_;
};

void run_phase(const std::vector<std::pair<const TaskSpec*, int>>& jobs, const GeneratorFactory& factory,
               const ToolLibrary& snapshot, const BenchOptions& options, Appender& appender, TrialLedger& ledger) {
    std::vector<TrialRecord> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
            const auto& [task, trial] = jobs[i];
            try {
                TrialRecord rec;
                try {
                    auto gen = factory(*task, trial);
                    rec = run_design_trial(*task, *gen, snapshot, options.design);
                } catch (const ConfigError& e) {
                    rec.task_id = task->id;
                    rec.transport_error = std::string("generator unavailable: ") + e.what();
                }
                appender.append(task->id, trial, rec, options);
                results[i] = std::move(rec);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(options.concurrency, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    for (std::size_t i = 0; i < jobs.size(); ++i)
        ledger.records.emplace(std::make_pair(jobs[i].first->id, jobs[i].second), std::move(results[i]));
}

}  // namespace

BenchResult run_benchmark(const std::vector<TaskSpec>& tasks, const GeneratorFactory& factory, int n,
                          BenchOptions options) {
    if (n < 1) throw ConfigError("n must be at least 1");
    if (options.concurrency < 1) throw ConfigError("concurrency must be at least 1");
    for (int k : options.ks)
        if (k < 1 || k > n) throw ConfigError(fmt::format("k = {} is outside 1..n (n = {})", k, n));

    BenchResult result;
    std::size_t intact = 0;
    if (!options.ledger_path.empty()) std::tie(result.ledger, intact) = scan_ledger(options.ledger_path);
    result.ledger.n_per_task = n;
    Appender appender(options.ledger_path, intact);

    std::vector<const TaskSpec*> basic, composite;
    for (const auto& t : tasks) (t.composite ? composite : basic).push_back(&t);
    auto pending = [&](const std::vector<const TaskSpec*>& group) {
        std::vector<std::pair<const TaskSpec*, int>> jobs;
        for (const auto* t : group)
            for (int trial = 1; trial <= n; ++trial)
                if (!result.ledger.records.count({t->id, trial})) jobs.emplace_back(t, trial);
        return jobs;
    };

    result.library = options.library;
    run_phase(pending(basic), factory, result.library, options, appender, result.ledger);
    if (!options.freeze_library) {
        for (const auto* t : basic)
            for (int trial = 1; trial <= n; ++trial) {
                auto it = result.ledger.records.find({t->id, trial});
                if (it != result.ledger.records.end()) archive_trial(result.library, *t, it->second);
            }
    }
    run_phase(pending(composite), factory, result.library, options, appender, result.ledger);

    // Trials beyond n from an earlier, larger run stay in the file but are
    // not part of this report.
    for (auto it = result.ledger.records.begin(); it != result.ledger.records.end();)
        it = it->first.second > n ? result.ledger.records.erase(it) : std::next(it);
    std::vector<int> ids;
    for (const auto& t : tasks) ids.push_back(t.id);
    result.report = compute_report(result.ledger, ids, options.ks);
    result.report.n_per_task = n;
    return result;
}

}  // namespace anaflow
