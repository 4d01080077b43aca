#include "gvfn/runner.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace gvfn {

std::size_t worker_count() {
  if (const char* env = std::getenv("GVFN_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::string sha1_hex(std::string_view data) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  std::ostringstream os;
  for (unsigned char b : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  return os.str();
}

std::string git_blob_sha1(std::string_view data) {
  std::string buf = "blob " + std::to_string(data.size());
  buf.push_back('\0');
  buf.append(data);
  return sha1_hex(buf);
}

std::string executable_blob_sha1() {
  std::ifstream in("/proc/self/exe", std::ios::binary);
  if (!in) return "unknown";
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_sha1(ss.str());
}

void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << "run_id,seed,step,metric,value\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.run_id << ',' << r.seed << ',' << r.step << ',' << r.metric << ',';
    if (r.value) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.value);
      os << buf;
    }
    os << '\n';
  }
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json result_json(const RunResult& r) {
  Json j = {{"seed", r.seed}, {"status", r.failed ? "failed" : "ok"}};
  if (r.failed) j["error"] = r.error;
  if (!r.primary_metric.empty()) {
    j["metric"] = r.primary_metric;
    j["final_value"] = r.final_value ? Json(*r.final_value) : Json(nullptr);
  }
  for (const auto& [k, v] : r.summary) j["summary"][k] = v;
  return j;
}

Json manifest_base(const ExperimentConfig& cfg) {
  return {{"run_id", cfg.run_id},
          {"experiment", to_string(cfg.kind)},
          {"config_sha1", sha1_hex(cfg.source.dump())},
          {"binary_sha1", executable_blob_sha1()},
          {"started_utc", utc_now()}};
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, std::optional<std::uint64_t> seed,
                         std::size_t workers) {
  const auto start = std::chrono::steady_clock::now();
  Json manifest = manifest_base(cfg);
  const std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : cfg.seeds;
  RunReport rep;
  rep.results.resize(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) { rep.results[i] = run_single(cfg, seeds[i]); });
  rep.wall_clock_seconds = seconds_since(start);
  if (out_dir.empty()) return rep;

  std::filesystem::create_directories(out_dir);
  std::vector<MetricRow> rows;
  for (const auto& r : rep.results) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  write_file(std::filesystem::path(out_dir) / "metrics.csv", [&](std::ostream& os) { write_metric_csv(os, rows); });
  manifest["wall_clock_seconds"] = rep.wall_clock_seconds;
  manifest["runs"] = Json::array();
  for (const auto& r : rep.results) manifest["runs"].push_back(result_json(r));
  write_file(std::filesystem::path(out_dir) / "manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  return rep;
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(values.size()))};
}

std::optional<std::size_t> select_best(const std::vector<CellSummary>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].failed) continue;
    if (!best || cells[i].mean < cells[*best].mean ||
        (cells[i].mean == cells[*best].mean && cells[i].alpha < cells[*best].alpha)) {
      best = i;
    }
  }
  return best;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, std::size_t workers) {
  const auto start = std::chrono::steady_clock::now();
  SweepReport rep;
  rep.cells = expand_sweep(cfg);
  const std::size_t nc = rep.cells.size();
  rep.results.assign(nc, {});
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < nc; ++c) {
    rep.results[c].resize(rep.cells[c].config.seeds.size());
    for (std::size_t s = 0; s < rep.results[c].size(); ++s) jobs.emplace_back(c, s);
  }
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto [c, s] = jobs[i];
    ExperimentConfig cell = rep.cells[c].config;
    cell.run_id = cfg.run_id + "/c" + std::to_string(c);
    rep.results[c][s] = run_single(cell, cell.seeds[s]);
  });

  for (std::size_t c = 0; c < nc; ++c) {
    CellSummary sum;
    sum.label = rep.cells[c].label;
    sum.alpha = rep.cells[c].config.learner.alpha;
    std::vector<double> finals;
    for (const auto& r : rep.results[c]) {
      if (r.failed || !r.final_value) {
        ++sum.failed_seeds;
      } else {
        finals.push_back(*r.final_value);
      }
    }
    sum.ok = finals.size();
    sum.failed = sum.failed_seeds > 0 || finals.empty();
    std::tie(sum.mean, sum.standard_error) = mean_and_se(finals);
    rep.summary.push_back(sum);
  }
  rep.best = select_best(rep.summary);
  rep.wall_clock_seconds = seconds_since(start);
  if (out_dir.empty()) return rep;

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  std::vector<MetricRow> rows;
  for (const auto& cell : rep.results)
    for (const auto& r : cell) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  write_file(dir / "metrics.csv", [&](std::ostream& os) { write_metric_csv(os, rows); });
  write_file(dir / "summary.csv", [&](std::ostream& os) {
    os << "cell,label,metric,seeds_ok,seeds_failed,mean,standard_error,failed,best\n";
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& s = rep.summary[c];
      const std::string metric = rep.results[c].empty() ? "" : rep.results[c].front().primary_metric;
      os << c << ",\"" << s.label << "\"," << metric << ',' << s.ok << ',' << s.failed_seeds << ','
         << std::setprecision(17) << s.mean << ',' << s.standard_error << ',' << (s.failed ? 1 : 0) << ','
         << (rep.best == c ? 1 : 0) << '\n';
    }
  });
  Json best = Json::object();
  if (rep.best) {
    best["cell"] = *rep.best;
    best["label"] = rep.summary[*rep.best].label;
    best["mean"] = rep.summary[*rep.best].mean;
    best["standard_error"] = rep.summary[*rep.best].standard_error;
    for (const auto& [path, value] : rep.cells[*rep.best].overrides) best["overrides"][path] = value;
  }
  write_file(dir / "best.json", [&](std::ostream& os) { os << best.dump(2) << '\n'; });
  Json manifest = manifest_base(cfg);
  manifest["wall_clock_seconds"] = rep.wall_clock_seconds;
  manifest["cells"] = Json::array();
  for (std::size_t c = 0; c < nc; ++c) {
    Json cj = {{"cell", c}, {"label", rep.cells[c].label}, {"runs", Json::array()}};
    for (const auto& r : rep.results[c]) cj["runs"].push_back(result_json(r));
    manifest["cells"].push_back(cj);
  }
  write_file(dir / "manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  return rep;
}

}  // namespace gvfn
