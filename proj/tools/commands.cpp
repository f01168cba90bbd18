#include "commands.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "fedboost/csv.hpp"
#include "fedboost/error.hpp"
#include "fedboost/eval.hpp"
#include "fedboost/plot.hpp"
#include "fedboost/simgen.hpp"
#include "fedboost/transport.hpp"

namespace fedboost::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string replicate_dir(std::size_t r) { return "rep_" + std::to_string(r + 1); }

pipeline::AnalysisOptions options_for(const config::AnalysisSettings& a, const std::string& method) {
  pipeline::AnalysisOptions o;
  o.mode = parse_boost_mode(method);
  o.buffer = a.buffer;
  o.nu = a.nu;
  o.steps = a.steps;
  o.model_size = a.model_size;
  o.standardize = a.standardize;
  return o;
}

// Site processes for one replicate: this executable re-run as `site`.
class SiteProcesses {
 public:
  SiteProcesses(const std::vector<fs::path>& data, const fs::path& run_dir, std::uint64_t min_n) {
    fs::create_directories(run_dir);
    const auto self = fs::read_symlink("/proc/self/exe");
    for (std::size_t l = 0; l < data.size(); ++l) {
      const auto port_file = run_dir / ("site_" + std::to_string(l + 1) + ".port");
      const auto log_file = run_dir / ("site_" + std::to_string(l + 1) + ".log");
      fs::remove(port_file);
      std::vector<std::string> args = {self.string(), "site",        "--data",
                                       data[l].string(), "--listen", "127.0.0.1:0",
                                       "--min-n",      std::to_string(min_n),
                                       "--port-file",  port_file.string()};
      const pid_t pid = ::fork();
      if (pid < 0) throw Error(ErrorCode::kTransport, "fork failed");
      if (pid == 0) {
        std::FILE* log = std::freopen(log_file.c_str(), "w", stderr);
        (void)log;
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(argv[0], argv.data());
        std::_Exit(127);
      }
      pids_.push_back(pid);
      port_files_.push_back(port_file);
    }
  }

  ~SiteProcesses() {
    for (pid_t pid : pids_) ::kill(pid, SIGTERM);
    for (pid_t pid : pids_) ::waitpid(pid, nullptr, 0);
  }

  SiteProcesses(const SiteProcesses&) = delete;
  SiteProcesses& operator=(const SiteProcesses&) = delete;

  std::vector<std::string> addresses() const {
    std::vector<std::string> out;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(20);
    for (std::size_t l = 0; l < port_files_.size(); ++l) {
      while (!fs::exists(port_files_[l])) {
        int status = 0;
        if (::waitpid(pids_[l], &status, WNOHANG) == pids_[l])
          throw Error(ErrorCode::kProviderError, "site " + std::to_string(l + 1) + " exited early");
        if (std::chrono::steady_clock::now() > deadline)
          throw Error(ErrorCode::kProviderError, "site " + std::to_string(l + 1) + " did not start");
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      std::ifstream in(port_files_[l]);
      int port = 0;
      in >> port;
      out.push_back("127.0.0.1:" + std::to_string(port));
    }
    return out;
  }

 private:
  std::vector<pid_t> pids_;
  std::vector<fs::path> port_files_;
};

Coordinator tcp_coordinator(const std::vector<std::string>& addresses) {
  std::vector<std::unique_ptr<Channel>> channels;
  for (const auto& a : addresses) channels.push_back(std::make_unique<TcpChannel>(Endpoint::parse(a)));
  return Coordinator(std::move(channels));
}

void write_baseline(const fs::path& dir, std::span<const SiteDataset> sites) {
  const auto meta = eval::univariable_meta_baseline(sites);
  eval::write_selection(dir / "selection.csv", meta.top, meta.estimate);
}

}  // namespace

std::string method_label(const std::string& method, std::size_t buffer) {
  return method == "block" ? "block-w" + std::to_string(buffer) : method;
}

int run_simulate(const SimulateArgs& args) {
  const auto cfg = config::load_run_config(args.scenario);
  const auto& s = cfg.scenario;
  for (std::size_t r = 0; r < s.replicates; ++r) {
    const auto rep = sim::generate_replicate(s, r);
    const auto dir = s.replicates == 1 ? args.out : args.out / replicate_dir(r);
    sim::write_replicate(dir, rep);
  }
  spdlog::info("wrote {} replicate(s) of '{}' to {}", s.replicates, s.name, args.out.string());
  return 0;
}

int run_site(const SiteArgs& args) {
  SiteNode node(load_site_csv(args.data), protocol::DisclosurePolicy{args.min_n});
  const auto meta = node.meta();
  spdlog::info("site loaded {} rows x {} covariates from {}", meta.n, meta.p, args.data.string());
  serve({Endpoint::parse(args.listen), args.port_file, args.max_connections}, node);
  return 0;
}

int run_analyze(const AnalyzeArgs& args) {
  pipeline::AnalysisOptions o;
  o.mode = parse_boost_mode(args.mode);
  o.buffer = args.buffer;
  o.nu = args.nu;
  o.steps = args.steps;
  o.model_size = args.model_size;
  o.standardize = parse_standardization(args.standardize);
  auto coordinator = tcp_coordinator(args.sites);
  const auto result = pipeline::analyze(coordinator, o);
  pipeline::write_analysis(args.out, result);
  spdlog::info("{} mode: {} covariates after {} steps, {} data calls, {} covariance values",
               args.mode, result.run.state.inclusion_order.size(), result.run.state.step,
               result.ledger.data_calls(), result.ledger.values_transferred);
  return 0;
}

int run_evaluate(const EvaluateArgs& args) {
  const auto rows = eval::summarize({args.results, args.truth, args.test}, args.out);
  for (const auto& r : rows)
    spdlog::info("{}: tpr={:.3f} fpr={:.3f} auc={:.3f}", r.group, r.mean_tpr, r.mean_fpr, r.mean_auc);
  return 0;
}

int run_bench_calls(const BenchCallsArgs& args) {
  const auto cfg = config::load_run_config(args.scenario);
  const auto& s = cfg.scenario;

  struct Variant {
    std::string label;
    pipeline::AnalysisOptions options;
  };
  std::vector<Variant> variants;
  for (const auto& m : args.modes) {
    const auto mode = parse_boost_mode(m);
    const std::vector<std::size_t> buffers =
        mode == BoostMode::kBlockHeuristic ? args.buffers : std::vector<std::size_t>{0};
    for (std::size_t w : buffers) {
      pipeline::AnalysisOptions o = options_for(cfg.analysis, m);
      o.buffer = w;
      o.steps = args.steps;
      o.model_size.reset();
      variants.push_back({method_label(m, w), o});
    }
  }

  const std::size_t k = cfg.analysis.model_size;
  // per variant, per step: sums of model size, calls, values
  std::vector<std::vector<std::array<double, 4>>> sums(variants.size(),
                                                       std::vector<std::array<double, 4>>(args.steps + 1));
  std::vector<std::array<double, 3>> at_k(variants.size());
  std::vector<plot::Series> scatter(variants.size());

  for (std::size_t r = 0; r < s.replicates; ++r) {
    const auto rep = sim::generate_replicate(s, r);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto result = pipeline::analyze_in_process(rep.sites, variants[v].options);
      bool found = false;
      for (const auto& rec : result.run.trace) {
        auto& cell = sums[v][rec.step];
        cell[0] += static_cast<double>(rec.model_size);
        cell[1] += static_cast<double>(rec.data_calls);
        cell[2] += static_cast<double>(rec.values);
        cell[3] += 1.0;
        if (!found && rec.model_size >= k) {
          found = true;
          at_k[v][0] += static_cast<double>(rec.data_calls - 1);  // covariance calls only
          at_k[v][1] += static_cast<double>(rec.values);
          at_k[v][2] += 1.0;
        }
      }
      scatter[v].label = variants[v].label;
      scatter[v].x.push_back(static_cast<double>(result.ledger.data_calls()));
      scatter[v].y.push_back(static_cast<double>(result.ledger.values_transferred));
    }
  }

  csv::Table per_step{{"method", "step", "runs", "mean_model_size", "mean_data_calls", "mean_values"}, {}};
  csv::Table summary{{"method", "model_size", "runs_reaching", "mean_covariance_calls", "mean_values"}, {}};
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t st = 0; st <= args.steps; ++st) {
      const auto& c = sums[v][st];
      if (c[3] == 0.0) continue;
      per_step.rows.push_back({variants[v].label, std::to_string(st), csv::format_double(c[3]),
                               csv::format_double(c[0] / c[3]), csv::format_double(c[1] / c[3]),
                               csv::format_double(c[2] / c[3])});
    }
    const auto& a = at_k[v];
    summary.rows.push_back({variants[v].label, std::to_string(k), csv::format_double(a[2]),
                            a[2] > 0 ? csv::format_double(a[0] / a[2]) : "",
                            a[2] > 0 ? csv::format_double(a[1] / a[2]) : ""});
    spdlog::info("{}: model size {} reached in {}/{} runs, {:.2f} covariance calls, {:.1f} values",
                 variants[v].label, k, a[2], s.replicates, a[2] > 0 ? a[0] / a[2] : 0.0,
                 a[2] > 0 ? a[1] / a[2] : 0.0);
  }
  fs::create_directories(args.out);
  csv::write(args.out / "calls_per_step.csv", per_step);
  csv::write(args.out / "calls_at_model_size.csv", summary);
  plot::write_svg(args.out / "calls_vs_values.svg",
                  {"Data calls vs. covariance values after " + std::to_string(args.steps) + " steps",
                   "data calls", "covariance values", false},
                  scatter);
  return 0;
}

int run_repro(const ReproArgs& args) {
  const auto cfg = config::load_run_config(args.config);
  const bool in_process = args.in_process || cfg.run.in_process;
  const fs::path out = args.out.value_or(cfg.run.out);
  const auto& s = cfg.scenario;
  fs::create_directories(out);
  fs::remove(out / "FAILED");

  if (in_process) spdlog::drop("site");
  std::string stage = "setup";
  try {
    for (std::size_t r = 0; r < s.replicates; ++r) {
      stage = "simulate " + replicate_dir(r);
      const auto rep = sim::generate_replicate(s, r);
      const auto data_dir = out / "data" / replicate_dir(r);
      sim::write_replicate(data_dir, rep);

      std::optional<SiteProcesses> processes;
      std::vector<std::string> addresses;
      if (!in_process) {
        std::vector<fs::path> files;
        for (std::size_t l = 0; l < rep.sites.size(); ++l)
          files.push_back(data_dir / ("site_" + std::to_string(l + 1) + ".csv"));
        processes.emplace(files, out / "run" / replicate_dir(r), cfg.analysis.min_site_n);
        addresses = processes->addresses();
      }

      for (const auto& method : cfg.analysis.methods) {
        stage = "analyze " + method + " " + replicate_dir(r);
        const auto options = options_for(cfg.analysis, method);
        pipeline::AnalysisResult result;
        if (in_process) {
          pipeline::InProcessConsortium consortium(rep.sites, {cfg.analysis.min_site_n});
          auto coordinator = consortium.make_coordinator();
          result = pipeline::analyze(coordinator, options);
        } else {
          auto coordinator = tcp_coordinator(addresses);
          result = pipeline::analyze(coordinator, options);
        }
        pipeline::write_analysis(out / "results" / method_label(method, cfg.analysis.buffer) /
                                     replicate_dir(r),
                                 result);
      }
      if (cfg.run.baseline) {
        stage = "baseline " + replicate_dir(r);
        write_baseline(out / "results" / "baseline" / replicate_dir(r), rep.sites);
      }
    }

    stage = "evaluate";
    const auto rows = eval::summarize({out / "results", out / "data", out / "data"}, out / "eval");
    for (const auto& row : rows)
      spdlog::info("{}: tpr={:.3f} fpr={:.3f} auc={:.3f}", row.group, row.mean_tpr, row.mean_fpr,
                   row.mean_auc);
  } catch (const std::exception& e) {
    std::ofstream(out / "FAILED") << "stage: " << stage << "\n" << e.what() << "\n";
    spdlog::error("repro failed during {}; partial artifacts left in {}", stage, out.string());
    throw;
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "fedboost";
  manifest["version"] = kVersion;
  manifest["compiler"] = __VERSION__;
  manifest["config"] = fs::absolute(args.config).string();
  manifest["transport"] = in_process ? "in-process" : "tcp";
  manifest["scenario"] = s.name;
  manifest["seed"] = s.seed;
  manifest["replicates"] = s.replicates;
  manifest["stream_rule"] =
      "mt19937_64 seeded with splitmix64(splitmix64(splitmix64(seed) ^ replicate) ^ stream)";
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  auto& listed = manifest["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files)
    listed.push_back({{"path", fs::relative(f, out).generic_string()}, {"sha256", sha256_file(f)}});
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
  spdlog::info("repro complete: {} files listed in {}", files.size(), (out / "manifest.json").string());
  return 0;
}

}  // namespace fedboost::cli
