#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "samba/gradcheck.hpp"
#include "samba/io.hpp"
#include "samba/macl.hpp"
#include "samba/metrics.hpp"
#include "samba/random.hpp"
#include "samba/scan_order.hpp"
#include "samba/sir.hpp"
#include "samba/ssm.hpp"

namespace samba::cli {

namespace fs = std::filesystem;

namespace {

/// Bad flags, unreadable inputs and other conditions that map to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v, int precision = 10) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  return f;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// scan -------------------------------------------------------------------------

struct ScanArgs {
  std::string map;
  double threshold = 0.5;
  std::string out_csv;
  std::string out_svg;
};

void write_scan_svg(std::ostream& out, const BinaryMask& mask, const std::vector<std::uint32_t>& salient) {
  constexpr int cell = 20;
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * cell << "\" height=\""
      << h * cell << "\">\n";
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      out << "<rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << (mask(r, c) ? "#bbbbbb" : "#f4f4f4")
          << "\" stroke=\"#888888\"/>\n";
    }
  }
  out << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < salient.size(); ++k) {
    const std::size_t p = salient[k];
    out << (k ? " " : "") << (p % w) * cell + cell / 2 << "," << (p / w) * cell + cell / 2;
  }
  out << "\"/>\n</svg>\n";
}

int cmd_scan(const ScanArgs& a, std::ostream& out) {
  if (!(a.threshold > 0.0 && a.threshold < 1.0)) throw UsageError("--threshold must lie in (0,1)");
  const auto map = read_pgm(fs::path(a.map));
  const auto mask = binarize(map, a.threshold);
  const auto bundle = sns_path_bundle(mask);

  std::ostringstream csv;
  for (std::size_t v = 0; v < bundle.paths.size(); ++v) {
    const auto& order = bundle.paths[v].order();
    for (std::size_t k = 0; k < order.size(); ++k) csv << (k ? "," : "") << order[k];
    csv << '\n';
  }
  if (a.out_csv.empty()) {
    out << csv.str();
  } else {
    open_output(a.out_csv) << csv.str();
  }
  if (!a.out_svg.empty()) {
    auto svg = open_output(a.out_svg);
    write_scan_svg(svg, mask, sns_salient_order(mask));
  }
  return kExitOk;
}

// eval -------------------------------------------------------------------------

struct EvalArgs {
  std::string pred_dir;
  std::string gt_dir;
  std::string report;
  unsigned threads = 1;
};

std::map<std::string, fs::path> list_pgm(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".pgm") files.emplace(entry.path().filename().string(), entry.path());
  }
  return files;
}

struct EvalRow {
  std::string name;
  std::optional<MetricReport> report;
  std::string error;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto preds = list_pgm(a.pred_dir);
  const auto gts = list_pgm(a.gt_dir);
  std::vector<std::string> warnings;
  std::vector<EvalRow> rows;
  for (const auto& [name, path] : preds) {
    if (gts.count(name)) {
      rows.push_back({name, std::nullopt, {}});
    } else {
      warnings.push_back(name + ": no ground truth");
    }
  }
  for (const auto& [name, path] : gts) {
    if (!preds.count(name)) warnings.push_back(name + ": no prediction");
  }
  if (rows.empty()) throw UsageError("no prediction/ground-truth pairs with matching names");

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      try {
        row.report = evaluate(read_pgm(preds.at(row.name)), read_pgm(gts.at(row.name)));
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  {
    const unsigned n = std::clamp<unsigned>(a.threads, 1, static_cast<unsigned>(rows.size()));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }

  nlohmann::json images = nlohmann::json::array();
  double sum_s = 0, sum_e = 0, sum_mae = 0, sum_f = 0;
  std::size_t count = 0;
  std::size_t count_f = 0;
  out << "image,s_measure,f_measure_max,e_measure_max,mae\n";
  for (const auto& row : rows) {
    if (!row.report) {
      warnings.push_back(row.name + ": " + row.error);
      continue;
    }
    const auto& r = *row.report;
    if (!r.f_measure_max) warnings.push_back(row.name + ": empty ground truth, F-measure undefined");
    const double f = r.f_measure_max.value_or(NAN);
    out << row.name << ',' << num(r.s_measure) << ',' << num(f) << ',' << num(r.e_measure_max)
        << ',' << num(r.mae) << '\n';
    images.push_back({{"image", row.name},
                      {"s_measure", r.s_measure},
                      {"f_measure_max", r.f_measure_max ? nlohmann::json(*r.f_measure_max) : nlohmann::json()},
                      {"e_measure_max", r.e_measure_max},
                      {"mae", r.mae}});
    sum_s += r.s_measure;
    sum_e += r.e_measure_max;
    sum_mae += r.mae;
    ++count;
    if (r.f_measure_max) {
      sum_f += *r.f_measure_max;
      ++count_f;
    }
  }
  if (count == 0) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    throw UsageError("no image pair could be evaluated");
  }
  const double n = static_cast<double>(count);
  const double mean_f = count_f ? sum_f / static_cast<double>(count_f) : NAN;
  out << "\nmetric,mean\n";
  out << "s_measure," << num(sum_s / n) << '\n';
  out << "f_measure_max," << num(mean_f) << '\n';
  out << "e_measure_max," << num(sum_e / n) << '\n';
  out << "mae," << num(sum_mae / n) << '\n';
  out << "images," << count << '\n';
  out << "warnings," << warnings.size() << '\n';
  for (const auto& w : warnings) err << "warning: " << w << '\n';

  if (!a.report.empty()) {
    nlohmann::json doc;
    doc["images"] = images;
    doc["mean"] = {{"s_measure", sum_s / n},
                   {"f_measure_max", count_f ? nlohmann::json(mean_f) : nlohmann::json()},
                   {"e_measure_max", sum_e / n},
                   {"mae", sum_mae / n}};
    doc["evaluated"] = count;
    doc["warnings"] = warnings;
    open_output(a.report) << doc.dump(2) << '\n';
  }
  return kExitOk;
}

// ssm-bench ----------------------------------------------------------------------

struct BenchArgs {
  std::size_t length = 1024;
  std::size_t channels = 8;
  std::size_t state = 16;
  std::string mode = "both";
  std::size_t repeat = 3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string dtype = "f32";
};

template <typename T>
int run_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  Rng rng(a.seed);
  const auto ssm = random_discrete_ssm<T>(a.length, a.channels, a.state, rng);
  const auto x = random_normal<T>({a.length, a.channels}, 1.0, rng);

  std::vector<std::pair<std::string, Tensor<T>>> results;
  for (const std::string mode : {"seq", "par"}) {
    if (a.mode != "both" && a.mode != mode) continue;
    std::vector<double> ms;
    Tensor<T> y;
    for (std::size_t r = 0; r < a.repeat; ++r) {
      const auto start = std::chrono::steady_clock::now();
      y = mode == "seq" ? ssm_recurrence_seq(ssm, x).y : ssm_parallel_scan(ssm, x, {}, a.threads).y;
      const auto stop = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::sort(ms.begin(), ms.end());
    err << mode << ": min " << num(ms.front(), 4) << " ms, median " << num(ms[ms.size() / 2], 4)
        << " ms over " << ms.size() << " runs\n";
    double checksum = 0.0;
    for (T v : y.data()) checksum += static_cast<double>(v);
    out << mode << ",checksum," << num(checksum, 17) << '\n';
    results.emplace_back(mode, std::move(y));
  }
  if (results.size() == 2) {
    double diff = 0.0;
    const auto& s = results[0].second;
    const auto& p = results[1].second;
    for (std::size_t i = 0; i < s.size(); ++i) {
      diff = std::max(diff, std::abs(static_cast<double>(s[i]) - static_cast<double>(p[i])));
    }
    const double tol = std::is_same_v<T, float> ? 1e-5 : 1e-10;
    const bool ok = diff < tol;
    out << "max_abs_diff," << num(diff, 6) << ",tolerance," << num(tol, 3) << ','
        << (ok ? "pass" : "fail") << '\n';
    return ok ? kExitOk : kExitCheckFailed;
  }
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.repeat == 0) throw UsageError("--repeat must be at least 1");
  if (a.length == 0 || a.channels == 0 || a.state == 0) throw UsageError("--L, --D and --N must be positive");
  if (a.dtype == "f64") return run_bench<double>(a, out, err);
  return run_bench<float>(a, out, err);
}

// gradcheck --------------------------------------------------------------------

struct GradArgs {
  std::string op = "ssm";
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::string corrupt;
  bool zero_dy = false;
  std::size_t length = 32;
  std::size_t channels = 4;
  std::size_t state = 8;
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  if (a.op != "ssm") throw UsageError("unsupported --op '" + a.op + "' (supported: ssm)");
  GradcheckConfig config;
  config.length = a.length;
  config.channels = a.channels;
  config.state_size = a.state;
  config.zero_cotangent = a.zero_dy;
  config.corrupt = a.corrupt;
  bool all = true;
  out << "seed,parameter,relative_error,status\n";
  for (std::size_t s = 0; s < a.seeds; ++s) {
    const std::uint64_t seed = a.seed + s;
    for (const auto& row : gradcheck_ssm(seed, config)) {
      out << seed << ',' << row.parameter << ',' << num(row.relative_error, 4) << ','
          << (row.passed ? "pass" : "fail") << '\n';
      all = all && row.passed;
    }
  }
  out << (all ? "all gradients pass\n" : "gradient check FAILED\n");
  return all ? kExitOk : kExitCheckFailed;
}

// sir ----------------------------------------------------------------------------

struct SirArgs {
  std::string map;
  std::string out;
  std::string weights;
  std::string features;
  std::size_t channels = 8;
  std::uint64_t seed = 0;
};

SirWeights<double> load_sir_weights(const fs::path& dir) {
  const auto load = [&](const char* name) { return read_smbt_as<double>(dir / name); };
  SirWeights<double> w;
  w.boundary.depthwise = load("boundary_depthwise.smbt");
  w.boundary.pointwise.weight = load("boundary_weight.smbt");
  w.boundary.pointwise.bias = load("boundary_bias.smbt");
  w.object.depthwise = load("object_depthwise.smbt");
  w.object.pointwise.weight = load("object_weight.smbt");
  w.object.pointwise.bias = load("object_bias.smbt");
  w.head.weight = load("head_weight.smbt");
  w.head.bias = load("head_bias.smbt");
  return w;
}

int cmd_sir(const SirArgs& a, std::ostream& out) {
  const auto coarse = read_pgm(fs::path(a.map));
  Rng rng(a.seed);
  const auto weights = a.weights.empty() ? SirWeights<double>::random(a.channels, rng)
                                         : load_sir_weights(a.weights);
  const std::size_t c = weights.channels();
  TensorD f4;
  if (a.features.empty()) {
    // Stand-in bottleneck feature: the coarse map broadcast to every channel.
    f4 = TensorD({coarse.height(), coarse.width(), c});
    for (std::size_t p = 0; p < coarse.size(); ++p) {
      for (std::size_t ch = 0; ch < c; ++ch) f4[p * c + ch] = coarse[p];
    }
  } else {
    f4 = read_smbt_as<double>(fs::path(a.features));
  }
  const auto result = sir_refine(f4, coarse, weights);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<std::pair<std::string, const SaliencyMap*>> maps{{"refined.pgm", &result.refined},
                                                               {"prior.pgm", &result.prior},
                                                               {"reverse.pgm", &result.reverse}};
  for (std::size_t k = 0; k < result.edges.size(); ++k) {
    maps.emplace_back("edge_k" + std::to_string(weights.kernel_sizes[k]) + ".pgm", &result.edges[k]);
  }
  out << "file,min,max,mean\n";
  for (const auto& [name, map] : maps) {
    write_pgm(dir / name, *map);
    const auto& v = map->values();
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    out << name << ',' << num(*std::min_element(v.begin(), v.end())) << ','
        << num(*std::max_element(v.begin(), v.end())) << ',' << num(mean) << '\n';
  }
  write_smbt(dir / "features.smbt", result.features);
  out << "features.smbt," << shape_to_string(result.features.shape()) << '\n';
  return kExitOk;
}

// schedule -----------------------------------------------------------------------

struct ScheduleArgs {
  std::string manifest;
  int stage = 0;
  std::size_t batch = 2;
  std::uint64_t seed = 0;
  std::size_t draws = 0;
  std::string trace;
  std::string mix = "bernoulli";
  std::vector<std::size_t> epochs;
  std::string plan_out;
};

int cmd_schedule(const ScheduleArgs& a, std::ostream& out) {
  const auto manifests = parse_manifests_json(read_text(a.manifest));
  std::array<std::optional<std::size_t>, 3> epochs{};
  if (!a.epochs.empty()) {
    if (a.epochs.size() != 3) throw UsageError("--epochs takes three values, one per stage");
    for (std::size_t s = 0; s < 3; ++s) epochs[s] = a.epochs[s];
  }
  const auto plan = build_stage_plan(manifests, {}, epochs);
  auto doc = nlohmann::json::parse(plan_to_json(plan));
  if (!a.plan_out.empty()) open_output(a.plan_out) << plan_to_json(plan) << '\n';

  if (a.stage != 0) {
    if (a.batch == 0) throw UsageError("--batch must be at least 1");
    const auto mode = a.mix == "exact" ? MixMode::exact_count : MixMode::bernoulli;
    const std::size_t draws = a.draws ? a.draws : a.batch;
    std::optional<std::ofstream> trace;
    if (!a.trace.empty()) {
      trace.emplace(open_output(a.trace));
      *trace << "batch,slot,dataset,index,source\n";
    }
    std::map<SourceTag, std::size_t> counts{{SourceTag::fresh, 0}};
    for (const auto& r : plan.stage(a.stage).replay) counts[replay_tag(r.source)] = 0;
    std::size_t done = 0;
    for (std::size_t b = 0; done < draws; ++b) {
      const std::size_t n = std::min(a.batch, draws - done);
      const auto batch = sample_batch(plan, a.stage, n, derive_seed(a.seed, b), mode);
      for (std::size_t slot = 0; slot < batch.size(); ++slot) {
        const auto& d = batch[slot];
        ++counts[d.source];
        if (trace) *trace << b << ',' << slot << ',' << d.sample.id << ',' << d.sample.index << ',' << to_string(d.source) << '\n';
      }
      done += n;
    }
    const auto& record = plan.stage(a.stage);
    nlohmann::json freq = nlohmann::json::array();
    for (const auto& [tag, count] : counts) {
      double target = 1.0 - record.replay_rate_sum();
      for (const auto& r : record.replay) {
        if (replay_tag(r.source) == tag) target = r.rate;
      }
      freq.push_back({{"source", std::string(to_string(tag))},
                      {"count", count},
                      {"frequency", static_cast<double>(count) / static_cast<double>(draws)},
                      {"target", target}});
    }
    doc = {{"plan", doc},
           {"sampling",
            {{"stage", a.stage}, {"batch", a.batch}, {"draws", draws}, {"seed", a.seed}, {"mix", a.mix}, {"frequencies", freq}}}};
  } else {
    doc = {{"plan", doc}};
  }
  out << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Samba saliency kernels: scan orders, metrics, SSM kernels, refinement, schedules", "samba"};
  app.require_subcommand(1);

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Saliency-guided scan paths of a PGM map");
  scan_cmd->add_option("map", scan.map, "Coarse saliency map (PGM)")->required();
  scan_cmd->add_option("--threshold", scan.threshold, "Binarization threshold in (0,1)");
  scan_cmd->add_option("--out-csv", scan.out_csv, "CSV of the four paths (default: stdout)");
  scan_cmd->add_option("--out-svg", scan.out_svg, "SVG drawing of the salient path");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate prediction maps against ground truth");
  eval_cmd->add_option("pred_dir", eval.pred_dir)->required();
  eval_cmd->add_option("gt_dir", eval.gt_dir)->required();
  eval_cmd->add_option("--report", eval.report, "JSON report path");
  eval_cmd->add_option("--threads", eval.threads);

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("ssm-bench", "Time the sequential and parallel scans");
  bench_cmd->add_option("--L", bench.length);
  bench_cmd->add_option("--D", bench.channels);
  bench_cmd->add_option("--N", bench.state);
  bench_cmd->add_option("--mode", bench.mode)->check(CLI::IsMember({"seq", "par", "both"}));
  bench_cmd->add_option("--repeat", bench.repeat);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--threads", bench.threads);
  bench_cmd->add_option("--dtype", bench.dtype)->check(CLI::IsMember({"f32", "f64"}));

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the scan gradients");
  grad_cmd->add_option("--op", grad.op);
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--seeds", grad.seeds, "Number of consecutive seeds");
  grad_cmd->add_option("--corrupt", grad.corrupt, "Test hook: perturb this analytic gradient");
  grad_cmd->add_flag("--zero-dy", grad.zero_dy);
  grad_cmd->add_option("--L", grad.length);
  grad_cmd->add_option("--D", grad.channels);
  grad_cmd->add_option("--N", grad.state);

  SirArgs sir;
  auto* sir_cmd = app.add_subcommand("sir", "Integrity refinement of a coarse map");
  sir_cmd->add_option("map", sir.map)->required();
  sir_cmd->add_option("--out", sir.out, "Output directory")->required();
  sir_cmd->add_option("--weights", sir.weights, "Directory of SMBT weight tensors");
  sir_cmd->add_option("--features", sir.features, "Bottleneck feature [H,W,C] (SMBT)");
  sir_cmd->add_option("--channels", sir.channels, "Channels of the seeded default weights");
  sir_cmd->add_option("--seed", sir.seed);

  ScheduleArgs sched;
  auto* sched_cmd = app.add_subcommand("schedule", "Three-stage plan and replay sampling");
  sched_cmd->add_option("manifest", sched.manifest)->required();
  sched_cmd->add_option("--stage", sched.stage)->check(CLI::Range(0, 3));
  sched_cmd->add_option("--batch", sched.batch);
  sched_cmd->add_option("--seed", sched.seed);
  sched_cmd->add_option("--draws", sched.draws);
  sched_cmd->add_option("--trace", sched.trace, "CSV of every draw");
  sched_cmd->add_option("--mix", sched.mix)->check(CLI::IsMember({"bernoulli", "exact"}));
  sched_cmd->add_option("--epochs", sched.epochs)->expected(3);
  sched_cmd->add_option("--plan-out", sched.plan_out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (scan_cmd->parsed()) return cmd_scan(scan, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (bench_cmd->parsed()) return cmd_bench(bench, out, err);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad, out);
    if (sir_cmd->parsed()) return cmd_sir(sir, out);
    if (sched_cmd->parsed()) return cmd_schedule(sched, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace samba::cli
