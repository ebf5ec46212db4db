// Command-line front end: distances, gradient flows, studies, benchmarks,
// and cloud generation, with seeded reproducible outputs.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "s3w/errors.hpp"
#include "s3w/eval.hpp"
#include "s3w/grad.hpp"
#include "s3w/io.hpp"
#include "s3w/parallel.hpp"
#include "s3w/rng.hpp"
#include "s3w/s3w.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = ".";
  std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed")
      ->envname("S3W_SEED")
      ->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--config", c.config,
                  "JSON file of defaults (flags override)");
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out);
  if (!dir.empty()) fs::create_directories(dir);
  return dir;
}

std::string iso_now() {
  auto t = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Expands --config JSON into synthetic flags inserted right after the
// subcommand token, so explicit command-line flags take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string cfg_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--config=", 0) == 0)
      cfg_path = a.substr(9);
    else if (a == "--config" && i + 1 < args.size())
      cfg_path = args[i + 1];
  }
  if (cfg_path.empty()) return args;
  std::ifstream in(cfg_path);
  if (!in) throw std::invalid_argument("cannot open config " + cfg_path);
  json j = json::parse(in);
  if (!j.is_object())
    throw std::invalid_argument("config must be a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
    } else if (value.is_string()) {
      extra.push_back("--" + key + "=" + value.get<std::string>());
    } else if (value.is_number() || value.is_null()) {
      extra.push_back("--" + key + "=" + value.dump());
    } else {
      throw std::invalid_argument("config value for '" + key +
                                  "' must be scalar");
    }
  }
  // Insert after the subcommand name (the first non-flag token).
  std::size_t pos = 0;
  while (pos < args.size() && args[pos].rfind("-", 0) == 0) ++pos;
  if (pos < args.size()) ++pos;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos), extra.begin(),
              extra.end());
  return args;
}

json config_echo(std::initializer_list<std::pair<const char*, json>> kvs) {
  json j;
  for (const auto& kv : kvs) j[kv.first] = kv.second;
  return j;
}

// ---------------------------------------------------------------- dist

struct DistArgs {
  Common common;
  std::string method = "s3w";
  std::string a, b;
  double p = 2.0;
  std::size_t L = 100;
  double eps = 1e-6;
  std::size_t rotations = 10;
  std::size_t pool = 100;
  std::size_t candidates = 50;
  int d_prime = 0;
  bool share_projections = false;
};

int run_dist(const DistArgs& args) {
  s3w::set_worker_count(args.common.threads);
  s3w::Rng root(args.common.seed);
  s3w::Rng r_a = root.split(10);
  s3w::Rng r_b = root.split(11);
  s3w::Rng r_call = root.split(12);

  s3w::GeneratedTarget ta = s3w::load_target(args.a, r_a);
  s3w::GeneratedTarget tb = s3w::load_target(args.b, r_b);
  const s3w::EmpiricalMeasure& mu = ta.measure;
  const s3w::EmpiricalMeasure& nu = tb.measure;

  s3w::S3WConfig cfg;
  cfg.p = args.p;
  cfg.L = args.L;
  cfg.eps = args.eps;
  cfg.d_prime = args.d_prime;
  cfg.seed = args.common.seed;
  cfg.share_projections = args.share_projections;

  auto t0 = std::chrono::steady_clock::now();
  double value = 0.0;
  if (args.method == "s3w") {
    s3w::ProjectionSet proj = s3w::ProjectionSet::sample(
        cfg.resolve_d_prime(mu.sphere_dim()), args.L, r_call);
    value = s3w::s3w(mu, nu, cfg, proj);
  } else if (args.method == "ri_s3w") {
    value = s3w::ri_s3w(mu, nu, cfg, args.rotations, r_call);
  } else if (args.method == "ari_s3w") {
    s3w::RotationPool pool =
        s3w::build_pool(mu.sphere_dim(), args.pool, r_call);
    value = s3w::ari_s3w(mu, nu, cfg, args.rotations, pool, r_call);
  } else if (args.method == "max_s3w") {
    value = s3w::max_s3w(mu, nu, cfg, args.candidates, r_call);
  } else if (args.method == "sw") {
    value = s3w::sw_ambient(mu, nu, args.p, args.L, r_call);
  } else if (args.method == "vsw") {
    value = s3w::vsw(mu, nu, args.p, args.L, r_call);
  } else {
    throw std::invalid_argument("unknown method: " + args.method);
  }
  double wall = elapsed_since(t0);

  std::cout << s3w::format_g17(value) << '\n';

  json j;
  j["method"] = args.method;
  j["value"] = value;
  j["config"] = config_echo({{"a", args.a},
                             {"b", args.b},
                             {"p", args.p},
                             {"L", args.L},
                             {"eps", args.eps},
                             {"rotations", args.rotations},
                             {"pool", args.pool},
                             {"candidates", args.candidates},
                             {"d_prime", args.d_prime},
                             {"share_projections", args.share_projections},
                             {"threads", args.common.threads}});
  j["seed"] = args.common.seed;
  j["seed_streams"] = config_echo({{"a", 10}, {"b", 11}, {"call", 12}});
  j["wall_seconds"] = wall;
  j["timestamp"] = iso_now();
  write_json_file(prepare_out(args.common) / "dist.json", j);
  return 0;
}

// ---------------------------------------------------------------- flow

struct FlowArgs {
  Common common;
  std::string target;
  std::string loss = "s3w";
  double p = 2.0;
  std::size_t L = 1000;
  double eps = 1e-6;
  std::size_t steps = 500;
  double lr = 0.01;
  std::size_t batch = 0;
  std::size_t particles = 0;
  std::size_t rotations = 1;
  std::string rot_schedule;
  std::size_t pool = 1000;
  std::string optimizer = "adam";
  std::string retraction = "normalize";
  std::size_t eval_every = 50;
  std::size_t w2_subsample = 1000;
  bool share_projections = false;
};

s3w::FlowLoss parse_loss(const std::string& s) {
  if (s == "s3w") return s3w::FlowLoss::s3w;
  if (s == "ri_s3w") return s3w::FlowLoss::ri_s3w;
  if (s == "ari_s3w") return s3w::FlowLoss::ari_s3w;
  if (s == "sw") return s3w::FlowLoss::sw;
  if (s == "vsw") return s3w::FlowLoss::vsw;
  throw std::invalid_argument("unknown loss: " + s);
}

int run_flow_cmd(const FlowArgs& args) {
  s3w::set_worker_count(args.common.threads);
  s3w::Rng root(args.common.seed);
  s3w::Rng r_target = root.split(20);
  s3w::Rng r_flow = root.split(21);

  s3w::GeneratedTarget target = s3w::load_target(args.target, r_target);

  s3w::FlowConfig fc;
  fc.loss = parse_loss(args.loss);
  fc.p = args.p;
  fc.L = args.L;
  fc.eps = args.eps;
  fc.steps = args.steps;
  fc.lr = args.lr;
  fc.batch = args.batch;
  fc.particles = args.particles;
  fc.rotations = args.rotations;
  fc.pool_size = args.pool;
  if (!args.rot_schedule.empty()) {
    auto ramp = s3w::parse_ramp(args.rot_schedule);
    fc.rot_from = ramp.first;
    fc.rot_to = ramp.second;
  }
  if (args.optimizer == "adam")
    fc.optimizer = s3w::FlowOptimizer::adam;
  else if (args.optimizer == "sgd")
    fc.optimizer = s3w::FlowOptimizer::sgd;
  else
    throw std::invalid_argument("unknown optimizer: " + args.optimizer);
  if (args.retraction == "normalize")
    fc.retraction = s3w::FlowRetraction::normalize;
  else if (args.retraction == "exp_map")
    fc.retraction = s3w::FlowRetraction::exp_map;
  else
    throw std::invalid_argument("unknown retraction: " + args.retraction);
  fc.eval_every = args.eval_every;
  fc.w2_subsample = args.w2_subsample;
  fc.share_projections = args.share_projections;
  fc.seed = args.common.seed;

  auto t0 = std::chrono::steady_clock::now();
  s3w::FlowTrace trace = s3w::run_flow(
      fc, target.measure, target.density ? &*target.density : nullptr, r_flow);
  double wall = elapsed_since(t0);

  fs::path dir = prepare_out(args.common);
  s3w::write_trace_csv((dir / "trace.csv").string(), trace);
  s3w::write_cloud_csv((dir / "final_cloud.csv").string(), trace.final_cloud);

  json j;
  j["command"] = "flow";
  j["config"] = config_echo({{"target", args.target},
                             {"loss", args.loss},
                             {"p", args.p},
                             {"L", args.L},
                             {"eps", args.eps},
                             {"steps", args.steps},
                             {"lr", args.lr},
                             {"batch", args.batch},
                             {"particles", args.particles},
                             {"rotations", args.rotations},
                             {"rot_schedule", args.rot_schedule},
                             {"pool", args.pool},
                             {"optimizer", args.optimizer},
                             {"retraction", args.retraction},
                             {"eval_every", args.eval_every},
                             {"w2_subsample", args.w2_subsample},
                             {"share_projections", args.share_projections},
                             {"threads", args.common.threads}});
  j["seed"] = args.common.seed;
  j["seed_streams"] = config_echo({{"target", 20}, {"flow", 21}});
  j["w2_subsample_used"] = trace.w2_subsample_used;
  j["degenerate_steps"] = trace.degenerate_steps;
  j["tie_steps"] = trace.tie_steps;
  if (!trace.loss.empty()) {
    j["final_loss"] = trace.loss.back();
    if (!std::isnan(trace.log_w2.back())) j["final_log_w2"] = trace.log_w2.back();
    if (!std::isnan(trace.nll.back())) j["final_nll"] = trace.nll.back();
  }
  j["pool_gen_seconds"] = trace.pool_gen_seconds;
  j["wall_seconds"] = wall;
  j["timestamp"] = iso_now();
  write_json_file(dir / "meta.json", j);

  std::cout << "trace.csv final_cloud.csv meta.json written to "
            << (dir.empty() ? fs::path(".") : dir).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- study

struct StudyArgs {
  Common common;
  std::string kind;
  std::size_t pairs = 1000;
  std::string grid;
  std::size_t reps = 0;
  std::size_t samples = 0;
  std::size_t L = 0;
  std::size_t rotations = 0;
  std::size_t pool = 0;
  int d = 0;
  std::size_t n = 2048;
};

int run_study(const StudyArgs& args) {
  s3w::set_worker_count(args.common.threads);
  s3w::Rng root(args.common.seed);
  s3w::Rng r = root.split(30);

  auto t0 = std::chrono::steady_clock::now();
  s3w::StudyReport report;
  if (args.kind == "distortion") {
    report = s3w::distortion_study(args.pairs, r);
  } else if (args.kind == "eps") {
    std::vector<double> grid =
        s3w::parse_grid(args.grid.empty() ? "1e-6:1e-1:log:6" : args.grid);
    std::size_t L = args.L > 0 ? args.L : 128;
    std::size_t reps = args.reps > 0 ? args.reps : 100;
    report = s3w::eps_stability_study(grid, L, args.n, reps, r);
  } else {
    s3w::EvolutionKind kind;
    std::string default_grid;
    if (args.kind == "kappa") {
      kind = s3w::EvolutionKind::kappa;
      default_grid = "1:250:log:8";
    } else if (args.kind == "angle") {
      kind = s3w::EvolutionKind::angle;
      default_grid = "";  // k*pi/6 handled below
    } else if (args.kind == "projections") {
      kind = s3w::EvolutionKind::projections;
      default_grid = "10,40,160,640";
    } else if (args.kind == "rotations") {
      kind = s3w::EvolutionKind::rotations;
      default_grid = "1,2,5,10,20,50";
    } else if (args.kind == "pool") {
      kind = s3w::EvolutionKind::pool;
      default_grid = "10,20,50,100,200,500";
    } else if (args.kind == "samples") {
      kind = s3w::EvolutionKind::samples;
      default_grid = "100,200,500,1000,2000";
    } else {
      throw std::invalid_argument("unknown study: " + args.kind);
    }
    std::vector<double> grid;
    if (!args.grid.empty()) {
      grid = s3w::parse_grid(args.grid);
    } else if (kind == s3w::EvolutionKind::angle) {
      for (int k = 0; k <= 6; ++k) grid.push_back(k * kPi / 6.0);
    } else {
      grid = s3w::parse_grid(default_grid);
    }
    s3w::EvoOptions opt;
    opt.d = args.d;
    opt.samples = args.samples;
    opt.L = args.L;
    opt.rotations = args.rotations;
    opt.pool = args.pool;
    opt.reps = args.reps;
    report = s3w::evolution_study(kind, grid, opt, r);
  }
  double wall = elapsed_since(t0);

  fs::path dir = prepare_out(args.common);
  s3w::write_study_csv((dir / "report.csv").string(), report);

  json j;
  j["command"] = "study";
  j["study"] = report.id;
  json cfg;
  for (const auto& kv : report.metadata) cfg[kv.first] = kv.second;
  j["config"] = cfg;
  j["seed"] = args.common.seed;
  j["seed_streams"] = config_echo({{"study", 30}});
  j["threads"] = args.common.threads;
  j["wall_seconds"] = wall;
  j["timestamp"] = iso_now();
  write_json_file(dir / "meta.json", j);

  std::cout << "report.csv meta.json written to "
            << (dir.empty() ? fs::path(".") : dir).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  Common common;
  std::string methods = "s3w,ri_s3w,ari_s3w";
  std::string axis = "N";
  std::string grid;
  std::size_t n = 500;
  int d = 2;
  std::size_t L = 100;
  std::size_t rotations = 10;
  std::size_t pool = 100;
  std::size_t reps = 5;
};

int run_bench(const BenchArgs& args) {
  s3w::set_worker_count(args.common.threads);
  s3w::Rng root(args.common.seed);
  s3w::Rng r = root.split(31);

  s3w::BenchAxis axis;
  std::string default_grid;
  if (args.axis == "N" || args.axis == "n") {
    axis = s3w::BenchAxis::n;
    default_grid = "100:3000:6";
  } else if (args.axis == "L") {
    axis = s3w::BenchAxis::L;
    default_grid = "25,50,100,200";
  } else if (args.axis == "rotations") {
    axis = s3w::BenchAxis::rotations;
    default_grid = "2,4,8,16";
  } else {
    throw std::invalid_argument("unknown axis: " + args.axis);
  }
  std::vector<double> grid =
      s3w::parse_grid(args.grid.empty() ? default_grid : args.grid);

  std::vector<std::string> methods;
  {
    std::string cur;
    for (char c : args.methods + ",") {
      if (c == ',') {
        if (!cur.empty()) methods.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }

  s3w::BenchOptions opt;
  opt.n = args.n;
  opt.d = args.d;
  opt.L = args.L;
  opt.rotations = args.rotations;
  opt.pool = args.pool;
  opt.reps = args.reps;

  auto t0 = std::chrono::steady_clock::now();
  s3w::StudyReport report = s3w::bench_runtime(methods, axis, grid, opt, r);
  double wall = elapsed_since(t0);

  fs::path dir = prepare_out(args.common);
  s3w::write_study_csv((dir / "report.csv").string(), report);

  json j;
  j["command"] = "bench";
  json cfg;
  for (const auto& kv : report.metadata) cfg[kv.first] = kv.second;
  cfg["methods"] = args.methods;
  j["config"] = cfg;
  j["seed"] = args.common.seed;
  j["seed_streams"] = config_echo({{"bench", 31}});
  j["threads"] = args.common.threads;
  j["wall_seconds"] = wall;
  j["timestamp"] = iso_now();
  write_json_file(dir / "meta.json", j);

  std::cout << "report.csv meta.json written to "
            << (dir.empty() ? fs::path(".") : dir).string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  Common common;
  std::string gen;
  std::string file = "cloud.csv";
};

int run_sample(const SampleArgs& args) {
  s3w::set_worker_count(args.common.threads);
  s3w::Rng root(args.common.seed);
  s3w::Rng r = root.split(40);
  s3w::GeneratedTarget target = s3w::load_target(args.gen, r);
  fs::path dir = prepare_out(args.common);
  fs::path path = dir / args.file;
  if (target.measure.uniform)
    s3w::write_cloud_csv(path.string(), target.measure.points);
  else
    s3w::write_cloud_csv(path.string(), target.measure.points,
                         target.measure.weights);
  std::cout << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical sliced optimal-transport toolkit"};
  app.require_subcommand(1);

  DistArgs dist_args;
  CLI::App* dist = app.add_subcommand("dist", "Distance between two measures");
  add_common(dist, dist_args.common);
  dist->add_option("--method", dist_args.method,
                   "s3w|ri_s3w|ari_s3w|max_s3w|sw|vsw")
      ->capture_default_str();
  dist->add_option("--a", dist_args.a, "first cloud: CSV file or generator")
      ->required();
  dist->add_option("--b", dist_args.b, "second cloud: CSV file or generator")
      ->required();
  dist->add_option("--p", dist_args.p, "Wasserstein order")
      ->capture_default_str();
  dist->add_option("--L", dist_args.L, "projection count")
      ->capture_default_str();
  dist->add_option("--eps", dist_args.eps, "pole cap")->capture_default_str();
  dist->add_option("--rotations", dist_args.rotations,
                   "rotation count (ri_s3w/ari_s3w)")
      ->capture_default_str();
  dist->add_option("--pool", dist_args.pool, "rotation pool size (ari_s3w)")
      ->capture_default_str();
  dist->add_option("--candidates", dist_args.candidates,
                   "direction candidates (max_s3w)")
      ->capture_default_str();
  dist->add_option("--dprime", dist_args.d_prime,
                   "projected dimension (0 = sphere dimension)")
      ->capture_default_str();
  dist->add_flag("--share-projections", dist_args.share_projections,
                 "reuse one projection set across rotations");

  FlowArgs flow_args;
  CLI::App* flow = app.add_subcommand("flow", "Particle gradient flow");
  add_common(flow, flow_args.common);
  flow->add_option("--target", flow_args.target,
                   "target: CSV file or generator (e.g. icosa12)")
      ->required();
  flow->add_option("--loss", flow_args.loss, "s3w|ri_s3w|ari_s3w|sw|vsw")
      ->capture_default_str();
  flow->add_option("--p", flow_args.p, "Wasserstein order")
      ->capture_default_str();
  flow->add_option("--L", flow_args.L, "projection count")
      ->capture_default_str();
  flow->add_option("--eps", flow_args.eps, "pole cap")->capture_default_str();
  flow->add_option("--steps", flow_args.steps, "optimizer steps")
      ->capture_default_str();
  flow->add_option("--lr", flow_args.lr, "learning rate")
      ->capture_default_str();
  flow->add_option("--batch", flow_args.batch, "mini-batch size (0 = full)")
      ->capture_default_str();
  flow->add_option("--particles", flow_args.particles,
                   "particle count (0 = target size)")
      ->capture_default_str();
  flow->add_option("--rotations", flow_args.rotations,
                   "rotations per step (ri/ari)")
      ->capture_default_str();
  flow->add_option("--rot-schedule", flow_args.rot_schedule,
                   "linear rotation ramp from:to");
  flow->add_option("--pool", flow_args.pool, "rotation pool size (ari)")
      ->capture_default_str();
  flow->add_option("--optimizer", flow_args.optimizer, "adam|sgd")
      ->capture_default_str();
  flow->add_option("--retraction", flow_args.retraction, "normalize|exp_map")
      ->capture_default_str();
  flow->add_option("--eval-every", flow_args.eval_every,
                   "metric cadence in steps (0 = final only)")
      ->capture_default_str();
  flow->add_option("--w2-subsample", flow_args.w2_subsample,
                   "points for the exact-W2 metric (0 = off)")
      ->capture_default_str();
  flow->add_flag("--share-projections", flow_args.share_projections,
                 "reuse one projection set across rotations");

  StudyArgs study_args;
  CLI::App* study = app.add_subcommand("study", "Parameter studies");
  add_common(study, study_args.common);
  study
      ->add_option("kind", study_args.kind,
                   "distortion|eps|kappa|angle|projections|rotations|pool|"
                   "samples")
      ->required();
  study->add_option("--pairs", study_args.pairs, "pairs (distortion)")
      ->capture_default_str();
  study->add_option("--grid", study_args.grid,
                    "grid: 'a,b,...', 'a:b:n', or 'a:b:log:n'");
  study->add_option("--reps", study_args.reps, "repetitions (0 = default)")
      ->capture_default_str();
  study->add_option("--samples", study_args.samples,
                    "samples per measure (0 = default)")
      ->capture_default_str();
  study->add_option("--L", study_args.L, "projection count (0 = default)")
      ->capture_default_str();
  study->add_option("--rotations", study_args.rotations,
                    "rotation count (0 = default)")
      ->capture_default_str();
  study->add_option("--pool", study_args.pool, "pool size (0 = default)")
      ->capture_default_str();
  study->add_option("--d", study_args.d, "sphere dimension (0 = default)")
      ->capture_default_str();
  study->add_option("--n", study_args.n, "samples per side (eps study)")
      ->capture_default_str();

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "Runtime benchmarks");
  add_common(bench, bench_args.common);
  bench->add_option("--methods", bench_args.methods, "comma-separated methods")
      ->capture_default_str();
  bench->add_option("--axis", bench_args.axis, "N|L|rotations")
      ->capture_default_str();
  bench->add_option("--grid", bench_args.grid, "axis grid");
  bench->add_option("--N", bench_args.n, "samples per side (fixed axes)")
      ->capture_default_str();
  bench->add_option("--d", bench_args.d, "sphere dimension")
      ->capture_default_str();
  bench->add_option("--L", bench_args.L, "projection count (fixed axes)")
      ->capture_default_str();
  bench->add_option("--rotations", bench_args.rotations,
                    "rotation count (fixed axes)")
      ->capture_default_str();
  bench->add_option("--pool", bench_args.pool, "pool size (ari)")
      ->capture_default_str();
  bench->add_option("--reps", bench_args.reps, "timed repetitions")
      ->capture_default_str();

  SampleArgs sample_args;
  CLI::App* sample = app.add_subcommand("sample", "Generate a cloud CSV");
  add_common(sample, sample_args.common);
  sample->add_option("--gen", sample_args.gen, "generator spec")->required();
  sample->add_option("--file", sample_args.file, "output file name")
      ->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    // CLI11 parses reversed vectors.
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dist->parsed()) return run_dist(dist_args);
    if (flow->parsed()) return run_flow_cmd(flow_args);
    if (study->parsed()) return run_study(study_args);
    if (bench->parsed()) return run_bench(bench_args);
    if (sample->parsed()) return run_sample(sample_args);
  } catch (const s3w::CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
