// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtr/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "mtr/diagnostics.hpp"
#include "mtr/error.hpp"
#include "mtr/evaluator.hpp"
#include "mtr/rng.hpp"
#include "mtr/tape.hpp"
#include "mtr/trainer.hpp"

namespace mtr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& path, bool config_error) {
  std::ifstream in(path);
  if (!in) {
    if (config_error) throw ConfigError("cannot open " + path.string());
    throw Error("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    const std::string msg = path.string() + ": invalid JSON: " + e.what();
    if (config_error) throw ConfigError(msg);
    throw Error(msg);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

fs::path resolve_path(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- config

TrainConfig RunConfig::desk_train_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  return c;
}

RunConfig RunConfig::from_json(const json& j, fs::path base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> kKeys = {"experiment", "output_dir", "seeds", "benchmark",
                                              "train"};
  std::vector<std::string> problems;
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.count(k)) problems.push_back("unknown key '" + k + "'");
  }
  RunConfig c;
  c.base_dir = std::move(base_dir);
  try {
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("benchmark")) c.benchmark = j.at("benchmark");
  } catch (const json::exception& e) {
    problems.push_back(e.what());
  }
  if (c.seeds.empty()) problems.push_back("seeds must not be empty");
  if (!c.benchmark.is_object()) {
    problems.push_back("benchmark must be an object");
  } else {
    static const std::set<std::string> kBench = {"preset", "seed",      "spec",
                                                 "spec_path", "data", "data_hash"};
    for (const auto& [k, _] : c.benchmark.items()) {
      if (!kBench.count(k)) problems.push_back("unknown benchmark key '" + k + "'");
    }
    if (!c.benchmark.contains("preset") && !c.benchmark.contains("spec") &&
        !c.benchmark.contains("spec_path") && !c.benchmark.contains("data")) {
      problems.push_back("benchmark needs one of preset, spec, spec_path or data");
    }
  }
  if (j.contains("train")) {
    json merged = desk_train_config().to_json();
    merged.merge_patch(j.at("train"));
    try {
      c.train = TrainConfig::from_json(merged);
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    } catch (const json::exception& e) {
      problems.push_back(std::string("train: ") + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(parse_json_file(path, true), path.parent_path().empty() ? "." : path.parent_path());
}

ResolvedBenchmark resolve_benchmark(const RunConfig& config, std::uint64_t root_seed) {
  const json& b = config.benchmark;
  ResolvedBenchmark out;
  std::optional<BenchmarkSpec> spec;
  try {
    if (b.contains("spec")) {
      spec = BenchmarkSpec::from_json(b.at("spec"));
    } else if (b.contains("spec_path")) {
      const fs::path p = resolve_path(config.base_dir, b.at("spec_path").get<std::string>());
      if (!fs::exists(p)) throw ConfigError("benchmark spec not found: " + p.string());
      spec = BenchmarkSpec::load(p);
    } else if (b.contains("preset") && !b.contains("data")) {
      const std::string name = b.at("preset").get<std::string>();
      const std::uint64_t seed = b.contains("seed") ? b.at("seed").get<std::uint64_t>()
                                                    : derive_seed(root_seed, "benchmark");
      if (name == "ufire-mini") {
        spec = BenchmarkSpec::ufire_mini(seed);
      } else if (name == "lambda-scale") {
        spec = BenchmarkSpec::lambda_scale(seed);
      } else {
        throw ConfigError("unknown benchmark preset '" + name +
                          "' (expected ufire-mini or lambda-scale)");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("benchmark: ") + e.what());
  }

  if (b.contains("data")) {
    const fs::path p = resolve_path(config.base_dir, b.at("data").get<std::string>());
    if (!fs::exists(p)) throw ConfigError("benchmark data not found: " + p.string());
    out.data = load_jsonl(p);
    if (spec) apply_spec_metadata(out.data, *spec);
    out.description = {{"data", fs::absolute(p).lexically_normal().string()},
                       {"data_hash", hex64(fnv1a64(read_file(p)))}};
    if (spec) out.description["spec"] = spec->to_json();
  } else {
    out.data = generate_benchmark(*spec);
    out.description = {{"spec", spec->to_json()}};
    if (b.contains("preset")) out.description["preset"] = b.at("preset");
  }
  return out;
}

void apply_ablation(TrainConfig& c, const std::string& ablation) {
  c.shared_params = false;
  c.sampler.strategy = SamplingStrategy::kGgas;
  if (ablation == "none") {
    c.interp = InterpMode::kNone;
    c.sampler.strategy = SamplingStrategy::kRandom;
  } else if (ablation == "ggas-only") {
    c.interp = InterpMode::kNone;
  } else if (ablation == "proposal_only") {
    c.interp = InterpMode::kProposalOnly;
  } else if (ablation == "linear") {
    c.interp = InterpMode::kLinear;
  } else if (ablation == "slerp") {
    c.interp = InterpMode::kSlerp;
  } else if (ablation == "shared") {
    c.interp = InterpMode::kSlerp;
    c.shared_params = true;
  } else {
    throw ConfigError("unknown ablation '" + ablation + "'");
  }
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> kVariants = {
      {"1-base", "none", std::nullopt},
      {"2-base+ggas", "ggas-only", std::nullopt},
      {"3-proposal_only", "proposal_only", std::nullopt},
      {"4-linear_interp", "linear", std::nullopt},
      {"5-wo_size_refine", "slerp", "ggas-nosize"},
      {"6-shared_params", "shared", std::nullopt},
      {"ours", "slerp", std::nullopt},
  };
  return kVariants;
}

json resolved_config(const std::string& command, const RunConfig& config,
                     const TrainConfig& train, const json& benchmark) {
  return {{"command", command},
          {"experiment", config.experiment},
          {"benchmark", benchmark},
          {"train", train.to_json()}};
}

std::string resolved_hash(const json& resolved) {
  json core = resolved;
  core.erase("command");
  core.erase("config_hash");
  core.erase("output_dir");
  return config_hash(core);
}

// ---------------------------------------------------------------- commands

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string sampling;
  std::string selection;
  std::string ablation;
  std::string precision;
  // train
  std::string resume;
  std::optional<std::uint64_t> stop_after;
  // eval
  std::string checkpoint;
  std::string split = "test";
  // generate
  std::string spec_path;
  // gradcheck
  std::string corrupt_adjoint;
  // ablate
  unsigned jobs = 1;
  // report
  std::vector<std::string> inputs;
};

RunConfig load_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  if (o.seed) {
    c.train.seed = *o.seed;
    c.seeds = {*o.seed, *o.seed + 1, *o.seed + 2};
  }
  if (!o.ablation.empty()) apply_ablation(c.train, o.ablation);
  if (!o.sampling.empty()) c.train.sampler.strategy = parse_sampling_strategy(o.sampling);
  if (!o.selection.empty()) c.train.sampler.selection = parse_selection_mode(o.selection);
  if (!o.precision.empty()) c.train.precision = parse_precision(o.precision);
  c.train.validate();
  return c;
}

fs::path output_dir(const Options& o, const RunConfig& c, const std::string& command) {
  if (!o.out.empty()) return o.out;
  if (c.output_dir) return resolve_path(c.base_dir, *c.output_dir);
  const char* root = std::getenv(kOutRootEnv);
  return fs::path(root && *root ? root : "runs") / c.experiment / command;
}

void write_resolved(const fs::path& dir, json resolved) {
  fs::create_directories(dir);
  resolved["config_hash"] = resolved_hash(resolved);
  resolved["output_dir"] = dir.string();
  write_text(dir / "config.resolved.json", resolved.dump(2) + "\n");
}

int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig c = load_config(o);
  if (!o.spec_path.empty()) {
    if (!fs::exists(o.spec_path)) throw ConfigError("spec file not found: " + o.spec_path);
    c.benchmark = {{"spec_path", fs::absolute(o.spec_path).string()}};
  }
  if (c.benchmark.contains("data")) throw ConfigError("generate needs a spec or preset, not data");
  const ResolvedBenchmark bench = resolve_benchmark(c, c.train.seed);
  const fs::path dir = output_dir(o, c, "generate");
  json resolved = resolved_config("generate", c, c.train, bench.description);
  resolved.erase("train");
  write_resolved(dir, resolved);
  write_text(dir / "spec.json", bench.description.at("spec").dump(2) + "\n");
  save_jsonl(bench.data, dir / "benchmark.jsonl");
  std::size_t records = 0;
  for (const auto& d : bench.data.datasets)
    records += d.train.size() + d.val.size() + d.test.size() + d.gallery.size();
  out << "wrote " << records << " records for " << bench.data.datasets.size() << " datasets to "
      << (dir / "benchmark.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig c = load_config(o);
  const ResolvedBenchmark bench = resolve_benchmark(c, c.train.seed);
  const json resolved = resolved_config("train", c, c.train, bench.description);
  const std::string hash = resolved_hash(resolved);
  const fs::path dir = output_dir(o, c, "train");
  write_resolved(dir, resolved);

  std::optional<Trainer> trainer;
  if (!o.resume.empty()) {
    if (!fs::exists(o.resume)) throw Error("checkpoint not found: " + o.resume);
    trainer.emplace(Trainer::resume(bench.data, o.resume, dir));
    if (trainer->hash() != hash) {
      throw ConfigError("checkpoint " + o.resume + " was written by a different configuration (" +
                        trainer->hash() + " vs " + hash + ")");
    }
  } else {
    trainer.emplace(bench.data, c.train, hash, dir);
  }
  trainer->run(o.stop_after);
  if (!trainer->finished()) {
    out << "stopped after step " << trainer->current_step() << " of " << trainer->total_steps()
        << "; checkpoint " << (dir / "checkpoint.json").string() << "\n";
    return kExitOk;
  }
  out << trainer->final_metrics()->to_table();
  out << "outputs in " << dir.string() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const fs::path ckpt_path(o.checkpoint);
  if (!fs::exists(ckpt_path)) throw Error("checkpoint not found: " + ckpt_path.string());
  const json ckpt = parse_json_file(ckpt_path, false);
  if (ckpt.value("format", "") != "mtr-checkpoint") {
    throw Error(ckpt_path.string() + " is not a checkpoint");
  }
  const TrainConfig train = TrainConfig::from_json(ckpt.at("config"));

  RunConfig c;
  if (!o.config_path.empty()) {
    c = RunConfig::load(o.config_path);
  } else {
    const fs::path beside = ckpt_path.parent_path() / "config.resolved.json";
    if (!fs::exists(beside)) {
      throw ConfigError("no --config given and no config.resolved.json next to " +
                        ckpt_path.string());
    }
    const json r = parse_json_file(beside, true);
    c.experiment = r.value("experiment", c.experiment);
    c.benchmark = r.at("benchmark");
    c.base_dir = ckpt_path.parent_path();
  }
  const ResolvedBenchmark bench = resolve_benchmark(c, train.seed);

  RetrievalModel model(bench.data.feature_dim(), bench.data.instruction_count(), train);
  ParameterSet loaded = params_from_json(ckpt.at("params"));
  for (const auto& name : model.params().names()) {
    if (!loaded.contains(name) || !loaded.get(name).same_shape(model.params().get(name))) {
      throw DimensionMismatch("checkpoint parameter '" + name +
                              "' does not fit this benchmark");
    }
  }
  model.params() = std::move(loaded);

  const Split split = parse_split(o.split);
  if (split == Split::kTrain || split == Split::kGallery) {
    throw ConfigError("--split must be val or test");
  }
  MetricsReport report = evaluate(model, bench.data, split);
  report.seed = train.seed;
  report.config_hash = ckpt.at("config_hash").get<std::string>();
  report.step = ckpt.at("step").get<std::uint64_t>();

  const fs::path dir = output_dir(o, c, "eval");
  fs::create_directories(dir);
  const std::string stem = "metrics." + o.split;
  write_text(dir / (stem + ".json"), report.to_json().dump(2) + "\n");
  write_text(dir / (stem + ".txt"), report.to_table());
  out << report.to_table();
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = load_config(o);
  GradcheckSuiteOptions opts;
  opts.seed = c.train.seed;

  struct FaultGuard {
    explicit FaultGuard(const std::string& op) { set_adjoint_fault(op); }
    ~FaultGuard() { set_adjoint_fault(""); }
  } guard(o.corrupt_adjoint);

  const std::vector<GradcheckCase> cases = run_gradcheck_suite(opts);
  json report = {{"dim", opts.dim},       {"rank", opts.rank},
                 {"hidden", opts.hidden}, {"batch", opts.batch},
                 {"h", opts.h},           {"tolerance", opts.tolerance},
                 {"seed", opts.seed},     {"checks", json::array()}};
  double worst = 0.0;
  std::vector<std::string> failed;
  for (const auto& k : cases) {
    const GradCheckEntry& w = k.result.worst();
    out << std::left << std::setw(22) << k.name << " max_rel_err=" << std::scientific
        << std::setprecision(3) << k.result.max_rel_error << std::defaultfloat
        << "  worst=" << w.parameter << "[" << w.worst_index << "]  "
        << (k.passed ? "PASS" : "FAIL") << "\n";
    worst = std::max(worst, k.result.max_rel_error);
    if (!k.passed) failed.push_back(k.name);
    report["checks"].push_back({{"name", k.name},
                                {"max_rel_error", k.result.max_rel_error},
                                {"worst_parameter", w.parameter},
                                {"worst_index", w.worst_index},
                                {"analytic", w.analytic},
                                {"numeric", w.numeric},
                                {"passed", k.passed}});
  }
  out << "max relative error " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << " (tolerance " << opts.tolerance << ")\n";

  const fs::path dir = output_dir(o, c, "gradcheck");
  fs::create_directories(dir);
  json resolved = {{"experiment", c.experiment}, {"gradcheck", report}};
  report["config_hash"] = config_hash(resolved.at("gradcheck"));
  write_text(dir / "gradcheck.json", report.dump(2) + "\n");

  if (!failed.empty()) {
    err << "gradient check failed for:";
    for (const auto& f : failed) err << ' ' << f;
    err << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct CellResult {
  std::string variant;
  std::uint64_t seed = 0;
  MetricsReport metrics;
};

std::string ablation_csv(const std::vector<CellResult>& cells, const std::string& hash) {
  std::ostringstream s;
  s << "# config_hash=" << hash << "\n";
  s << "variant,seed";
  const auto& first = cells.front().metrics.datasets;
  for (const auto& d : first) s << ",mR_" << d.name;
  s << ",mean_mR";
  for (const auto& d : first) s << ",lambda_" << d.name;
  s << "\n";
  for (const auto& c : cells) {
    s << c.variant << ',' << c.seed;
    for (const auto& d : c.metrics.datasets) s << ',' << fixed(d.mr);
    s << ',' << fixed(c.metrics.macro.mr);
    for (const auto& d : c.metrics.datasets) {
      s << ',';
      if (d.mean_lambda) s << fixed(*d.mean_lambda);
    }
    s << "\n";
  }
  return s.str();
}

// Per-variant means over seeds of every numeric CSV column.
std::string ablation_summary(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<std::string>>> rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    if (!l.empty() && l.back() == ',') f.emplace_back();
    return f;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split(line);
      if (header.size() < 3 || header[0] != "variant") throw Error("not an ablation CSV");
      continue;
    }
    auto f = split(line);
    if (!rows.count(f[0])) order.push_back(f[0]);
    rows[f[0]].push_back(std::move(f));
  }
  std::vector<std::size_t> widths(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) widths[i] = std::max<std::size_t>(header[i].size(), 8);
  widths[0] = std::max<std::size_t>(widths[0], 18);
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(widths[0])) << "variant" << "  "
    << std::setw(5) << "seeds";
  for (std::size_t i = 2; i < header.size(); ++i)
    s << "  " << std::right << std::setw(static_cast<int>(widths[i])) << header[i];
  s << "\n";
  for (const auto& v : order) {
    const auto& rs = rows[v];
    s << std::left << std::setw(static_cast<int>(widths[0])) << v << "  " << std::setw(5)
      << rs.size();
    for (std::size_t i = 2; i < header.size(); ++i) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : rs) {
        if (i < r.size() && !r[i].empty()) {
          sum += std::stod(r[i]);
          ++n;
        }
      }
      s << "  " << std::right << std::setw(static_cast<int>(widths[i]))
        << (n ? fixed(sum / static_cast<double>(n), 2) : std::string("-"));
    }
    s << "\n";
  }
  return s.str();
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig c = load_config(o);
  const fs::path dir = output_dir(o, c, "ablate");
  json resolved = resolved_config("ablate", c, c.train, c.benchmark);
  resolved["seeds"] = c.seeds;
  const std::string hash = resolved_hash(resolved);
  write_resolved(dir, resolved);

  std::map<std::uint64_t, ResolvedBenchmark> benches;
  for (std::uint64_t seed : c.seeds) benches.emplace(seed, resolve_benchmark(c, seed));

  struct Cell {
    const AblationVariant* variant;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::uint64_t seed : c.seeds)
    for (const auto& v : ablation_variants()) cells.push_back({&v, seed});

  std::vector<std::optional<CellResult>> results(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      try {
        TrainConfig t = c.train;
        t.seed = cell.seed;
        apply_ablation(t, cell.variant->ablation);
        if (cell.variant->sampling) t.sampler.strategy = parse_sampling_strategy(*cell.variant->sampling);
        const ResolvedBenchmark& b = benches.at(cell.seed);
        const json r = resolved_config("train", c, t, b.description);
        const fs::path cell_dir =
            dir / "cells" / (cell.variant->name + "-seed" + std::to_string(cell.seed));
        write_resolved(cell_dir, r);
        Trainer trainer(b.data, t, resolved_hash(r), cell_dir);
        trainer.run();
        results[i] = CellResult{cell.variant->name, cell.seed, *trainer.final_metrics()};
        std::lock_guard lock(log_mutex);
        out << std::left << std::setw(18) << cell.variant->name << " seed " << cell.seed
            << "  mR " << fixed(trainer.final_metrics()->macro.mr, 2) << "\n"
            << std::flush;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i].empty()) {
      err << "ablation cell " << cells[i].variant->name << " seed " << cells[i].seed
          << " failed: " << errors[i] << "\n";
      return kExitRuntime;
    }
  }
  // Rows ordered variant-major, then seed.
  std::vector<CellResult> ordered;
  for (const auto& v : ablation_variants())
    for (const auto& r : results)
      if (r->variant == v.name) ordered.push_back(*r);
  const std::string csv = ablation_csv(ordered, hash);
  write_text(dir / "ablation.csv", csv);
  const std::string summary = ablation_summary(csv);
  write_text(dir / "ablation.txt", summary);
  out << "\n" << summary << "outputs in " << dir.string() << "\n";
  return kExitOk;
}

// G_k at the end of warm-up and at the last step, read back from a trace.
std::string trace_summary(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<double> warm, last;
  std::size_t g0 = 0, k = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    if (header.empty()) {
      header = f;
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i].size() > 1 && f[i][0] == 'G') {
          if (k == 0) g0 = i;
          ++k;
        }
      if (k == 0) throw Error(path.string() + " is not a sampler trace");
      continue;
    }
    std::vector<double> g(k);
    for (std::size_t i = 0; i < k; ++i) g[i] = std::stod(f.at(g0 + i));
    if (std::stoi(f.at(1)) == 1) warm = g;
    last = std::move(g);
  }
  std::ostringstream s;
  s << "task  G(end of warm-up)  G(final)\n";
  for (std::size_t i = 0; i < k; ++i) {
    s << std::left << std::setw(4) << i << "  " << std::right << std::setw(17)
      << (warm.empty() ? std::string("-") : fixed(warm[i])) << "  " << std::setw(8)
      << (last.empty() ? std::string("-") : fixed(last[i])) << "\n";
  }
  return s.str();
}

int cmd_report(const Options& o, std::ostream& out) {
  for (const auto& input : o.inputs) {
    const fs::path p(input);
    if (!fs::exists(p)) throw Error("not found: " + input);
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
      for (const char* name : {"metrics.json", "metrics.test.json", "metrics.val.json",
                               "ablation.csv", "trace.csv"})
        if (fs::exists(p / name)) files.push_back(p / name);
      if (files.empty()) throw Error("nothing to report in " + input);
    } else {
      files.push_back(p);
    }
    for (const auto& f : files) {
      out << "== " << f.string() << "\n";
      const std::string name = f.filename().string();
      if (f.extension() == ".json") {
        out << MetricsReport::from_json(parse_json_file(f, false)).to_table();
      } else if (name == "trace.csv" || read_file(f).find("\nstep,epoch,task") != std::string::npos) {
        out << trace_summary(f);
      } else if (f.extension() == ".csv") {
        out << ablation_summary(read_file(f));
      } else {
        throw ConfigError("cannot report on " + f.string());
      }
    }
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task instruction-aware retrieval trainer"};
  app.name("mtr");
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Run configuration (JSON)");
    sub->add_option("--seed", o.seed, "Root seed");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--selection", o.selection, "Task selection rule")
        ->check(CLI::IsMember({"multinomial", "argmax"}));
    sub->add_option("--precision", o.precision, "Parameter storage precision")
        ->check(CLI::IsMember({"f32", "f64"}));
  };
  auto variant = [&](CLI::App* sub) {
    sub->add_option("--sampling", o.sampling, "Task sampling strategy")
        ->check(CLI::IsMember({"random", "ggas", "ggas-nosize"}));
    sub->add_option("--ablation", o.ablation, "Query representation variant")
        ->check(CLI::IsMember({"none", "ggas-only", "proposal_only", "linear", "slerp", "shared"}));
  };

  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic benchmark as JSONL");
  common(gen);
  gen->add_option("--spec", o.spec_path, "Benchmark spec (JSON); overrides the config");

  CLI::App* train = app.add_subcommand("train", "Train one model");
  common(train);
  training(train);
  variant(train);
  train->add_option("--resume", o.resume, "Continue from a checkpoint");
  train->add_option("--stop-after", o.stop_after, "Checkpoint and stop after this many steps");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--split", o.split, "Split to evaluate")->check(CLI::IsMember({"val", "test"}));

  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  common(grad);
  grad->add_option("--corrupt-adjoint", o.corrupt_adjoint)->group("");

  CLI::App* abl = app.add_subcommand("ablate", "Train every ablation variant over seeds");
  common(abl);
  training(abl);
  abl->add_option("--jobs", o.jobs, "Parallel training runs")->check(CLI::PositiveNumber);

  CLI::App* rep = app.add_subcommand("report", "Render metrics, traces or ablation tables");
  rep->add_option("inputs", o.inputs, "Files or run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (grad->parsed()) return cmd_gradcheck(o, out, err);
    if (abl->parsed()) return cmd_ablate(o, out, err);
    if (rep->parsed()) return cmd_report(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mtr::cli
