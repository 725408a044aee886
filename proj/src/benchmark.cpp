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

#include "mtr/benchmark.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "mtr/error.hpp"
#include "mtr/rng.hpp"

namespace mtr {

using nlohmann::json;

const char* to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::kIdentity: return "identity";
    case TaskFamily::kRotation: return "rotation";
    case TaskFamily::kAttribute: return "attribute";
  }
  return "?";
}

TaskFamily parse_task_family(const std::string& s) {
  if (s == "identity") return TaskFamily::kIdentity;
  if (s == "rotation") return TaskFamily::kRotation;
  if (s == "attribute") return TaskFamily::kAttribute;
  throw InvalidSpec("unknown task family '" + s + "'");
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kGallery: return "gallery";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "gallery") return Split::kGallery;
  throw ConfigError("unknown split '" + s + "'");
}

void BenchmarkSpec::validate() const {
  if (datasets.empty()) throw InvalidSpec("datasets: at least one dataset is required");
  if (latent_dim == 0) throw InvalidSpec("latent_dim must be positive");
  if (batch_size == 0) throw InvalidSpec("batch_size must be positive");
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const DatasetSpec& d = datasets[k];
    const std::string where = "datasets[" + std::to_string(k) + "] (" + d.name + "): ";
    if (d.train < batch_size) {
      throw InvalidSpec(where + "train size " + std::to_string(d.train) +
                        " is smaller than batch_size " + std::to_string(batch_size));
    }
    if (d.test == 0) throw InvalidSpec(where + "test split must be non-empty");
    if (d.gallery < d.val + d.test) {
      throw InvalidSpec(where + "gallery must hold every val and test positive (" +
                        std::to_string(d.gallery) + " < " + std::to_string(d.val + d.test) +
                        ")");
    }
    if (!(d.noise >= 0.0)) throw InvalidSpec(where + "noise must be nonnegative");
    if (d.family == TaskFamily::kAttribute &&
        (d.attribute_dim == 0 || d.attribute_dim >= latent_dim)) {
      throw InvalidSpec(where + "attribute_dim must be in (0, latent_dim)");
    }
  }
}

json BenchmarkSpec::to_json() const {
  json ds = json::array();
  for (const auto& d : datasets) {
    ds.push_back({{"name", d.name},
                  {"family", to_string(d.family)},
                  {"train", d.train},
                  {"val", d.val},
                  {"test", d.test},
                  {"gallery", d.gallery},
                  {"noise", d.noise},
                  {"attribute_dim", d.attribute_dim}});
  }
  return {{"name", name},
          {"seed", seed},
          {"latent_dim", latent_dim},
          {"batch_size", batch_size},
          {"datasets", ds}};
}

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidSpec(where + "missing required field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidSpec(where + "field '" + key + "': " + e.what());
  }
}

}  // namespace

BenchmarkSpec BenchmarkSpec::from_json(const json& j) {
  BenchmarkSpec spec;
  spec.name = required<std::string>(j, "name", "");
  spec.seed = required<std::uint64_t>(j, "seed", "");
  spec.latent_dim = required<std::size_t>(j, "latent_dim", "");
  spec.batch_size = required<std::size_t>(j, "batch_size", "");
  const json ds = required<json>(j, "datasets", "");
  if (!ds.is_array()) throw InvalidSpec("datasets must be an array");
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const std::string where = "datasets[" + std::to_string(k) + "]: ";
    DatasetSpec d;
    d.name = required<std::string>(ds[k], "name", where);
    d.family = parse_task_family(required<std::string>(ds[k], "family", where));
    d.train = required<std::size_t>(ds[k], "train", where);
    d.val = required<std::size_t>(ds[k], "val", where);
    d.test = required<std::size_t>(ds[k], "test", where);
    d.gallery = required<std::size_t>(ds[k], "gallery", where);
    d.noise = required<double>(ds[k], "noise", where);
    d.attribute_dim = required<std::size_t>(ds[k], "attribute_dim", where);
    spec.datasets.push_back(d);
  }
  spec.validate();
  return spec;
}

BenchmarkSpec BenchmarkSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open benchmark spec " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidSpec(path.string() + ": " + e.what());
  }
  return from_json(j);
}

BenchmarkSpec BenchmarkSpec::ufire_mini(std::uint64_t seed) {
  BenchmarkSpec spec;
  spec.name = "ufire-mini";
  spec.seed = seed;
  spec.latent_dim = 16;
  spec.batch_size = 64;
  auto add = [&](std::string name, TaskFamily family, std::size_t train, std::size_t attr) {
    spec.datasets.push_back({std::move(name), family, train, 100, 200, 1000, 0.1, attr});
  };
  // The two large datasets carry divergent maps; the small ones share the
  // identity map and are easily drowned out under size-proportional sampling.
  add("rotation-2000a", TaskFamily::kRotation, 2000, 0);
  add("rotation-2000b", TaskFamily::kRotation, 2000, 0);
  add("attribute-500", TaskFamily::kAttribute, 500, 4);
  add("identity-500", TaskFamily::kIdentity, 500, 0);
  add("attribute-200", TaskFamily::kAttribute, 200, 4);
  add("identity-200", TaskFamily::kIdentity, 200, 0);
  return spec;
}

BenchmarkSpec BenchmarkSpec::lambda_scale(std::uint64_t seed) {
  BenchmarkSpec spec;
  spec.name = "lambda-scale";
  spec.seed = seed;
  spec.latent_dim = 16;
  spec.batch_size = 64;
  spec.datasets.push_back({"rotation-5000", TaskFamily::kRotation, 5000, 100, 200, 1000, 0.1, 0});
  spec.datasets.push_back({"rotation-500", TaskFamily::kRotation, 500, 100, 200, 1000, 0.1, 0});
  return spec;
}

const std::vector<Sample>& Dataset::split(Split s) const {
  switch (s) {
    case Split::kTrain: return train;
    case Split::kVal: return val;
    case Split::kTest: return test;
    case Split::kGallery: return gallery;
  }
  return train;
}

std::vector<Sample>& Dataset::split(Split s) {
  return const_cast<std::vector<Sample>&>(std::as_const(*this).split(s));
}

std::size_t Benchmark::feature_dim() const {
  for (const auto& d : datasets) {
    if (!d.train.empty()) return d.train.front().query_features.size();
    if (!d.test.empty()) return d.test.front().query_features.size();
  }
  return 0;
}

std::size_t Benchmark::total_train() const {
  std::size_t n = 0;
  for (const auto& d : datasets) n += d.train.size();
  return n;
}

DenseArray dataset_transform(const BenchmarkSpec& spec, std::size_t k) {
  const DatasetSpec& d = spec.datasets.at(k);
  if (d.family != TaskFamily::kRotation) return DenseArray::identity(spec.latent_dim);
  Rng rng(derive_seed(spec.seed, "transform", k));
  return random_orthonormal_columns(rng, spec.latent_dim, spec.latent_dim);
}

namespace {

std::vector<double> apply_transform(const DenseArray& r, const std::vector<double>& z) {
  std::vector<double> out(r.rows(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) out[i] += r(i, j) * z[j];
  return out;
}

std::vector<double> draw(Rng& rng, std::size_t m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(m);
  for (double& x : z) x = normal(rng);
  return z;
}

std::vector<double> noisy(Rng& rng, std::vector<double> v, double sigma) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : v) x += sigma * normal(rng);
  return v;
}

}  // namespace

Benchmark generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  Benchmark bench;
  const std::size_t m = spec.latent_dim;
  for (std::size_t k = 0; k < spec.datasets.size(); ++k) {
    const DatasetSpec& ds = spec.datasets[k];
    const DenseArray transform = dataset_transform(spec, k);
    Rng rng(derive_seed(spec.seed, "dataset", k));

    Dataset out;
    out.id = k;
    out.name = ds.name;
    out.family = to_string(ds.family);
    std::uint64_t next_id = 0;

    std::vector<std::vector<double>> positive_latents;
    auto make_pairs = [&](std::size_t count, Split split, std::vector<Sample>& dst) {
      for (std::size_t i = 0; i < count; ++i) {
        const std::vector<double> z = draw(rng, m);
        Sample s;
        s.query_features = noisy(rng, z, ds.noise);
        s.target_features = noisy(rng, apply_transform(transform, z), ds.noise);
        s.instruction_id = k;
        s.target_id = next_id++;
        s.dataset_id = k;
        s.split = split;
        if (split != Split::kTrain) {
          Sample g = s;
          g.query_features.clear();
          g.split = Split::kGallery;
          out.gallery.push_back(std::move(g));
          positive_latents.push_back(z);
        }
        dst.push_back(std::move(s));
      }
    };
    make_pairs(ds.train, Split::kTrain, out.train);
    make_pairs(ds.val, Split::kVal, out.val);
    make_pairs(ds.test, Split::kTest, out.test);

    const std::size_t distractors = ds.gallery - ds.val - ds.test;
    for (std::size_t i = 0; i < distractors; ++i) {
      std::vector<double> z = draw(rng, m);
      if (ds.family == TaskFamily::kAttribute && i < positive_latents.size()) {
        // Same content as a positive, different attribute block.
        const std::vector<double>& base = positive_latents[i];
        std::copy(base.begin(), base.end() - static_cast<std::ptrdiff_t>(ds.attribute_dim),
                  z.begin());
      }
      Sample g;
      g.target_features = noisy(rng, apply_transform(transform, z), ds.noise);
      g.instruction_id = k;
      g.target_id = next_id++;
      g.dataset_id = k;
      g.split = Split::kGallery;
      out.gallery.push_back(std::move(g));
    }
    bench.datasets.push_back(std::move(out));
  }
  return bench;
}

void save_jsonl(const Benchmark& benchmark, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& ds : benchmark.datasets) {
    for (Split split : {Split::kTrain, Split::kVal, Split::kTest, Split::kGallery}) {
      for (const auto& s : ds.split(split)) {
        json rec = {{"dataset_id", s.dataset_id},
                    {"split", to_string(s.split)},
                    {"instruction_id", s.instruction_id},
                    {"query_features", s.query_features},
                    {"target_features", s.target_features},
                    {"target_id", s.target_id}};
        out << rec.dump() << '\n';
      }
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

Benchmark load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Benchmark bench;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> dims;  // dataset -> (query, target)
  std::string line;
  std::size_t lineno = 0;
  static const char* kFields[] = {"dataset_id",      "split",           "instruction_id",
                                  "query_features",  "target_features", "target_id"};
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw MalformedRecord(lineno, e.what());
    }
    if (!rec.is_object() || rec.size() != std::size(kFields)) {
      throw MalformedRecord(lineno, "expected an object with exactly 6 fields");
    }
    Sample s;
    try {
      for (const char* f : kFields) {
        if (!rec.contains(f)) throw MalformedRecord(lineno, std::string("missing field ") + f);
      }
      s.dataset_id = rec.at("dataset_id").get<std::size_t>();
      s.split = parse_split(rec.at("split").get<std::string>());
      s.instruction_id = rec.at("instruction_id").get<std::size_t>();
      s.query_features = rec.at("query_features").get<std::vector<double>>();
      s.target_features = rec.at("target_features").get<std::vector<double>>();
      s.target_id = rec.at("target_id").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw MalformedRecord(lineno, e.what());
    } catch (const ConfigError& e) {
      throw MalformedRecord(lineno, e.what());
    }

    auto [it, fresh] = dims.try_emplace(s.dataset_id, 0, s.target_features.size());
    auto& [qdim, tdim] = it->second;
    if (s.target_features.size() != tdim) {
      throw DimensionMismatch("line " + std::to_string(lineno) + ": dataset " +
                              std::to_string(s.dataset_id) + " target width " +
                              std::to_string(s.target_features.size()) + " != " +
                              std::to_string(tdim));
    }
    if (s.split != Split::kGallery) {
      if (qdim == 0) qdim = s.query_features.size();
      if (s.query_features.size() != qdim) {
        throw DimensionMismatch("line " + std::to_string(lineno) + ": dataset " +
                                std::to_string(s.dataset_id) + " query width " +
                                std::to_string(s.query_features.size()) + " != " +
                                std::to_string(qdim));
      }
    }

    if (bench.datasets.size() <= s.dataset_id) {
      const std::size_t old = bench.datasets.size();
      bench.datasets.resize(s.dataset_id + 1);
      for (std::size_t k = old; k < bench.datasets.size(); ++k) {
        bench.datasets[k].id = k;
        bench.datasets[k].name = "dataset-" + std::to_string(k);
      }
    }
    bench.datasets[s.dataset_id].split(s.split).push_back(std::move(s));
  }
  return bench;
}

void apply_spec_metadata(Benchmark& benchmark, const BenchmarkSpec& spec) {
  for (std::size_t k = 0; k < benchmark.datasets.size() && k < spec.datasets.size(); ++k) {
    benchmark.datasets[k].name = spec.datasets[k].name;
    benchmark.datasets[k].family = to_string(spec.datasets[k].family);
  }
}

}  // namespace mtr
