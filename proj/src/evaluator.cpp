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

#include "mtr/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mtr/error.hpp"

namespace mtr {

using nlohmann::json;

std::vector<std::uint64_t> score_gallery(const UnitVector& query,
                                         const std::vector<UnitVector>& gallery,
                                         const std::vector<std::uint64_t>& ids) {
  if (gallery.empty()) throw EmptyGallery("cannot rank against an empty gallery");
  if (ids.size() != gallery.size()) throw ShapeMismatch("gallery ids and vectors differ in count");
  std::vector<double> scores(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i)
    scores[i] = dot(query.values(), gallery[i].values());
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<std::uint64_t> ranked(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = ids[order[i]];
  return ranked;
}

double recall_at_k(const std::vector<std::vector<std::uint64_t>>& rankings,
                   const std::vector<std::vector<std::uint64_t>>& positives, std::size_t k) {
  if (rankings.size() != positives.size()) {
    throw ShapeMismatch("recall_at_k: rankings and positives differ in count");
  }
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (positives[q].empty()) throw ConfigError("every query needs at least one positive");
    const std::size_t cutoff = std::min(k, rankings[q].size());
    const bool hit = std::any_of(rankings[q].begin(), rankings[q].begin() + cutoff,
                                 [&](std::uint64_t id) {
                                   return std::find(positives[q].begin(), positives[q].end(),
                                                    id) != positives[q].end();
                                 });
    hits += hit ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(rankings.size());
}

DatasetMetrics evaluate_dataset(const RetrievalModel& model, const Dataset& dataset,
                                Split split) {
  const std::vector<Sample>& queries = dataset.split(split);
  DatasetMetrics m;
  m.dataset_id = dataset.id;
  m.name = dataset.name;
  m.queries = queries.size();
  if (queries.empty()) return m;
  if (dataset.gallery.empty()) throw EmptyGallery("dataset " + dataset.name + " has no gallery");

  const auto q = model.embed_queries(queries);
  const auto g = model.embed_targets(dataset.gallery);
  std::vector<std::uint64_t> ids(dataset.gallery.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = dataset.gallery[i].target_id;

  std::vector<std::vector<std::uint64_t>> rankings(queries.size());
  std::vector<std::vector<std::uint64_t>> positives(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto full = score_gallery(q.vectors[i], g, ids);
    full.resize(std::min<std::size_t>(full.size(), 10));
    rankings[i] = std::move(full);
    positives[i] = {queries[i].target_id};
  }
  m.r1 = recall_at_k(rankings, positives, 1);
  m.r5 = recall_at_k(rankings, positives, 5);
  m.r10 = recall_at_k(rankings, positives, 10);
  m.mr = (m.r1 + m.r5 + m.r10) / 3.0;
  if (!q.lambda.empty()) {
    m.mean_lambda = std::accumulate(q.lambda.begin(), q.lambda.end(), 0.0) /
                    static_cast<double>(q.lambda.size());
  }
  return m;
}

MetricsReport evaluate(const RetrievalModel& model, const Benchmark& benchmark, Split split) {
  MetricsReport report;
  report.split = to_string(split);
  for (const auto& ds : benchmark.datasets) {
    report.datasets.push_back(evaluate_dataset(model, ds, split));
  }
  DatasetMetrics& macro = report.macro;
  macro.name = "macro";
  macro.dataset_id = benchmark.datasets.size();
  const double n = static_cast<double>(report.datasets.size());
  if (n > 0) {
    double lambda_sum = 0.0;
    std::size_t lambda_count = 0;
    for (const auto& d : report.datasets) {
      macro.queries += d.queries;
      macro.r1 += d.r1 / n;
      macro.r5 += d.r5 / n;
      macro.r10 += d.r10 / n;
      macro.mr += d.mr / n;
      if (d.mean_lambda) {
        lambda_sum += *d.mean_lambda;
        ++lambda_count;
      }
    }
    if (lambda_count) macro.mean_lambda = lambda_sum / static_cast<double>(lambda_count);
  }
  return report;
}

namespace {

json metrics_json(const DatasetMetrics& d) {
  json j = {{"dataset_id", d.dataset_id}, {"name", d.name}, {"queries", d.queries},
            {"r1", d.r1},                 {"r5", d.r5},     {"r10", d.r10},
            {"mr", d.mr}};
  j["mean_lambda"] = d.mean_lambda ? json(*d.mean_lambda) : json(nullptr);
  return j;
}

DatasetMetrics metrics_from_json(const json& j) {
  DatasetMetrics d;
  d.dataset_id = j.at("dataset_id").get<std::size_t>();
  d.name = j.at("name").get<std::string>();
  d.queries = j.at("queries").get<std::size_t>();
  d.r1 = j.at("r1").get<double>();
  d.r5 = j.at("r5").get<double>();
  d.r10 = j.at("r10").get<double>();
  d.mr = j.at("mr").get<double>();
  if (!j.at("mean_lambda").is_null()) d.mean_lambda = j.at("mean_lambda").get<double>();
  return d;
}

}  // namespace

json MetricsReport::to_json() const {
  json rows = json::array();
  for (const auto& d : datasets) rows.push_back(metrics_json(d));
  return {{"schema_version", kSchemaVersion},
          {"split", split},
          {"seed", seed},
          {"config_hash", config_hash},
          {"step", step},
          {"datasets", rows},
          {"macro", metrics_json(macro)}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw ConfigError("unsupported metrics schema version");
    }
    MetricsReport r;
    r.split = j.at("split").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.step = j.at("step").get<std::uint64_t>();
    for (const auto& d : j.at("datasets")) r.datasets.push_back(metrics_from_json(d));
    r.macro = metrics_from_json(j.at("macro"));
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed metrics report: ") + e.what());
  }
}

std::string MetricsReport::to_table() const {
  std::size_t width = 7;
  for (const auto& d : datasets) width = std::max(width, d.name.size());
  std::ostringstream os;
  char buf[256];
  os << "# split=" << split << " seed=" << seed << " step=" << step
     << " config=" << config_hash << " schema=" << kSchemaVersion << '\n';
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s %8s %8s\n", static_cast<int>(width),
                "dataset", "R@1", "R@5", "R@10", "mR", "lambda");
  os << buf;
  auto row = [&](const DatasetMetrics& d) {
    char lam[32] = "-";
    if (d.mean_lambda) std::snprintf(lam, sizeof lam, "%.4f", *d.mean_lambda);
    std::snprintf(buf, sizeof buf, "%-*s %8.2f %8.2f %8.2f %8.2f %8s\n", static_cast<int>(width),
                  d.name.c_str(), d.r1, d.r5, d.r10, d.mr, lam);
    os << buf;
  };
  for (const auto& d : datasets) row(d);
  row(macro);
  return os.str();
}

}  // namespace mtr
