// Copyright (c) 2026 The fluentcrit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fluentcrit/criteria.hpp"
#include "fluentcrit/error.hpp"
#include "fluentcrit/serialize.hpp"
#include "fluentcrit/version.hpp"

namespace fluentcrit {

struct ReportRow {
  std::string id;
  double mcd_db = 0.0;
  std::optional<double> boundary_discontinuity;
  LossBreakdown loss;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct ReportDoc {
  std::vector<ReportRow> rows;
  std::map<std::string, Aggregate> aggregates;
  Json config;
  std::string tool_version;

  friend bool operator==(const ReportDoc&, const ReportDoc&) = default;
};

inline Aggregate aggregate(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "aggregate of no values");
  Aggregate a;
  a.count = values.size();
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

/// Metric name -> accessor; rows lacking a metric are skipped for it.
inline const std::map<std::string, std::function<std::optional<double>(const ReportRow&)>>&
report_metrics() {
  static const std::map<std::string, std::function<std::optional<double>(const ReportRow&)>> m{
      {"mcd_db", [](const ReportRow& r) { return std::optional(r.mcd_db); }},
      {"boundary_discontinuity", [](const ReportRow& r) { return r.boundary_discontinuity; }},
      {"loss.total", [](const ReportRow& r) { return std::optional(r.loss.total); }},
      {"loss.hlac_total", [](const ReportRow& r) { return std::optional(r.loss.hlac_total); }},
      {"loss.cgpc", [](const ReportRow& r) { return std::optional(r.loss.cgpc); }},
      {"loss.mae", [](const ReportRow& r) { return std::optional(r.loss.mae); }},
      {"loss.ssim_loss", [](const ReportRow& r) { return std::optional(r.loss.ssim_loss); }},
  };
  return m;
}

inline ReportDoc make_report(std::vector<ReportRow> rows, Json config) {
  if (rows.empty()) throw Error(ErrorKind::EmptyInput, "report needs at least one row");
  ReportDoc doc;
  for (const auto& [name, get] : report_metrics()) {
    std::vector<double> values;
    for (const auto& r : rows)
      if (auto v = get(r)) values.push_back(*v);
    if (!values.empty()) doc.aggregates[name] = aggregate(values);
  }
  doc.rows = std::move(rows);
  doc.config = std::move(config);
  doc.tool_version = kVersion;
  return doc;
}

inline Json row_to_json(const ReportRow& r) {
  Json j{{"id", r.id}, {"mcd_db", r.mcd_db}, {"loss", loss_to_json(r.loss)}};
  j["boundary_discontinuity"] =
      r.boundary_discontinuity ? Json(*r.boundary_discontinuity) : Json(nullptr);
  return j;
}

inline ReportRow row_from_json(const Json& j) {
  return detail::guarded("report row", [&] {
    ReportRow r;
    r.id = j.at("id").get<std::string>();
    r.mcd_db = j.at("mcd_db").get<double>();
    const auto& bd = j.at("boundary_discontinuity");
    if (!bd.is_null()) r.boundary_discontinuity = bd.get<double>();
    r.loss = loss_from_json(j.at("loss"));
    return r;
  });
}

inline Json report_to_json(const ReportDoc& doc) {
  Json rows = Json::array();
  for (const auto& r : doc.rows) rows.push_back(row_to_json(r));
  Json aggs = Json::object();
  for (const auto& [name, a] : doc.aggregates)
    aggs[name] = {{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
  return Json{{"rows", rows},
              {"aggregates", aggs},
              {"config", doc.config},
              {"tool_version", doc.tool_version}};
}

inline ReportDoc report_from_json(const Json& j) {
  return detail::guarded("report JSON", [&] {
    ReportDoc doc;
    for (const auto& r : j.at("rows")) doc.rows.push_back(row_from_json(r));
    for (const auto& [name, a] : j.at("aggregates").items())
      doc.aggregates[name] = {a.at("mean").get<double>(), a.at("std").get<double>(),
                              a.at("count").get<std::size_t>()};
    doc.config = j.at("config");
    doc.tool_version = j.at("tool_version").get<std::string>();
    return doc;
  });
}

/// Key-sorted, two-space indented, newline-terminated.
inline void emit_report(const ReportDoc& doc, std::ostream& sink) {
  sink << report_to_json(doc).dump(2) << '\n';
}

inline ReportDoc parse_report(std::istream& source) {
  std::stringstream buf;
  buf << source.rdbuf();
  return report_from_json(parse_json_text(buf.str()));
}

}  // namespace fluentcrit
