// Copyright 2026 The Chiron Authors.
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

// Sheet density, correlation, inter-annotator agreement and classifier
// evaluation.

#ifndef CHIRON_METRICS_HPP_
#define CHIRON_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chiron/corpus.hpp"
#include "chiron/error.hpp"
#include "chiron/generation.hpp"
#include "chiron/sheet.hpp"
#include "chiron/text.hpp"
#include "chiron/validation.hpp"

namespace chiron {

// ---------------------------------------------------------------------------
// Density

inline std::size_t story_sentence_count(const Story& story) {
  std::size_t n = 0;
  for (const Entry& e : story.entries) n += split_sentences(e.text).size();
  return n;
}

struct DensityCombo {
  std::string story_id;
  std::string character_id;
  std::size_t story_sentences = 0;
  std::map<Category, std::size_t> counts;
};

struct DensityReport {
  std::string source;
  std::string setup;
  std::vector<DensityCombo> combos;
  std::vector<std::string> excluded;
  double density = 0;
  std::map<Category, double> density_c;
};

// density   = mean over combos of (sheet sentences / story sentences)
// density_c = the same restricted to category c
// Stories without sentences are excluded and listed.
inline DensityReport density(const std::vector<CharacterSheet>& sheets,
                             const std::vector<Story>& stories, std::string setup = {},
                             std::string source = {}, const WarningSink& warnings = {}) {
  std::map<std::string, const Story*> by_id;
  for (const Story& s : stories) by_id[s.story_id] = &s;
  std::map<std::string, std::size_t> sentence_cache;

  DensityReport report;
  report.setup = std::move(setup);
  report.source = std::move(source);
  for (const CharacterSheet& sheet : sheets) {
    auto it = by_id.find(sheet.story_id);
    if (it == by_id.end()) {
      throw InputError("sheet refers to unknown story " + sheet.story_id);
    }
    auto cached = sentence_cache.find(sheet.story_id);
    if (cached == sentence_cache.end()) {
      cached = sentence_cache.emplace(sheet.story_id, story_sentence_count(*it->second)).first;
    }
    std::string combo = sheet.story_id + "/" + sheet.character.character_id;
    if (cached->second == 0) {
      report.excluded.push_back(combo);
      warn(warnings, "density: story " + sheet.story_id + " has no sentences; " + combo +
                         " excluded");
      continue;
    }
    DensityCombo c;
    c.story_id = sheet.story_id;
    c.character_id = sheet.character.character_id;
    c.story_sentences = cached->second;
    c.counts = sheet_sentence_count(sheet).per_category;
    report.combos.push_back(std::move(c));
  }

  for (Category cat : kAllCategories) report.density_c[cat] = 0.0;
  if (report.combos.empty()) return report;
  const long double n = static_cast<long double>(report.combos.size());
  long double total = 0;
  std::map<Category, long double> per;
  for (const DensityCombo& c : report.combos) {
    const long double denom = static_cast<long double>(c.story_sentences);
    long double sum = 0;
    for (Category cat : kAllCategories) {
      auto k = c.counts.find(cat);
      long double count = k == c.counts.end() ? 0 : static_cast<long double>(k->second);
      per[cat] += count / denom;
      sum += count;
    }
    total += sum / denom;
  }
  report.density = static_cast<double>(total / n);
  for (Category cat : kAllCategories) {
    report.density_c[cat] = static_cast<double>(per[cat] / n);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pearson

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatisticsError("pearson: lengths differ");
  if (x.size() < 2) throw StatisticsError("pearson: need at least two points");
  const long double n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    long double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw StatisticsError("pearson: correlation undefined for zero variance");
  }
  long double r = sxy / std::sqrt(sxx * syy);
  return static_cast<double>(std::clamp(r, -1.0L, 1.0L));
}

// ---------------------------------------------------------------------------
// Krippendorff's alpha

enum class AlphaDistance { kInterval, kOrdinal };

inline const char* alpha_distance_name(AlphaDistance d) {
  return d == AlphaDistance::kInterval ? "interval" : "ordinal";
}

inline AlphaDistance parse_alpha_distance(std::string_view s) {
  std::string n = to_lower_ascii(trim(s));
  if (n == "interval") return AlphaDistance::kInterval;
  if (n == "ordinal") return AlphaDistance::kOrdinal;
  throw ConfigError("unknown alpha distance '" + std::string(s) + "'");
}

// Coincidence-matrix form over units of values; units with fewer than two
// values carry no pairs and are ignored.
inline double krippendorff_alpha(const std::vector<std::vector<int>>& units,
                                 AlphaDistance distance = AlphaDistance::kInterval) {
  std::vector<int> values;
  for (const auto& u : units) {
    if (u.size() >= 2) values.insert(values.end(), u.begin(), u.end());
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty()) throw StatisticsError("krippendorff_alpha: no pairable values");
  const std::size_t v = values.size();
  auto index = [&](int x) {
    return static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), x) -
                                    values.begin());
  };

  std::vector<std::vector<long double>> o(v, std::vector<long double>(v, 0));
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    const long double w = 1.0L / static_cast<long double>(u.size() - 1);
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (i != j) o[index(u[i])][index(u[j])] += w;
      }
    }
  }
  std::vector<long double> nc(v, 0);
  long double n = 0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) nc[c] += o[c][k];
    n += nc[c];
  }

  auto delta2 = [&](std::size_t c, std::size_t k) -> long double {
    if (distance == AlphaDistance::kInterval) {
      long double d = static_cast<long double>(values[c]) - values[k];
      return d * d;
    }
    std::size_t lo = std::min(c, k), hi = std::max(c, k);
    long double s = 0;
    for (std::size_t g = lo; g <= hi; ++g) s += nc[g];
    s -= (nc[lo] + nc[hi]) / 2.0L;
    return s * s;
  };

  long double dobs = 0, dexp = 0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      long double d = delta2(c, k);
      dobs += o[c][k] * d;
      dexp += nc[c] * nc[k] * d;
    }
  }
  dobs /= n;
  dexp /= n * (n - 1);
  if (dobs == 0) return 1.0;
  if (dexp == 0) throw StatisticsError("krippendorff_alpha: no expected disagreement");
  return static_cast<double>(1.0L - dobs / dexp);
}

inline double krippendorff_alpha(const std::vector<AnnotationRecord>& records,
                                 AlphaDistance distance = AlphaDistance::kInterval) {
  std::vector<std::vector<int>> units;
  units.reserve(records.size());
  for (const AnnotationRecord& r : records) {
    std::vector<int> u;
    for (const auto& [_, l] : r.labels) u.push_back(l);
    units.push_back(std::move(u));
  }
  return krippendorff_alpha(units, distance);
}

// ---------------------------------------------------------------------------
// Classifier evaluation

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, accuracy = 0;
  std::string gold_rule = "ge4";
  std::string prediction_rule = "eq5";
  std::optional<double> alpha;
  std::optional<std::string> alpha_distance;
  std::optional<double> pearson;
};

// Gold is positive at label >= 4; predictions use the acceptance policy.
// A ratio with a zero denominator is reported as 0.
inline EvalReport classifier_report(const std::vector<int>& predictions,
                                    const std::vector<int>& gold, AcceptancePolicy rule) {
  if (predictions.size() != gold.size()) {
    throw ContractError("classifier_report: prediction and gold lengths differ");
  }
  if (predictions.empty()) throw StatisticsError("classifier_report: empty input");
  EvalReport r;
  r.prediction_rule = policy_name(rule);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool p = accept(predictions[i], rule);
    bool g = accept(gold[i], AcceptancePolicy::kGe4);
    if (p && g) ++r.tp;
    else if (p) ++r.fp;
    else if (g) ++r.fn;
    else ++r.tn;
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.accuracy = ratio(r.tp + r.tn, gold.size());
  return r;
}

struct LabelDistributionRow {
  std::string source_model;  // "All" for the combined row
  std::size_t records = 0;
  std::map<int, double> percent;  // labels 1-5
};

// One gold label per record; rows per source model in name order, then the
// combined row. Models without records do not appear.
inline std::vector<LabelDistributionRow> label_distribution(
    const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::map<int, std::size_t>> counts;
  std::map<int, std::size_t> all;
  for (const AnnotationRecord& r : records) {
    int g = r.gold_label();
    ++counts[r.source_model][g];
    ++all[g];
  }
  auto row = [](std::string name, const std::map<int, std::size_t>& c) {
    LabelDistributionRow out;
    out.source_model = std::move(name);
    for (const auto& [_, n] : c) out.records += n;
    for (int l = 1; l <= 5; ++l) {
      auto it = c.find(l);
      std::size_t n = it == c.end() ? 0 : it->second;
      out.percent[l] = out.records ? 100.0 * static_cast<double>(n) /
                                         static_cast<double>(out.records)
                                   : 0.0;
    }
    return out;
  };
  std::vector<LabelDistributionRow> rows;
  for (const auto& [model, c] : counts) rows.push_back(row(model, c));
  if (!records.empty()) rows.push_back(row("All", all));
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_density_table(const std::vector<DensityReport>& reports) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "Source" << std::setw(12) << "Setup"
      << std::right << std::setw(9) << "Density";
  for (Category c : kAllCategories) out << std::setw(22) << category_title(c);
  out << std::setw(8) << "Combos" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const DensityReport& r : reports) {
    out << std::left << std::setw(14) << (r.source.empty() ? "-" : r.source)
        << std::setw(12) << (r.setup.empty() ? "-" : r.setup) << std::right
        << std::setw(9) << r.density;
    for (Category c : kAllCategories) out << std::setw(22) << r.density_c.at(c);
    out << std::setw(8) << r.combos.size() << "\n";
  }
  return out.str();
}

inline std::string format_eval_report(const EvalReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "Prediction rule  Gold rule  Precision  Recall  Accuracy   TP   FP   FN   TN\n";
  out << std::left << std::setw(17) << r.prediction_rule << std::setw(11) << r.gold_rule
      << std::right << std::setw(9) << r.precision << std::setw(8) << r.recall
      << std::setw(10) << r.accuracy << std::setw(5) << r.tp << std::setw(5) << r.fp
      << std::setw(5) << r.fn << std::setw(5) << r.tn << "\n";
  if (r.alpha) {
    out << "Krippendorff alpha (" << r.alpha_distance.value_or("interval")
        << "): " << *r.alpha << "\n";
  }
  if (r.pearson) out << "Pearson r: " << *r.pearson << "\n";
  return out.str();
}

inline std::string format_label_distribution(const std::vector<LabelDistributionRow>& rows) {
  std::size_t width = 12;
  for (const auto& r : rows) width = std::max(width, r.source_model.size() + 2);
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Source model";
  for (int l = 1; l <= 5; ++l) out << std::right << std::setw(7) << l;
  out << std::setw(9) << "Records" << "\n" << std::fixed << std::setprecision(1);
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.source_model;
    for (int l = 1; l <= 5; ++l) out << std::right << std::setw(7) << r.percent.at(l);
    out << std::setw(9) << r.records << "\n";
  }
  return out.str();
}

inline void to_json(nlohmann::json& j, const DensityReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, v] : r.density_c) per[category_id(c)] = v;
  nlohmann::json combos = nlohmann::json::array();
  for (const DensityCombo& c : r.combos) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [cat, n] : c.counts) counts[category_id(cat)] = n;
    combos.push_back({{"story_id", c.story_id},
                      {"character_id", c.character_id},
                      {"story_sentences", c.story_sentences},
                      {"counts", counts}});
  }
  j = nlohmann::json{{"source", r.source},       {"setup", r.setup},
                     {"density", r.density},     {"density_c", per},
                     {"combos", combos},         {"excluded", r.excluded}};
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"tp", r.tp},
                     {"fp", r.fp},
                     {"fn", r.fn},
                     {"tn", r.tn},
                     {"precision", r.precision},
                     {"recall", r.recall},
                     {"accuracy", r.accuracy},
                     {"gold_rule", r.gold_rule},
                     {"prediction_rule", r.prediction_rule}};
  j["alpha"] = r.alpha ? nlohmann::json(*r.alpha) : nlohmann::json();
  j["alpha_distance"] =
      r.alpha_distance ? nlohmann::json(*r.alpha_distance) : nlohmann::json();
  j["pearson"] = r.pearson ? nlohmann::json(*r.pearson) : nlohmann::json();
}

inline void to_json(nlohmann::json& j, const LabelDistributionRow& r) {
  nlohmann::json pct = nlohmann::json::object();
  for (const auto& [l, p] : r.percent) pct[std::to_string(l)] = p;
  j = nlohmann::json{{"source_model", r.source_model}, {"records", r.records}, {"percent", pct}};
}

}  // namespace chiron

#endif  // CHIRON_METRICS_HPP_
