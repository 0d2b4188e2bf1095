#include "alignkit/evalharness.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>

#include "alignkit/judge.hpp"
#include "alignkit/loops.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

using nlohmann::json;

namespace {

constexpr const char* kMissingResponse = "missing response";

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string to_string(EvalMetric m) { return m == EvalMetric::accuracy ? "accuracy" : "faithfulness"; }

EvalMetric parse_eval_metric(std::string_view s) {
  if (s == "accuracy") return EvalMetric::accuracy;
  if (s == "faithfulness") return EvalMetric::faithfulness;
  throw UnknownEnumValue("metric", s);
}

EvalMetric metric_for(Format f) {
  return f == Format::multiple_choice || f == Format::extraction ? EvalMetric::accuracy : EvalMetric::faithfulness;
}

void validate_eval_item(const EvalItem& item) {
  if (!(item.weight > 0.0)) throw InvalidEvalItem("item " + item.sample.id + " has a non-positive weight");
  if (metric_for(item.sample.format) != item.metric) {
    throw InvalidEvalItem("item " + item.sample.id + " uses " + to_string(item.metric) + " for format " +
                          to_string(item.sample.format));
  }
}

ItemScore score_item(ModelGateway& gateway, const EvalItem& item, const std::string& response,
                     const std::vector<ExtractionPattern>& patterns, double tol) {
  validate_eval_item(item);
  ItemScore out;
  const ModelOutput parsed = split_think(response);
  if (parsed.answer.empty()) {
    out.unscored_reason = "empty response";
    return out;
  }
  if (item.metric == EvalMetric::accuracy) {
    const VerifierOutcome o = verify_with_escalation(gateway, parsed.answer, item.sample.answer, patterns, tol);
    out.match_kind = o.match_kind;
    out.transcript_hash = o.judge_request_hash;
    if (!o.judge_failure.empty()) {
      out.unscored_reason = "judge unavailable: " + o.judge_failure;
      return out;
    }
    out.score = o.verdict == Verdict::correct ? 1.0 : 0.0;
    return out;
  }
  std::vector<Message> transcript = generation_messages(item.sample);
  transcript.push_back({Role::assistant, parsed.answer});
  const RubricSpec rubric = RubricSpec::standard();
  out.transcript_hash = request_hash(rubric_messages(gateway, transcript, item.sample.context, rubric));
  try {
    RubricResult r = judge_rubric(gateway, transcript, item.sample.context, rubric);
    out.score = r.scores.at("factuality");
    out.rubric = std::move(r.scores);
  } catch (const GatewayError& e) {
    out.unscored_reason = std::string("judge unavailable: ") + e.what();
  } catch (const JudgeParseFailure& e) {
    out.unscored_reason = std::string("unparseable rubric: ") + e.what();
  }
  return out;
}

std::map<BusinessArea, double> aggregate_dimension(const std::vector<AreaScore>& scores) {
  std::map<BusinessArea, std::pair<double, double>> sums;
  for (const auto& s : scores) {
    auto& [weighted, total] = sums[s.area];
    weighted += s.weight * s.score;
    total += s.weight;
  }
  std::map<BusinessArea, double> out;
  for (const auto& [area, acc] : sums) {
    if (acc.second > 0.0) out[area] = 100.0 * acc.first / acc.second;
  }
  return out;
}

ReportRow aggregate_report(const std::map<std::string, std::vector<double>>& groups, const std::string& model_id) {
  ReportRow row;
  row.model_id = model_id;
  for (const auto& [name, scores] : groups) {
    if (scores.empty()) throw EmptyGroup("group " + name + " has no scores");
    row.group_avgs[name] = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  }
  const auto ins = row.group_avgs.find(kInsuranceGroup);
  const auto gen = row.group_avgs.find(kGeneralGroup);
  if (ins != row.group_avgs.end() && gen != row.group_avgs.end()) row.two_avg = (ins->second + gen->second) / 2.0;
  return row;
}

json ledger_entry_to_json(const LedgerEntry& e) {
  json j{{"id", e.id},
         {"area", to_string(e.area)},
         {"metric", to_string(e.metric)},
         {"weight", e.weight},
         {"match_kind", to_string(e.match_kind)},
         {"transcript_hash", e.transcript_hash},
         {"unscored_reason", e.unscored_reason}};
  j["score"] = e.score ? json(*e.score) : json();
  return j;
}

LedgerEntry ledger_entry_from_json(const json& j) {
  LedgerEntry e;
  e.id = j.at("id").get<std::string>();
  e.area = parse_business_area(j.at("area").get<std::string>());
  e.metric = parse_eval_metric(j.at("metric").get<std::string>());
  e.weight = j.value("weight", 1.0);
  if (!j.at("score").is_null()) e.score = j.at("score").get<double>();
  const std::string kind = j.value("match_kind", "none");
  for (auto k : {MatchKind::exact, MatchKind::pattern, MatchKind::numeric, MatchKind::semantic, MatchKind::none}) {
    if (to_string(k) == kind) e.match_kind = k;
  }
  e.transcript_hash = j.value("transcript_hash", "");
  e.unscored_reason = j.value("unscored_reason", "");
  return e;
}

void write_ledger(const std::filesystem::path& path, const std::vector<LedgerEntry>& ledger) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write ledger " + path.string());
  for (const auto& e : ledger) out << ledger_entry_to_json(e).dump() << '\n';
}

std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read ledger " + path.string());
  std::vector<LedgerEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) out.push_back(ledger_entry_from_json(json::parse(line)));
  }
  return out;
}

std::map<std::string, std::string> read_responses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read responses " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out[j.at("id").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ReportRow report_from_ledger(const std::vector<LedgerEntry>& ledger, const EvalConfig& cfg) {
  std::vector<AreaScore> scores;
  std::map<BusinessArea, double> item_counts;
  std::size_t unscored = 0, missing = 0;
  for (const auto& e : ledger) {
    if (e.score) {
      scores.push_back({e.area, *e.score, e.weight});
      item_counts[e.area] += 1.0;
    } else if (e.unscored_reason == kMissingResponse) {
      ++missing;
    } else {
      ++unscored;
    }
  }
  const auto dims = aggregate_dimension(scores);

  std::map<std::string, std::vector<double>> groups;
  if (!dims.empty()) {
    double weighted = 0.0, total = 0.0;
    for (const auto& [area, value] : dims) {
      double w = item_counts.at(area);
      if (!cfg.dimension_weights.empty()) {
        const auto it = cfg.dimension_weights.find(area);
        if (it == cfg.dimension_weights.end()) {
          throw std::invalid_argument("no dimension weight configured for " + to_string(area));
        }
        w = it->second;
      }
      weighted += w * value;
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("dimension weights sum to zero");
    groups[kInsuranceGroup] = {weighted / total};
  }
  if (!cfg.general_scores.empty()) {
    for (const auto& [name, value] : cfg.general_scores) groups[kGeneralGroup].push_back(value);
  }

  ReportRow row = aggregate_report(groups, cfg.model_id);
  row.dimension_scores = dims;
  row.scored = scores.size();
  row.unscored = unscored;
  row.missing = missing;
  row.notes.push_back(cfg.dimension_weights.empty()
                          ? "per-area weights are not published; the insurance average weights areas by scored item count"
                          : "per-area weights come from configuration");
  row.notes.push_back("faithfulness items are scored on the factuality rubric dimension only");
  return row;
}

EvalResult run_eval(ModelGateway& gateway, const std::vector<Sample>& items,
                    const std::map<std::string, std::string>& responses, const EvalConfig& cfg) {
  std::vector<EvalItem> evals;
  evals.reserve(items.size());
  for (const auto& s : items) {
    EvalItem item{s, metric_for(s.format), 1.0};
    validate_eval_item(item);
    evals.push_back(std::move(item));
  }

  EvalResult result;
  result.ledger.resize(evals.size());
  parallel_for(evals.size(), gateway.config().max_in_flight, [&](std::size_t i) {
    const EvalItem& item = evals[i];
    LedgerEntry& e = result.ledger[i];
    e.id = item.sample.id;
    e.area = item.sample.business_area;
    e.metric = item.metric;
    e.weight = item.weight;
    const auto it = responses.find(item.sample.id);
    if (it == responses.end()) {
      e.unscored_reason = kMissingResponse;
      return;
    }
    const ItemScore s = score_item(gateway, item, it->second, cfg.patterns, cfg.numeric_tol);
    e.score = s.score;
    e.match_kind = s.match_kind;
    e.transcript_hash = s.transcript_hash;
    e.unscored_reason = s.unscored_reason;
  });
  result.report = report_from_ledger(result.ledger, cfg);
  return result;
}

EvalResult run_eval(ModelGateway& gateway, const DatasetManifest& dataset, const std::filesystem::path& responses,
                    const EvalConfig& cfg) {
  return run_eval(gateway, read_records(dataset.path), read_responses(responses), cfg);
}

json report_to_json(const ReportRow& row) {
  json dims = json::object();
  for (const auto& [area, v] : row.dimension_scores) dims[to_string(area)] = v;
  json j{{"model_id", row.model_id},
         {"dimension_scores", dims},
         {"group_avgs", row.group_avgs},
         {"scored", row.scored},
         {"unscored", row.unscored},
         {"missing", row.missing},
         {"notes", row.notes}};
  j["two_avg"] = row.two_avg ? json(*row.two_avg) : json();
  return j;
}

std::string report_to_table(const ReportRow& row) {
  std::vector<std::string> headers{"Model"};
  std::vector<std::string> cells{row.model_id};
  for (auto area : all_business_areas()) {
    headers.push_back(to_string(area));
    const auto it = row.dimension_scores.find(area);
    cells.push_back(it == row.dimension_scores.end() ? "-" : fixed2(it->second));
  }
  for (const char* group : {kInsuranceGroup, kGeneralGroup}) {
    headers.push_back(std::string(group) + " avg");
    const auto it = row.group_avgs.find(group);
    cells.push_back(it == row.group_avgs.end() ? "-" : fixed2(it->second));
  }
  headers.push_back("two avg");
  cells.push_back(row.two_avg ? fixed2(*row.two_avg) : "-");

  std::string head, body;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width = std::max(headers[i].size(), cells[i].size());
    const char* sep = i == 0 ? "" : "  ";
    head += sep;
    body += sep;
    if (i == 0) {
      head += headers[i] + std::string(width - headers[i].size(), ' ');
      body += cells[i] + std::string(width - cells[i].size(), ' ');
    } else {
      head += std::string(width - headers[i].size(), ' ') + headers[i];
      body += std::string(width - cells[i].size(), ' ') + cells[i];
    }
  }
  std::string out = head + "\n" + body + "\n";
  out += "scored " + std::to_string(row.scored) + ", unscored " + std::to_string(row.unscored) + ", missing " +
         std::to_string(row.missing) + "\n";
  for (const auto& note : row.notes) out += "note: " + note + "\n";
  return out;
}

}  // namespace alignkit
