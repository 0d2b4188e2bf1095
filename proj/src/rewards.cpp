#include "alignkit/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "alignkit/judge.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

namespace {

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<std::string> out;
  if (n == 0 || tokens.size() < n) return out;
  out.reserve(tokens.size() - n + 1);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string g = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      g.push_back('\x1f');
      g += tokens[i + k];
    }
    out.push_back(std::move(g));
  }
  return out;
}

bool numbers_match(double a, double g, double tol) {
  if (g == 0.0) return std::fabs(a) <= tol;
  return std::fabs(a - g) <= tol * std::fabs(g);
}

double weight_of(const std::map<std::string, double>& weights, const std::string& key) {
  const auto it = weights.find(key);
  return it == weights.end() ? 0.0 : it->second;
}

/// Splits on sentence-final punctuation and newlines.
std::vector<std::string> split_sentences(const std::string& s) {
  std::vector<std::string> out;
  std::string current;
  for (char32_t cp : text::decode_utf8(s)) {
    const bool stop = cp == U'.' || cp == U'!' || cp == U'?' || cp == U'\n' || cp == 0x3002 || cp == 0xFF01 ||
                      cp == 0xFF1F;
    if (stop) {
      if (!text::trim(current).empty()) out.push_back(current);
      current.clear();
    } else {
      current += text::encode_utf8(cp);
    }
  }
  if (!text::trim(current).empty()) out.push_back(current);
  return out;
}

}  // namespace

void validate_reward_config(const RewardConfig& cfg) {
  if (cfg.l_min == 0 || cfg.l_min >= cfg.l_max) throw std::invalid_argument("reward config needs 0 < l_min < l_max");
  if (cfg.alpha < 0 || cfg.beta < 0 || cfg.alpha + cfg.beta > 1.0 + 1e-12) {
    throw std::invalid_argument("reward config needs alpha, beta >= 0 and alpha + beta <= 1");
  }
  if (cfg.numeric_tol < 0) throw std::invalid_argument("numeric_tol must be >= 0");
  if (cfg.ngram_n == 0 || cfg.repetition_n == 0) throw std::invalid_argument("n-gram sizes must be >= 1");
  if (cfg.overlap_cap < 0 || cfg.overlap_cap > 1) throw std::invalid_argument("overlap_cap must lie in [0,1]");
  for (const auto& [k, w] : cfg.penalty_weights) {
    if (w < 0) throw std::invalid_argument("penalty weight " + k + " is negative");
  }
  for (const auto& [k, w] : cfg.rubric_weights) {
    if (w < 0) throw std::invalid_argument("rubric weight " + k + " is negative");
  }
}

RewardConfig reward_config_from_json(const nlohmann::json& j) {
  RewardConfig cfg;
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.l_min = j.value("l_min", cfg.l_min);
  cfg.l_max = j.value("l_max", cfg.l_max);
  cfg.numeric_tol = j.value("numeric_tol", cfg.numeric_tol);
  cfg.ngram_n = j.value("ngram_n", cfg.ngram_n);
  cfg.repetition_n = j.value("repetition_n", cfg.repetition_n);
  cfg.overlap_cap = j.value("overlap_cap", cfg.overlap_cap);
  cfg.language_allowance = j.value("language_allowance", cfg.language_allowance);
  if (j.contains("penalty_weights")) {
    for (const auto& [k, v] : j["penalty_weights"].items()) cfg.penalty_weights[k] = v.get<double>();
  }
  if (j.contains("rubric_weights")) {
    for (const auto& [k, v] : j["rubric_weights"].items()) cfg.rubric_weights[k] = v.get<double>();
  }
  validate_reward_config(cfg);
  return cfg;
}

nlohmann::json reward_config_to_json(const RewardConfig& cfg) {
  return {{"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"l_min", cfg.l_min},
          {"l_max", cfg.l_max},
          {"numeric_tol", cfg.numeric_tol},
          {"ngram_n", cfg.ngram_n},
          {"repetition_n", cfg.repetition_n},
          {"overlap_cap", cfg.overlap_cap},
          {"language_allowance", cfg.language_allowance},
          {"penalty_weights", cfg.penalty_weights},
          {"rubric_weights", cfg.rubric_weights}};
}

std::pair<std::size_t, std::size_t> anchor_length_bounds(std::vector<std::size_t> lengths) {
  if (lengths.empty()) throw std::invalid_argument("no reference lengths");
  std::sort(lengths.begin(), lengths.end());
  auto nearest_rank = [&](double p) {
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(lengths.size())));
    return lengths[std::clamp<std::size_t>(rank, 1, lengths.size()) - 1];
  };
  const std::size_t lo = std::max<std::size_t>(nearest_rank(0.10), 1);
  const std::size_t hi = nearest_rank(0.90);
  if (lo >= hi) throw std::invalid_argument("reference lengths too uniform to anchor l_min < l_max");
  return {lo, hi};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::correct:
      return "correct";
    case Verdict::incorrect:
      return "incorrect";
    case Verdict::unparsed:
      return "unparsed";
  }
  return "?";
}

std::string to_string(MatchKind k) {
  switch (k) {
    case MatchKind::exact:
      return "exact";
    case MatchKind::pattern:
      return "pattern";
    case MatchKind::numeric:
      return "numeric";
    case MatchKind::semantic:
      return "semantic";
    case MatchKind::none:
      return "none";
  }
  return "?";
}

VerifierOutcome verify_rule_based(const std::string& answer, const std::string& gold,
                                  const std::vector<ExtractionPattern>& patterns, double tol) {
  if (gold.empty()) throw std::invalid_argument("verify_rule_based: gold is empty");
  VerifierOutcome out;
  const std::string gold_norm = text::normalize(gold);
  if (text::normalize(answer) == gold_norm) {
    out.verdict = Verdict::correct;
    out.match_kind = MatchKind::exact;
    out.extracted = text::trim(answer);
    return out;
  }

  double gold_value = 0;
  const bool gold_numeric = text::parse_number(gold, gold_value);
  for (const auto& p : patterns) {
    const auto span = p.extract(answer);
    if (!span) continue;
    out.extracted = *span;
    double value = 0;
    if (text::normalize(*span) == gold_norm) {
      out.verdict = Verdict::correct;
      out.match_kind = MatchKind::pattern;
    } else if (gold_numeric && text::parse_number(*span, value)) {
      out.match_kind = MatchKind::numeric;
      out.verdict = numbers_match(value, gold_value, tol) ? Verdict::correct : Verdict::incorrect;
    } else {
      out.verdict = Verdict::incorrect;
      out.match_kind = MatchKind::pattern;
    }
    return out;
  }

  double value = 0;
  if (gold_numeric && text::parse_number(answer, value)) {
    out.extracted = text::trim(answer);
    out.match_kind = MatchKind::numeric;
    out.verdict = numbers_match(value, gold_value, tol) ? Verdict::correct : Verdict::incorrect;
    return out;
  }
  return out;
}

VerifierOutcome verify_with_escalation(ModelGateway& gateway, const std::string& answer, const std::string& gold,
                                       const std::vector<ExtractionPattern>& patterns, double tol) {
  VerifierOutcome out = verify_rule_based(answer, gold, patterns, tol);
  if (out.verdict != Verdict::unparsed) return out;
  const EquivalenceResult judged = judge_equivalence(gateway, answer, gold);
  out.judge_request_hash = judged.request_hash;
  switch (judged.verdict) {
    case Equivalence::equivalent:
      out.verdict = Verdict::correct;
      out.match_kind = MatchKind::semantic;
      break;
    case Equivalence::different:
      out.verdict = Verdict::incorrect;
      out.match_kind = MatchKind::semantic;
      break;
    case Equivalence::unjudgeable:
      out.verdict = Verdict::incorrect;
      out.match_kind = MatchKind::none;
      if (judged.gateway_failed) out.judge_failure = judged.cause;
      break;
  }
  return out;
}

double length_reward(std::size_t length, const RewardConfig& cfg) {
  const double numerator = static_cast<double>(cfg.l_max) - static_cast<double>(length);
  const double denominator = static_cast<double>(cfg.l_max) - static_cast<double>(cfg.l_min);
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

std::size_t token_length(const std::string& s) { return text::tokenize(s).size(); }

double ngram_overlap(const std::string& response, const std::string& context, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ngram_overlap: n must be >= 1");
  const auto resp = ngrams(text::tokenize(response), n);
  if (resp.empty()) return 0.0;
  const auto ctx = ngrams(text::tokenize(context), n);
  const std::unordered_set<std::string> ctx_set(ctx.begin(), ctx.end());
  const auto shared = std::count_if(resp.begin(), resp.end(), [&](const std::string& g) { return ctx_set.count(g) != 0; });
  return static_cast<double>(shared) / static_cast<double>(resp.size());
}

ScriptCounts count_scripts(const std::string& s) {
  ScriptCounts c;
  for (char32_t cp : text::decode_utf8(s)) {
    if (text::is_cjk(cp)) {
      ++c.cjk;
    } else if (text::is_latin_letter(cp)) {
      ++c.latin;
    }
  }
  return c;
}

double language_consistency(const std::string& s, double allowance, double weight) {
  const ScriptCounts c = count_scripts(s);
  const std::size_t total = c.cjk + c.latin;
  if (total == 0) return 0.0;
  const double minority = static_cast<double>(std::min(c.cjk, c.latin)) / static_cast<double>(total);
  return std::max(0.0, minority - allowance) * weight;
}

double repetition_penalty(const std::string& s, std::size_t n) {
  if (n == 0) throw std::invalid_argument("repetition_penalty: n must be >= 1");
  const auto tokens = text::tokenize(s);
  if (tokens.size() < n + 1) return 0.0;
  const auto grams = ngrams(tokens, n);
  const std::set<std::string> distinct(grams.begin(), grams.end());
  return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(grams.size());
}

double LexicalEntailmentScorer::score(const std::string& response, const std::string& context) const {
  const auto sentences = split_sentences(response);
  if (sentences.empty()) return 0.0;
  const auto ctx_tokens = text::tokenize(context);
  const std::unordered_set<std::string> ctx(ctx_tokens.begin(), ctx_tokens.end());
  std::size_t unsupported = 0;
  for (const auto& sentence : sentences) {
    const auto tokens = text::tokenize(sentence);
    if (tokens.empty()) continue;
    const auto hits = std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) { return ctx.count(t) != 0; });
    if (static_cast<double>(hits) < threshold_ * static_cast<double>(tokens.size())) ++unsupported;
  }
  return static_cast<double>(unsupported) / static_cast<double>(sentences.size());
}

std::map<std::string, double> compute_penalties(const std::string& response, const std::string& context,
                                                const RewardConfig& cfg, const HallucinationScorer* scorer) {
  std::map<std::string, double> p;
  p["hallucination"] = scorer != nullptr && !context.empty() ? std::clamp(scorer->score(response, context), 0.0, 1.0) : 0.0;
  p["duplication"] = context.empty() ? 0.0 : std::max(0.0, ngram_overlap(response, context, cfg.ngram_n) - cfg.overlap_cap);
  p["language"] = language_consistency(response, cfg.language_allowance, 1.0);
  p["repetition"] = repetition_penalty(response, cfg.repetition_n);
  return p;
}

nlohmann::json reward_signal_to_json(const RewardSignal& r) {
  nlohmann::json j{{"r_acc", r.r_acc}, {"r_len", r.r_len}, {"penalties", r.penalties}, {"composite", r.composite}};
  j["rubric"] = r.rubric ? nlohmann::json(*r.rubric) : nlohmann::json();
  return j;
}

RewardSignal composite_reward(const std::optional<VerifierOutcome>& outcome,
                              const std::optional<std::map<std::string, double>>& rubric, std::size_t length,
                              const std::map<std::string, double>& penalties, const RewardConfig& cfg) {
  if (outcome.has_value() == rubric.has_value()) {
    throw PathAmbiguity("composite_reward needs exactly one of a verifier outcome or rubric scores");
  }
  RewardSignal r;
  r.penalties = penalties;
  r.r_len = length_reward(length, cfg);
  double penalty_total = 0.0;
  for (const auto& [name, value] : penalties) {
    if (value < 0) throw std::invalid_argument("penalty " + name + " is negative");
    penalty_total += weight_of(cfg.penalty_weights, name) * value;
  }

  if (outcome) {
    r.r_acc = outcome->verdict == Verdict::correct ? 1 : 0;
    if (r.r_acc == 0) {
      r.composite = 0.0;
      return r;
    }
    r.composite = std::max(0.0, cfg.alpha + cfg.beta * r.r_len - penalty_total);
    return r;
  }

  r.rubric = rubric;
  r.r_acc = 1;
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& [dim, score] : *rubric) {
    const double w = weight_of(cfg.rubric_weights, dim);
    weighted += w * std::clamp(score, 0.0, 1.0);
    total_weight += w;
  }
  const double mean = total_weight > 0 ? weighted / total_weight : 0.0;
  r.composite = std::max(0.0, mean - penalty_total);
  return r;
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) throw EmptyGroup("grpo_advantages: empty group");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < 1e-12) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

}  // namespace alignkit
