// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "alignkit/curriculum.hpp"
#include "alignkit/dataset_store.hpp"
#include "alignkit/evalharness.hpp"
#include "alignkit/hashing.hpp"
#include "alignkit/judge.hpp"
#include "alignkit/loops.hpp"
#include "alignkit/rag_adapt.hpp"
#include "alignkit/rewards.hpp"
#include "alignkit/synthesis.hpp"
#include "alignkit/text.hpp"
#include "support.hpp"

using namespace alignkit;
using namespace alignkit::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct BenchmarkRow {
  std::string model;
  double scores[4];
  double ins_avg;
  double gen_avg;
  double two_avg;
};

Outcome published_row_arithmetic() {
  const std::vector<BenchmarkRow> rows{
      {"Qwen3-30B-A3B-Instruct", {79.59, 79.63, 49.26, 84.08}, 73.14, 76.40, 74.77},
      {"Qwen3-235B-A22B-Instruct", {82.32, 82.43, 49.70, 89.09}, 75.89, 79.91, 77.90},
      {"Kimi-K2-Instruct", {81.78, 82.27, 48.54, 87.96}, 75.14, 78.17, 76.65},
      {"Ling-1T", {81.09, 82.67, 44.84, 88.87}, 74.37, 80.70, 77.53},
      {"GPT-4o", {79.41, 79.72, 37.73, 79.05}, 68.98, 67.78, 68.38},
      {"Qwen3-32B (think)", {80.88, 81.18, 47.96, 83.42}, 73.36, 79.22, 76.29},
      {"Qwen3-Next-80B-A3B-Thinking", {73.07, 75.13, 52.79, 86.41}, 71.85, 80.79, 76.32},
      {"Qwen3-235B-A22B-Thinking", {83.53, 82.83, 56.72, 88.26}, 77.84, 81.40, 79.62},
      {"DeepSeek-R1", {82.47, 83.53, 54.33, 86.40}, 76.68, 82.17, 79.43},
      {"Ring-1T", {81.40, 82.45, 60.27, 85.50}, 77.41, 82.34, 79.01},
      {"Gemini-2.5-Pro", {84.23, 85.09, 49.69, 85.10}, 76.03, 81.98, 79.01},
      {"INS-S1-32B", {88.42, 88.5, 47.43, 88.60}, 78.24, 80.08, 79.16},
      {"INS-S1-235B", {90.14, 90.03, 57.35, 89.69}, 81.80, 81.77, 81.79},
  };
  Outcome out;
  const auto start = Clock::now();
  std::vector<std::string> mismatches;
  for (const auto& r : rows) {
    const ReportRow row = aggregate_report(
        {{kInsuranceGroup, {r.scores[0], r.scores[1], r.scores[2], r.scores[3]}}, {kGeneralGroup, {r.gen_avg}}}, r.model);
    const double ins = row.group_avgs.at(kInsuranceGroup);
    if (std::fabs(ins - r.ins_avg) > 0.01 + 1e-9) {
      mismatches.push_back(r.model + " Avg " + fmt("%.4f", ins) + " vs " + fmt("%.2f", r.ins_avg));
    }
    if (!row.two_avg || std::fabs(*row.two_avg - r.two_avg) > 0.01 + 1e-9) {
      mismatches.push_back(r.model + " Two Avg " + fmt("%.4f", row.two_avg.value_or(-1)) + " vs " + fmt("%.2f", r.two_avg));
    }
  }
  const double elapsed = seconds_since(start);
  std::string joined;
  for (const auto& m : mismatches) joined += (joined.empty() ? "" : "; ") + m;
  out.require(mismatches.empty(), joined);
  out.require(elapsed < 1.0, "runtime " + fmt("%.3f", elapsed) + "s");
  if (out.pass) out.detail = std::to_string(rows.size()) + " rows within 0.01 in " + fmt("%.4f", elapsed) + "s";
  return out;
}

Outcome length_closed_form() {
  Outcome out;
  const auto start = Clock::now();
  RewardConfig cfg;
  cfg.l_min = 100;
  cfg.l_max = 1000;
  std::size_t mismatches = 0;
  for (std::size_t len = 0; len <= 2 * cfg.l_max; ++len) {
    const double raw = (static_cast<double>(cfg.l_max) - static_cast<double>(len)) /
                       (static_cast<double>(cfg.l_max) - static_cast<double>(cfg.l_min));
    const double expected = std::clamp(raw, 0.0, 1.0);
    if (length_reward(len, cfg) != expected) ++mismatches;
  }
  out.require(mismatches == 0, std::to_string(mismatches) + " lengths differ from the closed form");
  out.require(length_reward(100, cfg) == 1.0, "L=L_min is not 1.0");
  out.require(length_reward(1000, cfg) == 0.0, "L=L_max is not 0.0");
  out.require(length_reward(550, cfg) == 0.5, "L=550 is not 0.5");
  out.require(length_reward(0, cfg) == 1.0 && length_reward(2000, cfg) == 0.0, "clipping at the extremes");
  const double elapsed = seconds_since(start);
  out.require(elapsed < 1.0, "runtime " + fmt("%.3f", elapsed) + "s");
  if (out.pass) out.detail = "2001 lengths exact, boundaries 1.0/0.0/0.5, " + fmt("%.4f", elapsed) + "s";
  return out;
}

Outcome accuracy_gating() {
  Outcome out;
  SeededRng rng(101);
  const VerifierOutcome wrong{Verdict::incorrect, MatchKind::exact, std::string("A"), "", ""};
  for (int i = 0; i < 1000; ++i) {
    RewardConfig cfg;
    cfg.alpha = rng.uniform();
    cfg.beta = rng.uniform();
    for (auto& [name, w] : cfg.penalty_weights) w = 2.0 * rng.uniform();
    std::map<std::string, double> penalties;
    for (const auto& [name, w] : cfg.penalty_weights) penalties[name] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const std::size_t length = rng.below(3000);
    const RewardSignal r = composite_reward(wrong, std::nullopt, length, penalties, cfg);
    out.require(r.r_acc == 0, "r_acc is not 0 in case " + std::to_string(i));
    out.require(r.composite == 0.0, "composite " + fmt("%.17g", r.composite) + " in case " + std::to_string(i));
  }
  if (out.pass) out.detail = "1000 configurations, composite exactly 0";
  return out;
}

Outcome grpo_normalization() {
  Outcome out;
  SeededRng rng(202);
  double worst_mean = 0.0, worst_std = 0.0;
  for (int g = 0; g < 1000; ++g) {
    const std::size_t size = 2 + rng.below(63);
    std::vector<double> rewards(size);
    for (auto& r : rewards) r = rng.uniform() * 10.0 - 5.0;
    const double mu = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(size);
    double var = 0.0;
    for (double r : rewards) var += (r - mu) * (r - mu);
    if (std::sqrt(var / static_cast<double>(size)) <= 1e-12) continue;
    const auto adv = grpo_advantages(rewards);
    const double m = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(size);
    double v = 0.0;
    for (double a : adv) v += (a - m) * (a - m);
    const double sd = std::sqrt(v / static_cast<double>(size));
    worst_mean = std::max(worst_mean, std::fabs(m));
    worst_std = std::max(worst_std, std::fabs(sd - 1.0));
  }
  out.require(worst_mean <= 1e-9, "mean deviation " + fmt("%.3g", worst_mean));
  out.require(worst_std <= 1e-6, "std deviation " + fmt("%.3g", worst_std));
  for (std::size_t size : {1u, 2u, 7u, 64u}) {
    const auto adv = grpo_advantages(std::vector<double>(size, 0.42));
    out.require(std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; }), "constant group not all zero");
  }
  out.require(grpo_advantages({1.0, 0.0}) == std::vector<double>{1.0, -1.0}, "[1,0] does not map to [1,-1]");
  if (out.pass) {
    out.detail = "1000 groups, max |mean| " + fmt("%.2g", worst_mean) + ", max |std-1| " + fmt("%.2g", worst_std);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string routing_digest(const std::vector<RoutedSample>& routed) {
  std::string d;
  for (const auto& r : routed) {
    d += to_jsonl_line(r.sample) + "|" + to_string(r.decision.verdict) + "|" + r.decision.cause + "\n";
  }
  return d;
}

std::vector<RoutedSample> route_thirty() {
  MockGateway m(fast_config(2, 4));
  std::vector<IngestRecord> records;
  for (int i = 0; i < 30; ++i) {
    records.push_back({"Clause " + std::to_string(i) + ": the deductible for plan " + std::to_string(i) + " is " +
                           std::to_string(100 * (i + 1)) + " dollars.",
                       "What is the deductible for plan " + std::to_string(i) + "?",
                       std::to_string(100 * (i + 1)) + " dollars", true});
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const KnowledgeQA qa{records[i].question, records[i].answer, "ingest", {}};
    const auto msgs = consistency_messages(m.gateway, qa, records[i].doc);
    if (i < 10) m.transport->add(msgs, "CONSISTENT");
    else if (i < 20) m.transport->add(msgs, "INCONSISTENT");
    else m.transport->add(msgs, "CONSISTENT", -1);
  }
  return route_batch(m.gateway, records, "rag", RoutingConfig{});
}

Outcome routing_totality() {
  Outcome out;
  const auto a = route_thirty();
  std::map<Bucket, int> counts;
  for (const auto& r : a) ++counts[r.sample.bucket];
  out.require(counts[Bucket::generation] == 10 && counts[Bucket::refusal] == 10 && counts[Bucket::quarantine] == 10,
              "buckets " + std::to_string(counts[Bucket::generation]) + "/" + std::to_string(counts[Bucket::refusal]) +
                  "/" + std::to_string(counts[Bucket::quarantine]));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Bucket want = i < 10 ? Bucket::generation : i < 20 ? Bucket::refusal : Bucket::quarantine;
    out.require(a[i].sample.bucket == want, "item " + std::to_string(i) + " in the wrong bucket");
  }
  out.require(routing_digest(a) == routing_digest(route_thirty()), "rerun differs");
  if (out.pass) out.detail = "10/10/10 generation/refusal/quarantine, rerun bit-identical";
  return out;
}

Outcome loop_contracts() {
  Outcome out;
  const auto verifier = reference_answer_verifier(builtin_patterns());
  {
    MockGateway m;
    const Sample s = mcq_sample("fp", BusinessArea::IUC, "Which clause governs lapse?", "B");
    script_fail_then_pass(*m.transport, m.gateway, s, verifier, "A");
    const auto r = run_answer_loop(m.gateway, s, verifier, 3);
    out.require(r.status == LoopStatus::accepted && r.sample && r.sample->provenance.iteration == 1 &&
                    r.trace.verdicts.size() == 2,
                "fail-then-pass: status " + to_string(r.status) + ", " + std::to_string(r.trace.verdicts.size()) +
                    " verdicts");
  }
  {
    MockGateway m;
    m.transport->set_fallback([](const std::vector<Message>&) -> std::optional<std::string> { return "A"; });
    const Sample s = mcq_sample("af", BusinessArea::IUC, "Which clause governs lapse?", "B");
    const auto r = run_answer_loop(m.gateway, s, verifier, 3);
    out.require(r.status == LoopStatus::rejected && r.trace.verdicts.size() == 3,
                "always-fail: status " + to_string(r.status) + ", " + std::to_string(r.trace.verdicts.size()) +
                    " verdicts");
  }
  {
    MockGateway m;
    const auto items = script_prompt_loop(*m.transport, {0.67, 0.80, 0.93});
    const auto st = run_prompt_loop(m.gateway, "prompt-0", items, exact_scorer, 2);
    out.require(st.best.prompt == "prompt-2" && st.best.round == 2 && std::fabs(st.best.accuracy - 0.93) < 1e-12,
                "rising accuracies kept " + st.best.prompt);
  }
  {
    MockGateway m;
    const auto items = script_prompt_loop(*m.transport, {0.80, 0.75, 0.70});
    const auto st = run_prompt_loop(m.gateway, "prompt-0", items, exact_scorer, 2);
    out.require(st.best.prompt == "prompt-0", "falling accuracies kept " + st.best.prompt);
  }
  {
    std::vector<AnswerLoopOutcome> forty(40);
    for (std::size_t i = 0; i < forty.size(); ++i) {
      forty[i].trace.sample_id = "y" + std::to_string(i);
      forty[i].status = i < 37 ? LoopStatus::accepted : LoopStatus::rejected;
    }
    const double y = batch_yield(forty).yield_rate;
    out.require(std::fabs(y - 0.925) < 1e-12, "yield " + fmt("%.6f", y));
  }
  if (out.pass) out.detail = "accept@1 with 2 verdicts, reject with 3, prompt-2 kept, prompt-0 kept, yield 0.925";
  return out;
}

// ---------------------------------------------------------------------------

std::vector<BucketStats> random_buckets(SeededRng& rng) {
  std::vector<BucketStats> stats;
  const std::vector<BucketCategory> cats{BucketCategory::general, BucketCategory::domain_simple,
                                         BucketCategory::domain_complex, BucketCategory::hallucination_mitigation,
                                         BucketCategory::long_tail};
  for (auto c : cats) {
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t count = c == BucketCategory::long_tail ? 1 + rng.below(999) : 1000 + rng.below(100000);
      stats.push_back({to_string(c) + "-" + std::to_string(k), c, count});
    }
  }
  return stats;
}

Outcome mixture_constraints() {
  Outcome out;
  SeededRng rng(303);
  double worst_batch = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto stats = random_buckets(rng);
    std::vector<MixtureSpec> specs;
    for (double boost : {1.0, 2.0, 4.0}) specs.push_back(compute_stage2_weights(stats, boost));
    for (const auto& spec : specs) {
      double sum = 0.0, general = 0.0;
      for (const auto& b : stats) {
        const double w = spec.weights.at(b.bucket_id);
        sum += w;
        if (b.category == BucketCategory::general) general += w;
      }
      out.require(std::fabs(sum - 1.0) <= 1e-9, "sum " + fmt("%.17g", sum) + " in trial " + std::to_string(trial));
      out.require(std::fabs(general - 0.25) <= 1e-6, "general mass " + fmt("%.9f", general));
      out.require(1.0 - general >= 0.30 - 1e-12, "domain mass below 0.30");
    }
    for (const auto& b : stats) {
      if (b.category != BucketCategory::long_tail) continue;
      for (std::size_t i = 0; i < specs.size(); ++i) {
        for (std::size_t j = i + 1; j < specs.size(); ++j) {
          out.require(specs[j].weights.at(b.bucket_id) > specs[i].weights.at(b.bucket_id),
                      "boost monotonicity fails for " + b.bucket_id + " in trial " + std::to_string(trial));
        }
      }
    }
    const std::size_t n = 100000;
    const auto counts = sample_batch(specs[1], stats, n, 404);
    for (const auto& b : stats) {
      const auto it = counts.find(b.bucket_id);
      const double freq = it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
      worst_batch = std::max(worst_batch, std::fabs(freq - specs[1].weights.at(b.bucket_id)));
    }
  }
  out.require(worst_batch <= 0.01, "sample_batch deviates by " + fmt("%.4f", worst_batch));
  if (out.pass) {
    out.detail = "200 configurations, boosts {1,2,4} monotone, max sample_batch deviation " + fmt("%.4f", worst_batch);
  }
  return out;
}

std::string random_words(SeededRng& rng, const std::vector<std::string>& vocab, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng.below(vocab.size())];
  return s;
}

Outcome text_penalties() {
  Outcome out;
  SeededRng rng(505);
  std::vector<std::string> left, right;
  for (int i = 0; i < 200; ++i) {
    left.push_back("alpha" + std::to_string(i));
    right.push_back("omega" + std::to_string(i));
  }
  for (int i = 0; i < 100; ++i) {
    const std::size_t len = 8 + rng.below(60);
    const std::string x = random_words(rng, left, len);
    const std::string y = random_words(rng, right, len);
    for (std::size_t n : {1u, 3u, 8u}) {
      out.require(ngram_overlap(x, x, n) == 1.0, "overlap(x,x) != 1 for fixture " + std::to_string(i));
      out.require(ngram_overlap(x, y, n) == 0.0, "disjoint overlap != 0 for fixture " + std::to_string(i));
    }
    out.require(language_consistency(x) == 0.0, "Latin-only text has a language penalty");
  }
  const double rep = repetition_penalty("a a a a a", 1);
  out.require(std::fabs(rep - 0.8) < 1e-12, "repetition_penalty = " + fmt("%.6f", rep));
  out.require(language_consistency("保险合同的现金价值由保单准备金决定") == 0.0, "CJK-only text has a language penalty");
  if (out.pass) out.detail = "100 fixtures, overlap 1/0, repetition 0.8, single-script 0";
  return out;
}

// ---------------------------------------------------------------------------

SampleMeta meta(const std::string& id, BusinessArea area, Difficulty diff) {
  SampleMeta m;
  m.id = id;
  m.task_type = "fixture";
  m.business_area = area;
  m.difficulty = diff;
  m.cognition = "reasoning";
  m.source = "mock-corpus";
  return m;
}

struct PipelineRun {
  std::string digest;
  std::vector<Sample> outputs;
  std::vector<Sample> knowledge;
  bool report_valid = false;
  std::size_t ledger_lines = 0;
  std::size_t trace_lines = 0;
  std::string error;
};

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += line.empty() ? 0 : 1;
  return n;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// 50 synthesized samples: 20 knowledge-injection, 15 alignment MCQ, 15 SOP-CoT.
PipelineRun run_pipeline(std::uint64_t seed) {
  PipelineRun run;
  TempDir dir;
  std::ostringstream digest;
  const auto& areas = all_business_areas();

  // synthesis
  std::vector<Sample> corpus;
  for (int i = 0; i < 20; ++i) {
    const std::string n = std::to_string(i);
    corpus.push_back(format_knowledge_injection(
        {"What does term " + n + " mean in a group health policy?", "Term " + n + " is the waiting period for benefit " + n + ".",
         "glossary", ""},
        meta("ki-" + n, areas[static_cast<std::size_t>(i) % areas.size()], Difficulty::simple)));
    run.knowledge.push_back(corpus.back());
  }
  for (int i = 0; i < 15; ++i) {
    const std::string n = std::to_string(i);
    const DistractorSpec spec{"Cash value of plan " + n,
                              {{"Sum assured of plan " + n, Perturbation::semantic_swap},
                               {"Cash value of plan " + n + " plus 10%", Perturbation::numeric_tamper}},
                              "Clause " + n + ".2: on surrender the insurer pays the cash value."};
    const SopTrace sop{SopSchema::alignment3,
                       {{"entity", "Plan " + n + " is a whole life contract."},
                        {"attribute", "Surrender pays the reserve net of charges."},
                        {"compliance", "Clause " + n + ".2 defines the surrender benefit."}}};
    corpus.push_back(build_alignment_sample("On surrender of plan " + n + ", what is paid?", spec, sop,
                                            meta("al-" + n, areas[static_cast<std::size_t>(i) % areas.size()],
                                                 Difficulty::complex),
                                            seed));
  }
  for (int i = 0; i < 15; ++i) {
    const std::string n = std::to_string(i);
    const SopTrace sop{SopSchema::underwriting4,
                       {{"info_extraction", "Applicant " + n + ": age " + std::to_string(30 + i) + ", smoker."},
                        {"risk_id", "Elevated cardiovascular risk."},
                        {"rule_detection", "Guideline U-12 loads smokers."},
                        {"conclusion", "Accept with loading."}}};
    corpus.push_back(build_sop_cot_sample("Underwriting file " + n, sop, "Accept with loading",
                                          meta("uw-" + n, BusinessArea::IUC, Difficulty::complex)));
  }
  for (const auto& s : corpus) digest << to_jsonl_line(s) << "\n";
  run.outputs = corpus;

  // answer loops over the 30 reasoning samples
  MockGateway loop_gw(fast_config(2, 4));
  const auto verifier = reference_answer_verifier(builtin_patterns());
  std::vector<Sample> loop_inputs(corpus.begin() + 20, corpus.end());
  for (std::size_t i = 0; i < loop_inputs.size(); ++i) {
    const Sample& s = loop_inputs[i];
    const std::string wrong = s.format == Format::multiple_choice ? (s.answer == "A" ? "B" : "A") : "Decline";
    if (i % 10 == 3) {
      script_fail_then_pass(*loop_gw.transport, loop_gw.gateway, s, verifier, wrong);
    } else if (i % 15 == 7) {
      loop_gw.transport->add(generation_messages(s), wrong);
    } else {
      loop_gw.transport->add(generation_messages(s), "<think>" + s.think.value_or("") + "</think>" + s.answer);
    }
  }
  loop_gw.transport->set_fallback([](const std::vector<Message>&) -> std::optional<std::string> { return "Decline"; });
  const auto outcomes = run_answer_loops(loop_gw.gateway, loop_inputs, verifier, 3);
  export_answer_traces(dir / "traces.jsonl", outcomes);
  run.trace_lines = count_lines(dir / "traces.jsonl");
  digest << read_file(dir / "traces.jsonl");
  std::vector<Sample> accepted, quarantined;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].status == LoopStatus::accepted) accepted.push_back(*outcomes[i].sample);
    else quarantined.push_back(quarantine(loop_inputs[i]));
  }
  digest << "yield=" << fmt("%.6f", batch_yield(outcomes).yield_rate) << "\n";
  run.outputs.insert(run.outputs.end(), accepted.begin(), accepted.end());
  run.outputs.insert(run.outputs.end(), quarantined.begin(), quarantined.end());

  // RAG routing of the knowledge pairs
  MockGateway route_gw(fast_config(1, 4));
  std::vector<IngestRecord> records;
  for (int i = 0; i < 20; ++i) {
    const Sample& k = corpus[static_cast<std::size_t>(i)];
    records.push_back({"Glossary entry: " + k.answer, k.messages[0].content, k.answer, true});
    const KnowledgeQA qa{records.back().question, records.back().answer, "ingest", {}};
    const auto msgs = consistency_messages(route_gw.gateway, qa, records.back().doc);
    if (i % 4 == 0) route_gw.transport->add(msgs, "INCONSISTENT");
    else if (i % 7 == 0) route_gw.transport->add(msgs, "CONSISTENT", -1);
    else route_gw.transport->add(msgs, "CONSISTENT");
  }
  const auto routed = route_batch(route_gw.gateway, records, "rag", RoutingConfig{});
  for (const auto& r : routed) {
    digest << to_jsonl_line(r.sample) << "\n";
    run.outputs.push_back(r.sample);
  }

  // dataset store
  DatasetManifest manifest = open_dataset(dir / "train.jsonl");
  std::vector<Sample> train = corpus;
  for (const auto& r : routed) train.push_back(r.sample);
  manifest = append_records(manifest, train);
  nlohmann::json manifest_json = manifest_to_json(manifest);
  manifest_json.erase("path");
  digest << manifest_json.dump() << "\n";

  // schedule
  std::vector<BucketStats> stats{{"general", BucketCategory::general, 5000},
                                 {"knowledge", BucketCategory::domain_simple, 0},
                                 {"reasoning", BucketCategory::domain_complex, accepted.size()},
                                 {"rag", BucketCategory::hallucination_mitigation, 0}};
  for (const auto& r : routed) stats[3].count += r.sample.bucket == Bucket::quarantine ? 0 : 1;
  stats[1].count = run.knowledge.size();
  stats = classify_long_tail(stats, 10);
  const MixtureSpec mix = compute_stage2_weights(stats, 2.0);
  digest << mixture_to_json(mix).dump() << "\n";
  for (const auto& [id, c] : sample_batch(mix, stats, 1000, seed)) digest << id << "=" << c << "\n";

  // rewards
  const RewardConfig rcfg;
  const LexicalEntailmentScorer scorer;
  std::map<std::string, std::string> gold;
  for (const auto& s : loop_inputs) gold[s.id] = s.answer;
  for (const auto& s : accepted) {
    const auto outcome = verify_rule_based(s.answer, gold.at(s.id), builtin_patterns(), rcfg.numeric_tol);
    const auto penalties = compute_penalties(s.answer, s.context.value_or(""), rcfg, &scorer);
    const auto reward = composite_reward(outcome, std::nullopt, token_length(s.think.value_or("") + " " + s.answer),
                                         penalties, rcfg);
    digest << reward_signal_to_json(reward).dump() << "\n";
  }

  // evaluation
  MockGateway eval_gw(fast_config(1, 4));
  eval_gw.transport->set_fallback([](const std::vector<Message>& msgs) -> std::optional<std::string> {
    if (text::contains(msgs.back().content, "EQUIVALENT or DIFFERENT")) return "DIFFERENT";
    return "factuality=0.8\nprofessionalism=0.7\nexpression=0.9";
  });
  std::vector<Sample> eval_items(corpus.begin() + 20, corpus.begin() + 35);
  std::map<std::string, std::string> responses;
  for (std::size_t i = 0; i < eval_items.size(); ++i) {
    responses[eval_items[i].id] = i % 5 == 4 ? "Z" : eval_items[i].answer;
  }
  for (const auto& r : routed) {
    if (r.sample.bucket != Bucket::generation) continue;
    eval_items.push_back(r.sample);
    responses[r.sample.id] = r.sample.answer;
  }
  EvalConfig ecfg;
  ecfg.general_scores = {{"general_bench", 80.0}};
  const EvalResult res = run_eval(eval_gw.gateway, eval_items, responses, ecfg);
  write_ledger(dir / "ledger.jsonl", res.ledger);
  run.ledger_lines = count_lines(dir / "ledger.jsonl");
  digest << read_file(dir / "ledger.jsonl") << report_to_json(res.report).dump() << "\n";
  run.report_valid = res.report.group_avgs.count(kInsuranceGroup) == 1 && res.report.two_avg.has_value() &&
                     !res.report.dimension_scores.empty() && res.report.scored > 0;

  run.digest = digest.str();
  return run;
}

Outcome end_to_end(PipelineRun& first) {
  Outcome out;
  const auto start = Clock::now();
  try {
    first = run_pipeline(7);
    const PipelineRun second = run_pipeline(7);
    const double elapsed = seconds_since(start);
    out.require(first.report_valid, "report is missing required fields");
    out.require(first.ledger_lines > 0 && first.trace_lines > 0, "empty ledger or trace export");
    out.require(first.digest == second.digest, "rerun is not bit-identical");
    out.require(elapsed < 10.0, "two runs took " + fmt("%.2f", elapsed) + "s");
    if (out.pass) {
      out.detail = "50 samples, two runs in " + fmt("%.3f", elapsed) + "s, digest " +
                   sha256_hex(first.digest).substr(0, 12) + " identical";
    }
  } catch (const std::exception& e) {
    out.require(false, std::string("pipeline threw: ") + e.what());
  }
  return out;
}

Outcome format_conformance(const PipelineRun& run) {
  Outcome out;
  out.require(!run.outputs.empty(), "no pipeline outputs");
  for (const auto& s : run.outputs) {
    const auto v = validate_sample(s);
    out.require(v.ok(), s.id + ": " + (v.ok() ? "" : v.violations.front()));
  }
  for (const auto& s : run.knowledge) {
    const bool prefixed = s.messages.size() >= 2 && text::starts_with(s.messages.back().content, "<think></think>");
    out.require(prefixed, s.id + " lacks the empty think prefix");
  }
  if (out.pass) {
    out.detail = std::to_string(run.outputs.size()) + " outputs valid, " + std::to_string(run.knowledge.size()) +
                 " knowledge-injection samples prefixed";
  }
  return out;
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"published_row_arithmetic", published_row_arithmetic},     {"length_reward_closed_form", length_closed_form},
      {"accuracy_gating", accuracy_gating},         {"grpo_normalization", grpo_normalization},
      {"routing_totality", routing_totality},       {"loop_contracts", loop_contracts},
      {"mixture_constraints", mixture_constraints}, {"text_penalties", text_penalties},
  };
  PipelineRun pipeline;
  checks.emplace_back("end_to_end_smoke", [&] { return end_to_end(pipeline); });
  checks.emplace_back("sample_format_conformance", [&] { return format_conformance(pipeline); });

  int failures = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
