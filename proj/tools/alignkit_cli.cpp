#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "alignkit/curriculum.hpp"
#include "alignkit/dataset_store.hpp"
#include "alignkit/evalharness.hpp"
#include "alignkit/gateway.hpp"
#include "alignkit/judge.hpp"
#include "alignkit/loops.hpp"
#include "alignkit/mock_transport.hpp"
#include "alignkit/patterns.hpp"
#include "alignkit/rag_adapt.hpp"
#include "alignkit/rewards.hpp"
#include "alignkit/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace alignkit;

namespace {

struct GatewayOptions {
  std::string mock;
  std::string endpoint;
  std::string templates;
};

void add_gateway_options(CLI::App* cmd, GatewayOptions& o) {
  cmd->add_option("--mock", o.mock, "Scripted transcript JSONL for offline runs");
  cmd->add_option("--endpoint", o.endpoint, "Endpoint config JSON for a live model server");
  cmd->add_option("--templates", o.templates, "Prompt template overrides JSON");
}

std::unique_ptr<ModelGateway> make_gateway(const GatewayOptions& o, bool required = true) {
  if (!o.mock.empty() && !o.endpoint.empty()) throw std::invalid_argument("--mock and --endpoint are exclusive");
  PromptTemplates templates = o.templates.empty() ? PromptTemplates::builtin() : load_prompt_templates(o.templates);
  if (!o.endpoint.empty()) {
    return std::make_unique<ModelGateway>(load_endpoint_config(o.endpoint), std::make_shared<HttpTransport>(),
                                          std::move(templates));
  }
  if (o.mock.empty() && required) throw std::invalid_argument("a model is needed: pass --mock or --endpoint");
  auto transport = std::make_shared<MockTransport>();
  if (!o.mock.empty()) transport->load_jsonl(o.mock);
  EndpointConfig cfg;
  cfg.backoff_base_ms = 0;
  return std::make_unique<ModelGateway>(cfg, transport, std::move(templates));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

template <typename Fn>
void for_each_jsonl(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) fn(json::parse(line));
  }
}

std::vector<ExtractionPattern> patterns_from(const std::string& path) {
  return path.empty() ? builtin_patterns() : load_patterns(path);
}

void append_if_any(const std::string& path, const std::vector<Sample>& samples) {
  if (!path.empty() && !samples.empty()) append_records(open_dataset(path), samples);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data synthesis, curriculum, reward and evaluation tooling for domain alignment"};
  app.require_subcommand(1);

  // loop answers / loop prompt
  auto* loop = app.add_subcommand("loop", "Iterative answer and prompt refinement");
  loop->require_subcommand(1);

  GatewayOptions answers_gw;
  std::string answers_dataset, answers_out, answers_quarantine, answers_trace, answers_patterns;
  std::uint32_t max_iters = 3;
  auto* answers = loop->add_subcommand("answers", "Generate, verify, reflect and rewrite until accepted");
  answers->add_option("--dataset", answers_dataset, "Sample JSONL with reference answers")->required();
  answers->add_option("--max-iters", max_iters, "Verification budget per sample")->check(CLI::PositiveNumber);
  answers->add_option("--out", answers_out, "Dataset receiving accepted samples");
  answers->add_option("--out-quarantine", answers_quarantine, "Dataset receiving rejected samples");
  answers->add_option("--trace", answers_trace, "State snapshot JSONL");
  answers->add_option("--patterns", answers_patterns, "Extraction pattern library JSON");
  add_gateway_options(answers, answers_gw);

  GatewayOptions prompt_gw;
  std::string prompt_initial, prompt_validation, prompt_out, prompt_patterns;
  std::uint32_t rounds = kDefaultPromptRounds;
  auto* prompt = loop->add_subcommand("prompt", "Refine a task prompt against a validation set");
  prompt->add_option("--initial", prompt_initial, "File holding the initial prompt")->required();
  prompt->add_option("--validation", prompt_validation, "JSONL of {id, input, gold}")->required();
  prompt->add_option("--rounds", rounds, "Refinement rounds")->check(CLI::PositiveNumber);
  prompt->add_option("--out", prompt_out, "Loop state JSON");
  prompt->add_option("--patterns", prompt_patterns, "Extraction pattern library JSON");
  add_gateway_options(prompt, prompt_gw);

  // route
  GatewayOptions route_gw;
  std::string route_input, route_gen, route_ref, route_quar, route_prefix = "rag", route_area = "ISC";
  auto* route = app.add_subcommand("route", "Validate RAG samples and split them into buckets");
  route->add_option("--input", route_input, "Ingest JSONL of {doc, question, answer, answerable}")->required();
  route->add_option("--out-generation", route_gen, "Dataset for consistent samples")->required();
  route->add_option("--out-refusal", route_ref, "Dataset for inconsistent samples")->required();
  route->add_option("--out-quarantine", route_quar, "Dataset for samples whose validation failed");
  route->add_option("--id-prefix", route_prefix, "Prefix for generated sample ids");
  route->add_option("--area", route_area, "Business area code for the batch");
  add_gateway_options(route, route_gw);

  // schedule
  std::string sched_stats, sched_out, sched_presets, sched_preset;
  int stage = 2;
  double boost = 1.0;
  std::optional<std::size_t> threshold;
  auto* schedule = app.add_subcommand("schedule", "Compute a training mixture");
  schedule->add_option("--stats", sched_stats, "Bucket stats JSON")->required();
  schedule->add_option("--stage", stage, "1 or 2")->check(CLI::IsMember({1, 2}));
  schedule->add_option("--boost", boost, "Long-tail boost factor (stage 2)");
  schedule->add_option("--long-tail-threshold", threshold, "Reclassify domain buckets below this count");
  schedule->add_option("--presets", sched_presets, "Stage-1 preset file");
  schedule->add_option("--preset", sched_preset, "Stage-1 preset name");
  schedule->add_option("--out", sched_out, "Mixture JSON")->required();

  // reward score
  auto* reward = app.add_subcommand("reward", "Hybrid reward computation");
  reward->require_subcommand(1);
  GatewayOptions reward_gw;
  std::string reward_responses, reward_gold, reward_config, reward_out, reward_patterns;
  auto* score = reward->add_subcommand("score", "Score responses into reward signals");
  score->add_option("--responses", reward_responses, "JSONL of {id, response}")->required();
  score->add_option("--gold", reward_gold, "JSONL of {id, gold?, context?}")->required();
  score->add_option("--config", reward_config, "Reward config JSON");
  score->add_option("--patterns", reward_patterns, "Extraction pattern library JSON");
  score->add_option("--out", reward_out, "RewardSignal JSONL")->required();
  add_gateway_options(score, reward_gw);

  // eval run / eval report
  auto* eval = app.add_subcommand("eval", "Benchmark scoring and reporting");
  eval->require_subcommand(1);
  GatewayOptions eval_gw;
  std::string eval_dataset, eval_responses, eval_out, eval_ledger, eval_model = "candidate", eval_patterns;
  auto* run = eval->add_subcommand("run", "Score responses and write a report");
  run->add_option("--dataset", eval_dataset, "Benchmark Sample JSONL")->required();
  run->add_option("--responses", eval_responses, "JSONL of {id, response}")->required();
  run->add_option("--out", eval_out, "Report JSON")->required();
  run->add_option("--ledger", eval_ledger, "Per-item ledger JSONL");
  run->add_option("--model-id", eval_model, "Name shown in the report");
  run->add_option("--patterns", eval_patterns, "Extraction pattern library JSON");
  add_gateway_options(run, eval_gw);

  std::string report_ledger, report_format = "table", report_model = "candidate";
  auto* report = eval->add_subcommand("report", "Rebuild a report from a ledger");
  report->add_option("--ledger", report_ledger, "Per-item ledger JSONL")->required();
  report->add_option("--format", report_format, "table or json")->check(CLI::IsMember({"table", "json"}));
  report->add_option("--model-id", report_model, "Name shown in the report");

  // mock hash
  auto* mock = app.add_subcommand("mock", "Transcript fixture helpers");
  mock->require_subcommand(1);
  std::string hash_messages, hash_mode = "raw", hash_templates;
  auto* hash = mock->add_subcommand("hash", "Print the request hash of a message array");
  hash->add_option("--messages", hash_messages, "JSON array of {role, content}; stdin when omitted");
  hash->add_option("--mode", hash_mode, "raw, generate, judge_direct or judge_cot")
      ->check(CLI::IsMember({"raw", "generate", "judge_direct", "judge_cot"}));
  hash->add_option("--templates", hash_templates, "Prompt template overrides JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (answers->parsed()) {
      auto gw = make_gateway(answers_gw);
      const auto samples = read_records(answers_dataset);
      const auto outcomes =
          run_answer_loops(*gw, samples, reference_answer_verifier(patterns_from(answers_patterns)), max_iters);
      std::vector<Sample> accepted, rejected;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].status == LoopStatus::accepted) {
          accepted.push_back(*outcomes[i].sample);
        } else {
          rejected.push_back(quarantine(samples[i]));
        }
      }
      append_if_any(answers_out, accepted);
      append_if_any(answers_quarantine, rejected);
      if (!answers_trace.empty()) export_answer_traces(answers_trace, outcomes);
      const BatchYield y = batch_yield(outcomes);
      std::cout << json{{"accepted", y.accepted_ids.size()}, {"rejected", y.rejected_ids.size()}, {"yield", y.yield_rate}}
                       .dump()
                << '\n';
      return 0;
    }
    if (prompt->parsed()) {
      auto gw = make_gateway(prompt_gw);
      std::vector<ValidationItem> validation;
      for_each_jsonl(prompt_validation, [&](const json& j) {
        validation.push_back({j.at("id").get<std::string>(), j.at("input").get<std::string>(), j.at("gold").get<std::string>()});
      });
      const auto patterns = patterns_from(prompt_patterns);
      const PromptScorer scorer = [&patterns](const std::string& output, const std::string& gold) {
        const VerifierOutcome o = verify_rule_based(split_think(output).answer, gold, patterns, 1e-4);
        if (o.verdict == Verdict::correct) return PromptScore{true, ""};
        return PromptScore{false, "expected " + gold + ", got " + o.extracted.value_or(text::trim(output))};
      };
      const PromptLoopState st = run_prompt_loop(*gw, text::trim(read_text(prompt_initial)), validation, scorer, rounds);
      const std::string dumped = prompt_state_to_json(st).dump(2);
      if (!prompt_out.empty()) write_text(prompt_out, dumped + "\n");
      std::cout << dumped << '\n';
      return st.error ? 1 : 0;
    }
    if (route->parsed()) {
      auto gw = make_gateway(route_gw);
      RoutingConfig cfg;
      cfg.business_area = parse_business_area(route_area);
      const auto routed = route_batch(*gw, read_ingest_jsonl(route_input), route_prefix, cfg);
      std::vector<Sample> gen, ref, quar;
      for (const auto& r : routed) {
        (r.decision.bucket == Bucket::generation ? gen : r.decision.bucket == Bucket::refusal ? ref : quar)
            .push_back(r.sample);
      }
      const std::string quar_path =
          route_quar.empty() ? (fs::path(route_gen).parent_path() / "quarantine.jsonl").string() : route_quar;
      append_if_any(route_gen, gen);
      append_if_any(route_ref, ref);
      append_if_any(quar_path, quar);
      std::cout << json{{"generation", gen.size()}, {"refusal", ref.size()}, {"quarantine", quar.size()}}.dump() << '\n';
      return 0;
    }
    if (schedule->parsed()) {
      auto stats = load_bucket_stats(sched_stats);
      if (threshold) stats = classify_long_tail(std::move(stats), *threshold);
      MixtureSpec spec;
      if (stage == 1) {
        if (sched_presets.empty() || sched_preset.empty()) throw std::invalid_argument("stage 1 needs --presets and --preset");
        const auto presets = load_stage1_presets(sched_presets);
        const auto it = presets.find(sched_preset);
        if (it == presets.end()) throw std::invalid_argument("unknown preset " + sched_preset);
        spec = compute_stage1_weights(stats, it->second);
      } else {
        spec = compute_stage2_weights(stats, boost);
      }
      write_text(sched_out, mixture_to_json(spec).dump(2) + "\n");
      for (const auto& c : spec.constraints) {
        std::cout << (c.satisfied ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << '\n';
      }
      return spec.all_satisfied() ? 0 : 3;
    }
    if (score->parsed()) {
      auto gw = make_gateway(reward_gw, false);
      RewardConfig cfg = reward_config.empty() ? RewardConfig{} : reward_config_from_json(json::parse(read_text(reward_config)));
      validate_reward_config(cfg);
      const auto patterns = patterns_from(reward_patterns);
      std::map<std::string, json> gold;
      for_each_jsonl(reward_gold, [&](const json& j) { gold[j.at("id").get<std::string>()] = j; });
      const LexicalEntailmentScorer entailment;
      std::ostringstream out;
      for (const auto& [id, response] : read_responses(reward_responses)) {
        const auto g = gold.find(id);
        if (g == gold.end()) throw std::runtime_error("no gold record for " + id);
        const std::string context = g->second.value("context", "");
        const std::string answer = split_think(response).answer;
        const auto penalties = compute_penalties(answer, context, cfg, context.empty() ? nullptr : &entailment);
        const std::size_t length = token_length(response);
        RewardSignal r;
        if (g->second.contains("gold") && !g->second.at("gold").is_null()) {
          const VerifierOutcome o =
              verify_with_escalation(*gw, answer, g->second.at("gold").get<std::string>(), patterns, cfg.numeric_tol);
          r = composite_reward(o, std::nullopt, length, penalties, cfg);
        } else {
          const std::vector<Message> transcript{{Role::user, g->second.value("prompt", "")}, {Role::assistant, answer}};
          const auto rubric = judge_rubric(*gw, transcript,
                                           context.empty() ? std::nullopt : std::optional<std::string>(context),
                                           RubricSpec::standard());
          r = composite_reward(std::nullopt, rubric.scores, length, penalties, cfg);
        }
        json row = reward_signal_to_json(r);
        row["id"] = id;
        out << row.dump() << '\n';
      }
      write_text(reward_out, out.str());
      return 0;
    }
    if (run->parsed()) {
      auto gw = make_gateway(eval_gw);
      EvalConfig cfg;
      cfg.model_id = eval_model;
      cfg.patterns = patterns_from(eval_patterns);
      const EvalResult result = run_eval(*gw, open_dataset(eval_dataset), eval_responses, cfg);
      write_text(eval_out, report_to_json(result.report).dump(2) + "\n");
      if (!eval_ledger.empty()) write_ledger(eval_ledger, result.ledger);
      std::cout << report_to_table(result.report);
      return 0;
    }
    if (report->parsed()) {
      EvalConfig cfg;
      cfg.model_id = report_model;
      const ReportRow row = report_from_ledger(read_ledger(report_ledger), cfg);
      std::cout << (report_format == "json" ? report_to_json(row).dump(2) + "\n" : report_to_table(row));
      return 0;
    }
    if (hash->parsed()) {
      const std::string raw = hash_messages.empty()
                                  ? std::string(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>())
                                  : read_text(hash_messages);
      std::vector<Message> messages = json::parse(raw).get<std::vector<Message>>();
      if (hash_mode != "raw") {
        const PromptTemplates templates =
            hash_templates.empty() ? PromptTemplates::builtin() : load_prompt_templates(hash_templates);
        const ModelGateway gw(EndpointConfig{}, std::make_shared<MockTransport>(), templates);
        const ChatMode mode = hash_mode == "generate"       ? ChatMode::generate
                              : hash_mode == "judge_direct" ? ChatMode::judge_direct
                                                            : ChatMode::judge_cot;
        messages = gw.make_request(mode, std::move(messages)).messages;
      }
      std::cout << request_hash(messages) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
