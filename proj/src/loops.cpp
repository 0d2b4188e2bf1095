#include "alignkit/loops.hpp"

#include <algorithm>
#include <fstream>

#include "alignkit/parallel.hpp"
#include "alignkit/rewards.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

using nlohmann::json;

namespace {

constexpr std::size_t kDigestLimit = 20;

std::string last_user_turn(const Sample& sample) {
  for (auto it = sample.messages.rbegin(); it != sample.messages.rend(); ++it) {
    if (it->role == Role::user) return it->content;
  }
  return {};
}

void enter(AnswerLoopState& st, AnswerPhase phase) {
  st.phase = phase;
  st.history.push_back({st.iteration, phase, st.candidate, st.verdicts.size()});
}

std::string call(ModelGateway& gateway, std::vector<Message> messages) {
  return gateway.complete(gateway.make_request(ChatMode::generate, std::move(messages))).content;
}

}  // namespace

std::string to_string(AnswerPhase p) {
  switch (p) {
    case AnswerPhase::generate:
      return "generate";
    case AnswerPhase::verify:
      return "verify";
    case AnswerPhase::reflect:
      return "reflect";
    case AnswerPhase::rewrite:
      return "rewrite";
    case AnswerPhase::accepted:
      return "accepted";
    case AnswerPhase::rejected:
      return "rejected";
  }
  return "?";
}

bool is_legal_transition(AnswerPhase from, AnswerPhase to) {
  switch (from) {
    case AnswerPhase::generate:
      return to == AnswerPhase::verify;
    case AnswerPhase::verify:
      return to == AnswerPhase::accepted || to == AnswerPhase::reflect || to == AnswerPhase::rejected;
    case AnswerPhase::reflect:
      return to == AnswerPhase::rewrite;
    case AnswerPhase::rewrite:
      return to == AnswerPhase::verify;
    case AnswerPhase::accepted:
    case AnswerPhase::rejected:
      return false;
  }
  return false;
}

std::string to_string(LoopStatus s) {
  switch (s) {
    case LoopStatus::accepted:
      return "accepted";
    case LoopStatus::rejected:
      return "rejected";
    case LoopStatus::aborted:
      return "aborted";
  }
  return "?";
}

AnswerVerifier reference_answer_verifier(std::vector<ExtractionPattern> patterns, double tol) {
  return [patterns = std::move(patterns), tol](const Sample& sample, const std::string& final_answer) {
    const VerifierOutcome o = verify_rule_based(final_answer, sample.answer, patterns, tol);
    if (o.verdict == Verdict::correct) return VerifierVerdict{true, "matches reference (" + to_string(o.match_kind) + ")"};
    if (o.verdict == Verdict::incorrect) {
      return VerifierVerdict{false, "expected " + sample.answer + ", got " + o.extracted.value_or(final_answer)};
    }
    return VerifierVerdict{false, "no final answer comparable to the reference " + sample.answer};
  };
}

ModelOutput split_think(const std::string& content) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  const auto open = content.find(kOpen);
  const auto close = content.find(kClose);
  if (open == std::string::npos || close == std::string::npos || close < open) return {"", text::trim(content)};
  return {text::trim(content.substr(open + kOpen.size(), close - open - kOpen.size())),
          text::trim(content.substr(close + kClose.size()))};
}

std::vector<Message> generation_messages(const Sample& sample) {
  std::vector<Message> msgs = sample.messages;
  while (!msgs.empty() && msgs.back().role == Role::assistant) msgs.pop_back();
  return msgs;
}

std::vector<Message> reflection_messages(const ModelGateway& gateway, const Sample& sample,
                                         const std::string& candidate, const std::string& feedback) {
  return {{Role::user, render_template(gateway.templates().reflect,
                                       {{"task", last_user_turn(sample)}, {"candidate", candidate}, {"feedback", feedback}})}};
}

std::vector<Message> rewrite_messages(const ModelGateway& gateway, const Sample& sample, const std::string& candidate,
                                      const std::string& critique) {
  return {{Role::user, render_template(gateway.templates().rewrite,
                                       {{"task", last_user_turn(sample)}, {"candidate", candidate}, {"critique", critique}})}};
}

AnswerLoopOutcome run_answer_loop(ModelGateway& gateway, const Sample& sample, const AnswerVerifier& verifier,
                                  std::uint32_t max_iters) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  AnswerLoopOutcome out;
  AnswerLoopState& st = out.trace;
  st.sample_id = sample.id;
  try {
    enter(st, AnswerPhase::generate);
    st.candidate = call(gateway, generation_messages(sample));
    while (true) {
      enter(st, AnswerPhase::verify);
      const ModelOutput parsed = split_think(st.candidate);
      const VerifierVerdict v = verifier(sample, parsed.answer);
      st.verdicts.push_back({st.iteration, v.pass, v.reason});
      if (v.pass) {
        enter(st, AnswerPhase::accepted);
        Sample accepted = sample;
        accepted.messages = generation_messages(sample);
        accepted.messages.push_back({Role::assistant, st.candidate});
        accepted.think = parsed.think;
        accepted.answer = parsed.answer;
        accepted.bucket = Bucket::generation;
        accepted.provenance.iteration = st.iteration;
        out.status = LoopStatus::accepted;
        out.sample = std::move(accepted);
        return out;
      }
      if (st.verdicts.size() >= max_iters) {
        enter(st, AnswerPhase::rejected);
        out.status = LoopStatus::rejected;
        return out;
      }
      enter(st, AnswerPhase::reflect);
      st.reflections.push_back(call(gateway, reflection_messages(gateway, sample, st.candidate, v.reason)));
      enter(st, AnswerPhase::rewrite);
      st.candidate = call(gateway, rewrite_messages(gateway, sample, st.candidate, st.reflections.back()));
      ++st.iteration;
    }
  } catch (const GatewayError& e) {
    out.status = LoopStatus::aborted;
    out.error = e.what();
  }
  return out;
}

std::vector<AnswerLoopOutcome> run_answer_loops(ModelGateway& gateway, const std::vector<Sample>& samples,
                                                const AnswerVerifier& verifier, std::uint32_t max_iters) {
  std::vector<AnswerLoopOutcome> outcomes(samples.size());
  parallel_for(samples.size(), gateway.config().max_in_flight,
               [&](std::size_t i) { outcomes[i] = run_answer_loop(gateway, samples[i], verifier, max_iters); });
  return outcomes;
}

Sample quarantine(const Sample& sample) {
  Sample q = sample;
  q.bucket = Bucket::quarantine;
  return q;
}

BatchYield batch_yield(const std::vector<AnswerLoopOutcome>& results) {
  BatchYield y;
  for (const auto& r : results) {
    (r.status == LoopStatus::accepted ? y.accepted_ids : y.rejected_ids).push_back(r.trace.sample_id);
  }
  y.yield_rate = results.empty() ? 0.0 : static_cast<double>(y.accepted_ids.size()) / static_cast<double>(results.size());
  return y;
}

json snapshot_to_json(const std::string& sample_id, const AnswerSnapshot& s) {
  return {{"sample_id", sample_id},
          {"iteration", s.iteration},
          {"phase", to_string(s.phase)},
          {"candidate", s.candidate},
          {"verdicts", s.verdict_count}};
}

void export_answer_traces(const std::filesystem::path& path, const std::vector<AnswerLoopOutcome>& outcomes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace file " + path.string());
  for (const auto& o : outcomes) {
    for (const auto& snap : o.trace.history) out << snapshot_to_json(o.trace.sample_id, snap).dump() << '\n';
  }
}

std::vector<Message> prompt_eval_messages(const std::string& prompt, const ValidationItem& item) {
  return {{Role::system, prompt}, {Role::user, item.input}};
}

std::vector<Message> refinement_messages(const ModelGateway& gateway, const std::string& best_prompt,
                                         const std::vector<FailureNote>& digest) {
  std::string errors;
  for (std::size_t i = 0; i < digest.size() && i < kDigestLimit; ++i) {
    errors += "- [" + digest[i].sample_id + "] " + digest[i].summary + "\n";
  }
  if (errors.empty()) errors = "(none)\n";
  return {{Role::user, render_template(gateway.templates().refine_prompt, {{"prompt", best_prompt}, {"errors", errors}})}};
}

namespace {

struct PromptEvaluation {
  double accuracy = 0.0;
  std::vector<FailureNote> failures;
};

PromptEvaluation evaluate_prompt(ModelGateway& gateway, const std::string& prompt,
                                 const std::vector<ValidationItem>& validation, const PromptScorer& scorer) {
  std::vector<PromptScore> scores(validation.size());
  parallel_for(validation.size(), gateway.config().max_in_flight, [&](std::size_t i) {
    scores[i] = scorer(call(gateway, prompt_eval_messages(prompt, validation[i])), validation[i].gold);
  });
  PromptEvaluation ev;
  std::size_t passed = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].pass) {
      ++passed;
    } else {
      ev.failures.push_back({validation[i].id, scores[i].failure});
    }
  }
  ev.accuracy = static_cast<double>(passed) / static_cast<double>(validation.size());
  return ev;
}

}  // namespace

PromptLoopState run_prompt_loop(ModelGateway& gateway, const std::string& initial_prompt,
                                const std::vector<ValidationItem>& validation, const PromptScorer& scorer,
                                std::uint32_t max_rounds) {
  if (validation.empty()) throw EmptyValidationSet();
  if (max_rounds < 1) throw std::invalid_argument("max_rounds must be >= 1");
  PromptLoopState st;
  st.current_prompt = initial_prompt;
  st.best = {initial_prompt, 0.0, 0};
  try {
    PromptEvaluation ev = evaluate_prompt(gateway, initial_prompt, validation, scorer);
    st.accuracy_trace.push_back(ev.accuracy);
    st.best.accuracy = ev.accuracy;
    st.error_digest = std::move(ev.failures);

    for (std::uint32_t round = 1; round <= max_rounds && st.best.accuracy < 1.0; ++round) {
      const std::string refined =
          text::trim(call(gateway, refinement_messages(gateway, st.best.prompt, st.error_digest)));
      if (refined.empty()) {
        st.error = "refinement returned an empty prompt in round " + std::to_string(round);
        break;
      }
      ev = evaluate_prompt(gateway, refined, validation, scorer);
      st.round = round;
      st.current_prompt = refined;
      st.accuracy_trace.push_back(ev.accuracy);
      if (ev.accuracy > st.best.accuracy) {
        st.best = {refined, ev.accuracy, round};
        st.error_digest = std::move(ev.failures);
      }
    }
  } catch (const GatewayError& e) {
    st.error = e.what();
  }
  return st;
}

json prompt_state_to_json(const PromptLoopState& s) {
  json digest = json::array();
  for (const auto& f : s.error_digest) digest.push_back({{"sample_id", f.sample_id}, {"summary", f.summary}});
  json j{{"round", s.round},
         {"current_prompt", s.current_prompt},
         {"accuracy_trace", s.accuracy_trace},
         {"best", {{"prompt", s.best.prompt}, {"accuracy", s.best.accuracy}, {"round", s.best.round}}},
         {"error_digest", digest}};
  j["error"] = s.error ? json(*s.error) : json();
  return j;
}

}  // namespace alignkit
