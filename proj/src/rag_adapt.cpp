#include "alignkit/rag_adapt.hpp"

#include <cmath>
#include <fstream>

#include "alignkit/hashing.hpp"
#include "alignkit/parallel.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

using nlohmann::json;

namespace {

Sample rag_sample(const SampleMeta& meta, Pipeline pipeline) {
  if (meta.id.empty()) throw std::invalid_argument("sample id is empty");
  Sample s;
  s.id = meta.id;
  s.task_type = meta.task_type;
  s.business_area = meta.business_area;
  s.difficulty = meta.difficulty;
  s.cognition = meta.cognition;
  s.format = Format::open_ended;
  s.bucket = Bucket::generation;
  s.provenance.source = meta.source;
  s.provenance.pipeline = pipeline;
  return s;
}

const KnowledgeQA& require_qa(const std::optional<KnowledgeQA>& qa, AtomicTaskKind kind) {
  if (!qa || text::trim(qa->question).empty() || text::trim(qa->answer).empty()) {
    throw MissingIngredient(to_string(kind) + " needs a question and an answer");
  }
  return *qa;
}

}  // namespace

std::string to_string(AtomicTaskKind k) {
  switch (k) {
    case AtomicTaskKind::boundary_id:
      return "boundary_id";
    case AtomicTaskKind::knowledge_selection:
      return "knowledge_selection";
    case AtomicTaskKind::summarization:
      return "summarization";
    case AtomicTaskKind::self_check:
      return "self_check";
  }
  return "?";
}

const std::vector<AtomicTaskKind>& all_atomic_task_kinds() {
  static const std::vector<AtomicTaskKind> kinds{AtomicTaskKind::boundary_id, AtomicTaskKind::knowledge_selection,
                                                 AtomicTaskKind::summarization, AtomicTaskKind::self_check};
  return kinds;
}

AtomicTaskKind parse_atomic_task_kind(std::string_view s) {
  for (auto k : all_atomic_task_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw UnknownEnumValue("atomic task kind", s);
}

std::string refusal_answer(const std::string& reason) { return std::string(kRefusalMarker) + " " + reason; }

Sample build_atomic_task(AtomicTaskKind kind, const std::string& doc, const std::optional<KnowledgeQA>& qa,
                         const std::vector<std::string>& distractor_docs, const SampleMeta& meta,
                         std::uint64_t dataset_seed) {
  if (text::trim(doc).empty()) throw MissingIngredient(to_string(kind) + " needs a source document");
  Sample s = rag_sample(meta, Pipeline::atomic_rag);
  s.task_type = s.task_type.empty() ? to_string(kind) : s.task_type;

  switch (kind) {
    case AtomicTaskKind::boundary_id: {
      const KnowledgeQA& q = require_qa(qa, kind);
      if (text::contains(text::normalize(doc), text::normalize(q.answer))) {
        throw MissingIngredient("boundary_id needs an answer the document does not contain");
      }
      s.context = doc;
      s.answer = refusal_answer("The provided document does not contain enough evidence to answer this question.");
      s.messages = {{Role::user, q.question}, {Role::assistant, s.answer}};
      s.bucket = Bucket::refusal;
      break;
    }
    case AtomicTaskKind::knowledge_selection: {
      const KnowledgeQA& q = require_qa(qa, kind);
      if (distractor_docs.empty()) throw MissingIngredient("knowledge_selection needs at least one distractor document");
      std::vector<std::string> passages{doc};
      passages.insert(passages.end(), distractor_docs.begin(), distractor_docs.end());
      SeededRng rng(derive_seed(dataset_seed, meta.id));
      rng.shuffle(passages);
      std::string context;
      for (std::size_t i = 0; i < passages.size(); ++i) {
        if (i > 0) context += "\n\n";
        context += "[Passage " + std::to_string(i + 1) + "]\n" + passages[i];
      }
      s.format = Format::extraction;
      s.context = std::move(context);
      s.answer = q.answer;
      s.messages = {{Role::user, q.question}, {Role::assistant, q.answer}};
      break;
    }
    case AtomicTaskKind::summarization: {
      if (!qa || text::trim(qa->answer).empty()) throw MissingIngredient("summarization needs a reference summary");
      const std::string instruction =
          text::trim(qa->question).empty() ? "Summarize the document without adding facts it does not state."
                                           : qa->question;
      s.context = doc;
      s.answer = qa->answer;
      s.messages = {{Role::user, instruction}, {Role::assistant, qa->answer}};
      break;
    }
    case AtomicTaskKind::self_check: {
      const KnowledgeQA& q = require_qa(qa, kind);
      if (text::trim(q.claim).empty()) throw MissingIngredient("self_check needs a draft claim to verify");
      s.context = doc;
      s.answer = q.answer;
      s.messages = {{Role::user, q.question},
                    {Role::assistant, q.claim},
                    {Role::user, "Check every statement in your answer against the document and correct anything it "
                                 "does not support."},
                    {Role::assistant, q.answer}};
      break;
    }
  }
  return s;
}

Bucket bucket_for(ValidatorVerdict v) {
  switch (v) {
    case ValidatorVerdict::consistent:
      return Bucket::generation;
    case ValidatorVerdict::inconsistent:
      return Bucket::refusal;
    case ValidatorVerdict::error:
      return Bucket::quarantine;
  }
  return Bucket::quarantine;
}

std::optional<ValidatorVerdict> parse_consistency_verdict(const std::string& content) {
  const auto lines = text::split_lines(content);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string line = text::to_upper_ascii(text::trim(*it));
    if (line.empty()) continue;
    while (!line.empty() && (line.back() == '.' || line.back() == '*')) line.pop_back();
    while (!line.empty() && line.front() == '*') line.erase(line.begin());
    if (line == "CONSISTENT") return ValidatorVerdict::consistent;
    if (line == "INCONSISTENT") return ValidatorVerdict::inconsistent;
    return std::nullopt;
  }
  return std::nullopt;
}

std::vector<Message> consistency_messages(const ModelGateway& gateway, const KnowledgeQA& qa,
                                          const std::string& source_doc) {
  const std::string prompt = render_template(gateway.templates().consistency,
                                             {{"document", source_doc}, {"question", qa.question}, {"answer", qa.answer}});
  return gateway.make_request(ChatMode::judge_direct, {{Role::user, prompt}}).messages;
}

RoutedSample route_rag_sample(ModelGateway& gateway, const KnowledgeQA& qa, const std::string& source_doc,
                              const SampleMeta& meta) {
  RoutedSample out;
  out.decision.sample_id = meta.id;
  ChatRequest req = gateway.make_request(ChatMode::judge_direct, {});
  req.messages = consistency_messages(gateway, qa, source_doc);
  try {
    const std::string content = gateway.complete(req).content;
    if (auto v = parse_consistency_verdict(content)) {
      out.decision.verdict = *v;
    } else {
      out.decision.verdict = ValidatorVerdict::error;
      out.decision.cause = "unparseable validator reply: " + content;
    }
  } catch (const std::exception& e) {
    out.decision.verdict = ValidatorVerdict::error;
    out.decision.cause = e.what();
  }
  out.decision.bucket = bucket_for(out.decision.verdict);

  Sample s = rag_sample(meta, Pipeline::rag_adaptation);
  s.context = source_doc;
  s.bucket = out.decision.bucket;
  s.provenance.validator_verdict = out.decision.verdict;
  s.answer = out.decision.bucket == Bucket::refusal
                 ? refusal_answer("The document does not support a complete answer to this question.")
                 : qa.answer;
  s.messages = {{Role::user, qa.question}, {Role::assistant, s.answer}};
  out.sample = std::move(s);
  return out;
}

std::vector<IngestRecord> read_ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read ingest file " + path.string());
  std::vector<IngestRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("doc").get<std::string>(), j.at("question").get<std::string>(),
                     j.at("answer").get<std::string>(), j.value("answerable", true)});
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RoutedSample> route_batch(ModelGateway& gateway, const std::vector<IngestRecord>& records,
                                      const std::string& id_prefix, const RoutingConfig& cfg) {
  std::vector<RoutedSample> out(records.size());
  parallel_for(records.size(), gateway.config().max_in_flight, [&](std::size_t i) {
    SampleMeta meta;
    meta.id = id_prefix + "-" + std::to_string(i);
    meta.task_type = "rag_qa";
    meta.business_area = cfg.business_area;
    meta.source = cfg.source;
    const KnowledgeQA qa{records[i].question, records[i].answer, cfg.source, {}};
    out[i] = route_rag_sample(gateway, qa, records[i].doc, meta);
  });
  return out;
}

std::vector<Sample> blend_real_queries(std::vector<Sample> generated, const std::vector<Sample>& real, double ratio,
                                       std::uint64_t seed) {
  if (ratio < 0.0 || ratio >= 1.0) throw std::invalid_argument("real query ratio must lie in [0, 1)");
  if (ratio == 0.0 || real.empty()) return generated;
  // k / (n + k) = ratio
  const auto wanted = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(generated.size()) / (1.0 - ratio)));
  std::vector<std::size_t> order(real.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(seed);
  rng.shuffle(order);
  for (std::size_t i = 0; i < wanted && i < order.size(); ++i) generated.push_back(real[order[i]]);
  return generated;
}

}  // namespace alignkit
