#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "alignkit/rag_adapt.hpp"
#include "alignkit/text.hpp"
#include "support.hpp"

using namespace alignkit;
using namespace alignkit::testing;

namespace {

const std::string kDoc = "Clause 3: The waiting period for critical illness cover is 90 days from the policy start date.";

SampleMeta meta(const std::string& id) {
  SampleMeta m;
  m.id = id;
  m.task_type = "rag";
  m.business_area = BusinessArea::ISC;
  m.source = "doc-1";
  return m;
}

KnowledgeQA qa(const std::string& q, const std::string& a, const std::string& claim = "") {
  return {q, a, "doc-1", claim};
}

}  // namespace

TEST_CASE("verdict to bucket table") {
  CHECK(bucket_for(ValidatorVerdict::consistent) == Bucket::generation);
  CHECK(bucket_for(ValidatorVerdict::inconsistent) == Bucket::refusal);
  CHECK(bucket_for(ValidatorVerdict::error) == Bucket::quarantine);
}

TEST_CASE("consistency verdict parsing reads the last non-empty line") {
  CHECK(parse_consistency_verdict("CONSISTENT") == ValidatorVerdict::consistent);
  CHECK(parse_consistency_verdict("checked\n  inconsistent.\n\n") == ValidatorVerdict::inconsistent);
  CHECK(parse_consistency_verdict("**CONSISTENT**") == ValidatorVerdict::consistent);
  CHECK_FALSE(parse_consistency_verdict("CONSISTENT\nmaybe"));
  CHECK_FALSE(parse_consistency_verdict(""));
  CHECK_FALSE(parse_consistency_verdict("mostly consistent"));
}

TEST_CASE("boundary_id produces a refusal record") {
  const auto s = build_atomic_task(AtomicTaskKind::boundary_id, kDoc,
                                   qa("What is the claim payout limit?", "Five million"), {}, meta("b1"), 1);
  CHECK(s.bucket == Bucket::refusal);
  CHECK(text::starts_with(s.answer, std::string(kRefusalMarker)));
  CHECK(s.context == std::optional<std::string>(kDoc));
  CHECK(validate_sample(s).ok());
  CHECK_THROWS_AS(build_atomic_task(AtomicTaskKind::boundary_id, kDoc, qa("How long?", "90 days"), {}, meta("b2"), 1),
                  MissingIngredient);
}

TEST_CASE("knowledge selection mixes passages in seeded order") {
  const std::vector<std::string> distractors{"Clause 8: Premiums are due monthly.", "Clause 9: Grace period is 30 days."};
  const auto a = build_atomic_task(AtomicTaskKind::knowledge_selection, kDoc, qa("Waiting period?", "90 days"),
                                   distractors, meta("k1"), 5);
  const auto b = build_atomic_task(AtomicTaskKind::knowledge_selection, kDoc, qa("Waiting period?", "90 days"),
                                   distractors, meta("k1"), 5);
  CHECK(a.context == b.context);
  REQUIRE(a.context);
  CHECK(text::contains(*a.context, kDoc));
  for (const auto& d : distractors) CHECK(text::contains(*a.context, d));
  CHECK(text::contains(*a.context, "[Passage 3]"));
  CHECK(validate_sample(a).ok());
  CHECK_THROWS_AS(build_atomic_task(AtomicTaskKind::knowledge_selection, kDoc, qa("q", "a"), {}, meta("k2"), 5),
                  MissingIngredient);
}

TEST_CASE("summarization and self-check records") {
  const auto sum = build_atomic_task(AtomicTaskKind::summarization, kDoc,
                                     qa("", "Critical illness cover starts after 90 days."), {}, meta("s1"), 1);
  CHECK(sum.answer == "Critical illness cover starts after 90 days.");
  CHECK(validate_sample(sum).ok());
  CHECK_THROWS_AS(build_atomic_task(AtomicTaskKind::summarization, kDoc, std::nullopt, {}, meta("s2"), 1),
                  MissingIngredient);

  const auto chk = build_atomic_task(AtomicTaskKind::self_check, kDoc,
                                     qa("Waiting period?", "90 days", "The waiting period is 30 days."), {}, meta("c1"), 1);
  REQUIRE(chk.messages.size() == 4);
  CHECK(chk.messages[1].content == "The waiting period is 30 days.");
  CHECK(chk.messages[3].content == "90 days");
  CHECK(validate_sample(chk).ok());
  CHECK_THROWS_AS(build_atomic_task(AtomicTaskKind::self_check, kDoc, qa("q", "a"), {}, meta("c2"), 1),
                  MissingIngredient);
  CHECK_THROWS_AS(build_atomic_task(AtomicTaskKind::summarization, "  ", qa("", "x"), {}, meta("c3"), 1),
                  MissingIngredient);
}

TEST_CASE("atomic task kinds round trip") {
  for (auto k : all_atomic_task_kinds()) CHECK(parse_atomic_task_kind(to_string(k)) == k);
  CHECK_THROWS(parse_atomic_task_kind("nope"));
}

TEST_CASE("routing sends consistent answers to generation and the rest to refusal or quarantine") {
  MockGateway m(fast_config(2));
  const auto good = qa("How long is the waiting period?", "90 days");
  const auto bad = qa("How long is the waiting period?", "30 days");
  const auto broken = qa("Is dental covered?", "Yes");
  const auto garbled = qa("Is optical covered?", "Yes");
  m.transport->add(consistency_messages(m.gateway, good, kDoc), "CONSISTENT");
  m.transport->add(consistency_messages(m.gateway, bad, kDoc), "INCONSISTENT");
  m.transport->add(consistency_messages(m.gateway, broken, kDoc), "CONSISTENT", -1);
  m.transport->add(consistency_messages(m.gateway, garbled, kDoc), "It depends");

  const auto g = route_rag_sample(m.gateway, good, kDoc, meta("r1"));
  CHECK(g.decision.verdict == ValidatorVerdict::consistent);
  CHECK(g.sample.bucket == Bucket::generation);
  CHECK(g.sample.answer == "90 days");
  CHECK(g.sample.provenance.validator_verdict == ValidatorVerdict::consistent);
  CHECK(validate_sample(g.sample).ok());

  const auto b = route_rag_sample(m.gateway, bad, kDoc, meta("r2"));
  CHECK(b.sample.bucket == Bucket::refusal);
  CHECK(text::starts_with(b.sample.answer, std::string(kRefusalMarker)));
  CHECK(validate_sample(b.sample).ok());

  const auto e = route_rag_sample(m.gateway, broken, kDoc, meta("r3"));
  CHECK(e.decision.verdict == ValidatorVerdict::error);
  CHECK(e.sample.bucket == Bucket::quarantine);
  CHECK_FALSE(e.decision.cause.empty());
  CHECK(m.transport->calls_for(request_hash(consistency_messages(m.gateway, broken, kDoc))) == 3);

  const auto u = route_rag_sample(m.gateway, garbled, kDoc, meta("r4"));
  CHECK(u.decision.bucket == Bucket::quarantine);
  CHECK(text::contains(u.decision.cause, "unparseable"));
}

TEST_CASE("validator requests use direct judging") {
  MockGateway m;
  const auto msgs = consistency_messages(m.gateway, qa("q?", "a"), kDoc);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].role == Role::system);
  CHECK(text::contains(msgs[0].content, "Do not show any reasoning"));
  CHECK(text::contains(msgs[1].content, kDoc));
}

TEST_CASE("batch routing keeps order and ids and is reproducible") {
  TempDir dir;
  {
    std::ofstream out(dir / "ingest.jsonl");
    for (int i = 0; i < 9; ++i) {
      out << nlohmann::json{{"doc", kDoc}, {"question", "Question " + std::to_string(i)}, {"answer", "a" + std::to_string(i)}}.dump()
          << "\n";
    }
  }
  const auto records = read_ingest_jsonl(dir / "ingest.jsonl");
  REQUIRE(records.size() == 9);
  auto run = [&] {
    MockGateway m(fast_config(0, 3));
    for (std::size_t i = 0; i < records.size(); ++i) {
      const KnowledgeQA q{records[i].question, records[i].answer, "ingest", {}};
      if (i % 3 == 0) m.transport->add(consistency_messages(m.gateway, q, records[i].doc), "CONSISTENT");
      if (i % 3 == 1) m.transport->add(consistency_messages(m.gateway, q, records[i].doc), "INCONSISTENT");
    }
    return route_batch(m.gateway, records, "rag", RoutingConfig{});
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sample.id == "rag-" + std::to_string(i));
    const Bucket want = i % 3 == 0 ? Bucket::generation : i % 3 == 1 ? Bucket::refusal : Bucket::quarantine;
    CHECK(a[i].decision.bucket == want);
    CHECK(to_jsonl_line(a[i].sample) == to_jsonl_line(b[i].sample));
  }
}

TEST_CASE("real query blending hits the requested share") {
  std::vector<Sample> gen, real;
  for (int i = 0; i < 80; ++i) gen.push_back(mcq_sample("g" + std::to_string(i), BusinessArea::ISC, "q", "A"));
  for (int i = 0; i < 50; ++i) real.push_back(mcq_sample("r" + std::to_string(i), BusinessArea::ISC, "q", "A"));
  const auto mixed = blend_real_queries(gen, real, 0.2, 7);
  CHECK(mixed.size() == 100);
  CHECK(blend_real_queries(gen, real, 0.2, 7).back().id == mixed.back().id);
  CHECK(blend_real_queries(gen, real, 0.0, 7).size() == 80);
  CHECK_THROWS(blend_real_queries(gen, real, 1.0, 7));
}
