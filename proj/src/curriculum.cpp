#include "alignkit/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "alignkit/hashing.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

using nlohmann::json;

namespace {

/// Adds `mass` to each bucket in proportion to its count.
void spread_pro_rata(std::map<std::string, double>& weights, const std::vector<const BucketStats*>& group, double mass) {
  double total = 0.0;
  for (const auto* b : group) total += static_cast<double>(b->count);
  for (const auto* b : group) weights[b->bucket_id] += mass * static_cast<double>(b->count) / total;
}

double group_count(const std::vector<const BucketStats*>& group) {
  double total = 0.0;
  for (const auto* b : group) total += static_cast<double>(b->count);
  return total;
}

void check_unique_ids(const std::vector<BucketStats>& stats) {
  std::set<std::string> ids;
  for (const auto& b : stats) {
    if (b.bucket_id.empty()) throw std::invalid_argument("bucket with empty id");
    if (!ids.insert(b.bucket_id).second) throw std::invalid_argument("duplicate bucket id " + b.bucket_id);
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string to_string(BucketCategory c) {
  switch (c) {
    case BucketCategory::general:
      return "general";
    case BucketCategory::domain_simple:
      return "domain_simple";
    case BucketCategory::domain_complex:
      return "domain_complex";
    case BucketCategory::hallucination_mitigation:
      return "hallucination_mitigation";
    case BucketCategory::long_tail:
      return "long_tail";
  }
  return "?";
}

BucketCategory parse_bucket_category(std::string_view s) {
  for (auto c : {BucketCategory::general, BucketCategory::domain_simple, BucketCategory::domain_complex,
                 BucketCategory::hallucination_mitigation, BucketCategory::long_tail}) {
    if (to_string(c) == s) return c;
  }
  throw UnknownEnumValue("bucket category", s);
}

bool is_long_tail(std::size_t count, std::size_t threshold) { return count < threshold; }

std::vector<BucketStats> classify_long_tail(std::vector<BucketStats> stats, std::size_t threshold) {
  for (auto& b : stats) {
    if (b.category != BucketCategory::general && is_long_tail(b.count, threshold)) b.category = BucketCategory::long_tail;
  }
  return stats;
}

std::string to_string(MixtureStage s) { return s == MixtureStage::sft_stage1 ? "sft_stage1" : "sft_stage2"; }

bool MixtureSpec::all_satisfied() const {
  return std::all_of(constraints.begin(), constraints.end(), [](const ConstraintCheck& c) { return c.satisfied; });
}

MixtureSpec compute_stage2_weights(const std::vector<BucketStats>& stats, double boost, const Stage2Targets& targets) {
  if (!(boost >= 1.0)) throw std::invalid_argument("boost must be >= 1");
  if (targets.complex_share < 0 || targets.simple_share < 0 || targets.complex_share + targets.simple_share > 1.0) {
    throw std::invalid_argument("complex and simple shares must be non-negative and sum to at most 1");
  }
  check_unique_ids(stats);

  std::vector<const BucketStats*> general, complex, simple, long_tail, domain;
  for (const auto& b : stats) {
    switch (b.category) {
      case BucketCategory::general:
        general.push_back(&b);
        continue;
      case BucketCategory::domain_simple:
        simple.push_back(&b);
        break;
      case BucketCategory::domain_complex:
      case BucketCategory::hallucination_mitigation:
        complex.push_back(&b);
        break;
      case BucketCategory::long_tail:
        long_tail.push_back(&b);
        break;
    }
    domain.push_back(&b);
  }
  if (group_count(domain) <= 0) throw InfeasibleConstraints("domain_mass", "no domain mass");
  if (group_count(general) <= 0) throw InfeasibleConstraints("general_mass", "no general mass");
  if (group_count(complex) <= 0) throw InfeasibleConstraints("complex_simple_ratio", "no complex mass");
  if (group_count(simple) <= 0) throw InfeasibleConstraints("complex_simple_ratio", "no simple mass");

  const double domain_mass = 1.0 - targets.general_mass;
  const double complex_target = domain_mass * targets.complex_share;
  const double simple_target = domain_mass * targets.simple_share;
  const double residual = domain_mass - complex_target - simple_target;

  std::map<std::string, double> w;
  for (const auto& b : stats) w[b.bucket_id] = 0.0;
  spread_pro_rata(w, general, targets.general_mass);
  spread_pro_rata(w, complex, complex_target);
  spread_pro_rata(w, simple, simple_target);
  if (residual > 0) spread_pro_rata(w, domain, residual);

  for (const auto* b : long_tail) w[b->bucket_id] *= boost;
  double boosted_domain = 0.0;
  for (const auto* b : domain) boosted_domain += w[b->bucket_id];
  for (const auto* b : domain) w[b->bucket_id] *= domain_mass / boosted_domain;

  MixtureSpec spec;
  spec.stage = MixtureStage::sft_stage2;
  spec.weights = std::move(w);

  double sum = 0.0, general_total = 0.0, domain_total = 0.0;
  bool in_range = true;
  for (const auto& b : stats) {
    const double v = spec.weights[b.bucket_id];
    sum += v;
    (b.category == BucketCategory::general ? general_total : domain_total) += v;
    in_range = in_range && v >= 0.0 && v <= 1.0;
  }
  spec.constraints.push_back({"weights_in_unit_interval", in_range, ""});
  spec.constraints.push_back({"weights_sum_to_one", std::fabs(sum - 1.0) <= 1e-9, "sum=" + fmt(sum)});
  spec.constraints.push_back({"general_mass", std::fabs(general_total - targets.general_mass) <= 1e-6,
                              "general=" + fmt(general_total) + " target=" + fmt(targets.general_mass)});
  spec.constraints.push_back({"domain_mass", domain_total >= targets.min_domain_mass,
                              "domain=" + fmt(domain_total) + " min=" + fmt(targets.min_domain_mass)});
  const bool ratio_ok = std::fabs(complex_target * targets.simple_share - simple_target * targets.complex_share) <= 1e-12;
  spec.constraints.push_back({"complex_simple_target_ratio", ratio_ok,
                              "complex_target=" + fmt(complex_target) + " simple_target=" + fmt(simple_target)});
  spec.constraints.push_back({"long_tail_boost", true, "boost=" + fmt(boost)});
  return spec;
}

MixtureSpec compute_stage1_weights(const std::vector<BucketStats>& stats, const Stage1Preset& preset) {
  check_unique_ids(stats);
  std::map<std::string, double> w;
  std::vector<const BucketStats*> unpinned;
  double pinned_total = 0.0;
  for (const auto& b : stats) w[b.bucket_id] = 0.0;
  for (const auto& [id, frac] : preset.pinned) {
    if (w.count(id) == 0) throw InfeasibleConstraints("preset_buckets", "preset pins unknown bucket " + id);
    if (frac < 0 || frac > 1) throw InfeasibleConstraints("preset_fraction", "fraction for " + id + " outside [0,1]");
    w[id] = frac;
    pinned_total += frac;
  }
  if (pinned_total > 1.0 + 1e-12) throw InfeasibleConstraints("preset_fraction", "pinned fractions exceed 1");
  for (const auto& b : stats) {
    if (preset.pinned.count(b.bucket_id) == 0) unpinned.push_back(&b);
  }
  const double rest = 1.0 - pinned_total;
  if (rest > 1e-12) {
    if (group_count(unpinned) <= 0) throw InfeasibleConstraints("weights_sum_to_one", "no unpinned buckets take the rest");
    spread_pro_rata(w, unpinned, rest);
  }
  MixtureSpec spec;
  spec.stage = MixtureStage::sft_stage1;
  spec.weights = std::move(w);
  double sum = 0.0;
  for (const auto& [id, v] : spec.weights) sum += v;
  spec.constraints.push_back({"weights_sum_to_one", std::fabs(sum - 1.0) <= 1e-9, "sum=" + fmt(sum)});
  spec.constraints.push_back({"preset", true, preset.name});
  return spec;
}

std::map<std::string, Stage1Preset> load_stage1_presets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read presets " + path.string());
  const json j = json::parse(in);
  std::map<std::string, Stage1Preset> out;
  for (const auto& [name, pins] : j.at("presets").items()) {
    Stage1Preset p{name, {}};
    for (const auto& [id, frac] : pins.items()) p.pinned[id] = frac.get<double>();
    out[name] = std::move(p);
  }
  return out;
}

std::map<std::string, std::size_t> sample_batch(const MixtureSpec& spec, const std::vector<BucketStats>& stats,
                                                std::size_t batch_size, std::uint64_t seed) {
  std::map<std::string, std::size_t> counts;
  if (batch_size == 0) return counts;
  std::map<std::string, std::size_t> available;
  for (const auto& b : stats) available[b.bucket_id] = b.count;

  std::vector<std::string> ids;
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& [id, weight] : spec.weights) {
    const auto it = available.find(id);
    if (weight <= 0.0 || it == available.end() || it->second == 0) continue;
    total += weight;
    ids.push_back(id);
    cumulative.push_back(total);
  }
  if (ids.empty()) throw InfeasibleConstraints("sample_batch", "no weighted bucket has records");

  SeededRng rng(seed);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double u = rng.uniform() * total;
    auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    pos = std::min(pos, ids.size() - 1);
    ++counts[ids[pos]];
  }
  return counts;
}

ScreenDecision screen_general_sample(const Sample& s, const ScreenConfig& cfg) {
  const Message* instruction = nullptr;
  for (auto it = s.messages.rbegin(); it != s.messages.rend(); ++it) {
    if (it->role == Role::user) {
      instruction = &*it;
      break;
    }
  }
  if (instruction == nullptr) return {false, "no instruction"};
  const std::size_t len = text::char_length(instruction->content);
  if (len < cfg.min_chars) return {false, "too short"};
  if (len > cfg.max_chars) return {false, "too long"};
  if (s.think && text::char_length(*s.think) > cfg.think_cap) return {false, "long CoT"};
  return {true, "ok"};
}

TierPlan tier_sequence(const std::vector<TierAssignment>& assignments) {
  const auto& names = tier_names();
  std::set<std::string> seen;
  for (const auto& a : assignments) {
    if (std::find(names.begin(), names.end(), a.tier) == names.end()) {
      throw TierError(TierError::Code::unknown_tier_name, "unknown tier '" + a.tier + "' for bucket " + a.bucket_id);
    }
    if (!seen.insert(a.bucket_id).second) {
      throw TierError(TierError::Code::duplicate_assignment, "bucket " + a.bucket_id + " is assigned more than once");
    }
  }
  TierPlan plan;
  for (const auto& name : names) {
    std::vector<const TierAssignment*> members;
    for (const auto& a : assignments) {
      if (a.tier == name) members.push_back(&a);
    }
    std::stable_sort(members.begin(), members.end(),
                     [](const TierAssignment* x, const TierAssignment* y) { return x->difficulty < y->difficulty; });
    Tier tier{name, {}};
    for (const auto* m : members) tier.bucket_ids.push_back(m->bucket_id);
    plan.tiers.push_back(std::move(tier));
  }
  return plan;
}

json mixture_to_json(const MixtureSpec& spec) {
  json weights = json::array();
  for (const auto& [id, w] : spec.weights) weights.push_back({{"bucket_id", id}, {"weight", w}});
  json checks = json::array();
  for (const auto& c : spec.constraints) {
    checks.push_back({{"name", c.name}, {"satisfied", c.satisfied}, {"detail", c.detail}});
  }
  return {{"stage", to_string(spec.stage)}, {"weights", weights}, {"constraints", checks}};
}

MixtureSpec mixture_from_json(const json& j) {
  MixtureSpec spec;
  const std::string stage = j.at("stage").get<std::string>();
  if (stage == "sft_stage1") {
    spec.stage = MixtureStage::sft_stage1;
  } else if (stage == "sft_stage2") {
    spec.stage = MixtureStage::sft_stage2;
  } else {
    throw UnknownEnumValue("stage", stage);
  }
  for (const auto& w : j.at("weights")) spec.weights[w.at("bucket_id").get<std::string>()] = w.at("weight").get<double>();
  for (const auto& c : j.value("constraints", json::array())) {
    spec.constraints.push_back({c.at("name").get<std::string>(), c.at("satisfied").get<bool>(), c.value("detail", "")});
  }
  return spec;
}

std::vector<BucketStats> load_bucket_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read bucket stats " + path.string());
  const json j = json::parse(in);
  std::vector<BucketStats> out;
  for (const auto& b : j) {
    out.push_back({b.at("bucket_id").get<std::string>(), parse_bucket_category(b.at("category").get<std::string>()),
                   b.at("count").get<std::size_t>()});
  }
  return out;
}

}  // namespace alignkit
