#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignkit/datamodel.hpp"

namespace alignkit {

enum class BucketCategory { general, domain_simple, domain_complex, hallucination_mitigation, long_tail };

std::string to_string(BucketCategory c);
BucketCategory parse_bucket_category(std::string_view s);

struct BucketStats {
  std::string bucket_id;
  BucketCategory category = BucketCategory::general;
  std::size_t count = 0;
};

inline constexpr std::size_t kDefaultLongTailThreshold = 1000;

bool is_long_tail(std::size_t count, std::size_t threshold = kDefaultLongTailThreshold);

/// Reassigns domain buckets below the threshold to long_tail. General
/// buckets keep their category.
std::vector<BucketStats> classify_long_tail(std::vector<BucketStats> stats,
                                            std::size_t threshold = kDefaultLongTailThreshold);

enum class MixtureStage { sft_stage1, sft_stage2 };

std::string to_string(MixtureStage s);

struct ConstraintCheck {
  std::string name;
  bool satisfied = false;
  std::string detail;
};

struct MixtureSpec {
  MixtureStage stage = MixtureStage::sft_stage2;
  /// Ordered by bucket id.
  std::map<std::string, double> weights;
  std::vector<ConstraintCheck> constraints;

  bool all_satisfied() const;
};

/// Targets for the annealing stage. Non-general mass is split so that
/// `complex_share` and `simple_share` of it are pinned to the complex
/// (domain_complex plus hallucination_mitigation) and domain_simple groups;
/// the rest flows pro-rata by count over every non-general bucket.
struct Stage2Targets {
  double general_mass = 0.25;
  double min_domain_mass = 0.30;
  double complex_share = 0.50;
  double simple_share = 0.30;
};

class InfeasibleConstraints : public std::runtime_error {
 public:
  InfeasibleConstraints(std::string check, const std::string& detail)
      : std::runtime_error(check + ": " + detail), check_(std::move(check)) {}
  const std::string& check() const { return check_; }

 private:
  std::string check_;
};

/// Annealing mixture with long-tail boosting. Boosted long-tail weights are
/// renormalized inside the non-general mass so the general share stays fixed.
MixtureSpec compute_stage2_weights(const std::vector<BucketStats>& stats, double boost,
                                   const Stage2Targets& targets = {});

/// Constant-mix preset: pinned fractions per bucket, remainder pro-rata by
/// count over unpinned buckets.
struct Stage1Preset {
  std::string name;
  std::map<std::string, double> pinned;
};

MixtureSpec compute_stage1_weights(const std::vector<BucketStats>& stats, const Stage1Preset& preset);

/// Presets keyed by name from {"presets": {name: {bucket_id: fraction}}}.
std::map<std::string, Stage1Preset> load_stage1_presets(const std::filesystem::path& path);

/// Seeded multinomial draw. Buckets with no records get no draws and their
/// mass is spread over the rest. batch_size 0 gives an empty result.
std::map<std::string, std::size_t> sample_batch(const MixtureSpec& spec, const std::vector<BucketStats>& stats,
                                                std::size_t batch_size, std::uint64_t seed);

struct ScreenConfig {
  std::size_t min_chars = 50;
  std::size_t max_chars = 2000;
  std::size_t think_cap = 4000;
};

struct ScreenDecision {
  bool keep = false;
  std::string reason;
};

/// Keeps medium-length instructions without overlong reasoning. Lengths are
/// in code points; the instruction is the last user turn.
ScreenDecision screen_general_sample(const Sample& s, const ScreenConfig& cfg = {});

inline const std::vector<std::string>& tier_names() {
  static const std::vector<std::string> names{"knowledge_consolidation", "complex_reasoning", "alignment_robustness"};
  return names;
}

struct TierAssignment {
  std::string bucket_id;
  std::string tier;
  double difficulty = 0.0;
};

struct Tier {
  std::string name;
  std::vector<std::string> bucket_ids;
};

struct TierPlan {
  std::vector<Tier> tiers;
};

class TierError : public std::invalid_argument {
 public:
  enum class Code { unknown_tier_name, duplicate_assignment };

  TierError(Code code, const std::string& what) : std::invalid_argument(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Three tiers in fixed order; buckets inside a tier by ascending difficulty,
/// ties kept in input order.
TierPlan tier_sequence(const std::vector<TierAssignment>& assignments);

nlohmann::json mixture_to_json(const MixtureSpec& spec);
MixtureSpec mixture_from_json(const nlohmann::json& j);

/// JSON array of {bucket_id, category, count}.
std::vector<BucketStats> load_bucket_stats(const std::filesystem::path& path);

}  // namespace alignkit
