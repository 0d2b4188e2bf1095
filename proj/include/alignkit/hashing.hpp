#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace alignkit {

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view data);

/// Stable 64-bit seed derived from a dataset seed and a record key.
std::uint64_t derive_seed(std::uint64_t dataset_seed, std::string_view key);

/// Portable random helpers over mt19937_64, whose output sequence is fixed by
/// the standard. The standard distributions are implementation-defined, so
/// corpora built with them would differ between toolchains.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace alignkit
