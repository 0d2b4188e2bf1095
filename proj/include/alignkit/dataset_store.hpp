#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignkit/datamodel.hpp"

namespace alignkit {

class InvalidRecord : public std::runtime_error {
 public:
  InvalidRecord(std::vector<std::string> ids, const std::string& detail);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class StorageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetManifest {
  std::filesystem::path path;
  std::map<std::string, std::size_t> bucket_counts;
  std::map<std::string, std::size_t> area_counts;
  std::size_t total = 0;
  /// SHA-256 of the dataset file bytes.
  std::string checksum;
};

enum class TaxonomyAxis { business_area, format, difficulty, cognition };

/// Sidecar location: "<dataset>.manifest".
std::filesystem::path manifest_path(const std::filesystem::path& dataset);

/// Builds the manifest by scanning the dataset file. A missing file is an
/// empty dataset.
DatasetManifest open_dataset(const std::filesystem::path& dataset);

/// Validates the whole batch, then appends it under an exclusive advisory
/// lock. Either every record is written or the file is left untouched. The
/// sidecar manifest is rewritten after a successful append.
DatasetManifest append_records(const DatasetManifest& manifest, const std::vector<Sample>& records);

std::vector<Sample> read_records(const std::filesystem::path& dataset);

/// Partitions record ids by the label they carry on the given axis.
std::map<std::string, std::vector<std::string>> stratify(const DatasetManifest& manifest, TaxonomyAxis axis);

nlohmann::json manifest_to_json(const DatasetManifest& m);

}  // namespace alignkit
