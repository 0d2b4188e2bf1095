#include "alignkit/dataset_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "alignkit/hashing.hpp"

namespace alignkit {

namespace fs = std::filesystem;

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id.empty() ? "<empty>" : id;
  }
  return out;
}

std::string errno_text() { return std::strerror(errno); }

/// Exclusive flock held for the lifetime of the object.
class LockedFile {
 public:
  explicit LockedFile(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StorageFailure("cannot open " + path.string() + ": " + errno_text());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw StorageFailure("cannot lock " + path.string() + ": " + errno_text());
    }
  }
  LockedFile(const LockedFile&) = delete;
  LockedFile& operator=(const LockedFile&) = delete;
  ~LockedFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Sample> parse_records(const std::string& bytes, const fs::path& path) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  std::istringstream in(bytes);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_jsonl_line(line));
    } catch (const std::exception& e) {
      throw StorageFailure(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

DatasetManifest build_manifest(const fs::path& path, const std::string& bytes, const std::vector<Sample>& records) {
  DatasetManifest m;
  m.path = path;
  m.total = records.size();
  for (const auto& s : records) {
    ++m.bucket_counts[to_string(s.bucket)];
    ++m.area_counts[to_string(s.business_area)];
  }
  m.checksum = sha256_hex(bytes);
  return m;
}

void write_all(int fd, const std::string& data) {
  std::size_t written = 0;
  while (written < data.size()) {
    const auto n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageFailure("write failed: " + errno_text());
    }
    written += static_cast<std::size_t>(n);
  }
}

void write_manifest_sidecar(const DatasetManifest& m) {
  const fs::path target = manifest_path(m.path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageFailure("cannot write " + tmp.string());
    out << manifest_to_json(m).dump(2) << '\n';
    if (!out) throw StorageFailure("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw StorageFailure("cannot replace " + target.string() + ": " + ec.message());
}

std::string label_of(const Sample& s, TaxonomyAxis axis) {
  switch (axis) {
    case TaxonomyAxis::business_area:
      return to_string(s.business_area);
    case TaxonomyAxis::format:
      return to_string(s.format);
    case TaxonomyAxis::difficulty:
      return to_string(s.difficulty);
    case TaxonomyAxis::cognition:
      return s.cognition;
  }
  return {};
}

}  // namespace

InvalidRecord::InvalidRecord(std::vector<std::string> ids, const std::string& detail)
    : std::runtime_error("invalid records [" + join_ids(ids) + "]: " + detail), ids_(std::move(ids)) {}

fs::path manifest_path(const fs::path& dataset) { return fs::path(dataset.string() + ".manifest"); }

DatasetManifest open_dataset(const fs::path& dataset) {
  const std::string bytes = read_file_bytes(dataset);
  return build_manifest(dataset, bytes, parse_records(bytes, dataset));
}

DatasetManifest append_records(const DatasetManifest& manifest, const std::vector<Sample>& records) {
  std::vector<std::string> bad;
  std::string detail;
  std::set<std::string> batch_ids;
  for (const auto& s : records) {
    const auto v = validate_sample(s);
    if (!v.ok()) {
      bad.push_back(s.id);
      if (detail.empty()) detail = v.violations.front();
    } else if (!batch_ids.insert(s.id).second) {
      bad.push_back(s.id);
      if (detail.empty()) detail = "duplicate id in batch";
    }
  }
  if (!bad.empty()) throw InvalidRecord(bad, detail);

  LockedFile file(manifest.path);
  std::string existing = read_file_bytes(manifest.path);
  std::vector<Sample> all = parse_records(existing, manifest.path);
  for (const auto& s : all) {
    if (batch_ids.count(s.id) != 0) bad.push_back(s.id);
  }
  if (!bad.empty()) throw InvalidRecord(bad, "id already present in dataset");

  std::string payload;
  if (!existing.empty() && existing.back() != '\n') payload.push_back('\n');
  for (const auto& s : records) {
    payload += to_jsonl_line(s);
    payload.push_back('\n');
  }

  const off_t original_size = static_cast<off_t>(existing.size());
  try {
    write_all(file.fd(), payload);
    if (::fsync(file.fd()) != 0) throw StorageFailure("fsync failed: " + errno_text());
  } catch (...) {
    // Roll back a partial write so the call stays all-or-nothing.
    if (::ftruncate(file.fd(), original_size) != 0) {
      throw StorageFailure("append failed and rollback failed for " + manifest.path.string());
    }
    throw;
  }

  existing += payload;
  all.insert(all.end(), records.begin(), records.end());
  DatasetManifest updated = build_manifest(manifest.path, existing, all);
  write_manifest_sidecar(updated);
  return updated;
}

std::vector<Sample> read_records(const fs::path& dataset) { return parse_records(read_file_bytes(dataset), dataset); }

std::map<std::string, std::vector<std::string>> stratify(const DatasetManifest& manifest, TaxonomyAxis axis) {
  std::map<std::string, std::vector<std::string>> parts;
  for (const auto& s : read_records(manifest.path)) parts[label_of(s, axis)].push_back(s.id);
  return parts;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  return {{"path", m.path.string()},
          {"total", m.total},
          {"bucket_counts", m.bucket_counts},
          {"area_counts", m.area_counts},
          {"checksum", m.checksum}};
}

}  // namespace alignkit
