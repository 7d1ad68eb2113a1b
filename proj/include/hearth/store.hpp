#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hearth/core.hpp"

namespace hearth::store {

// Pretty-printed JSON, written to a temp file and renamed into place.
// Throws Error(InputError) when the profile fails validation.
void save_profile(const std::string& path, const UserProfile& profile);
// Throws Error(CorruptProfile) on unreadable, malformed or invalid files.
UserProfile load_profile(const std::string& path);

// Append-only episodic CSV log guarded by an exclusive advisory lock.
// Each record goes out in a single O_APPEND write so a crash never leaves a
// half-written row behind another one.
class EpisodicLog {
 public:
  // Throws Error(LockHeld) when another writer holds the file and
  // Error(InputError) when it cannot be opened or its tail is unreadable.
  explicit EpisodicLog(std::string path);
  ~EpisodicLog();
  EpisodicLog(const EpisodicLog&) = delete;
  EpisodicLog& operator=(const EpisodicLog&) = delete;

  // Throws Error(NonMonotonicTimestamp) when the record is older than the
  // last one in the file.
  void append(const EpisodicRecord& record);

  const std::string& path() const { return path_; }
  std::optional<SimTime> last_timestamp() const { return last_; }

 private:
  std::string path_;
  int fd_ = -1;
  std::optional<SimTime> last_;
};

// Reads every row; throws Error(InputError) on a bad header or row.
std::vector<EpisodicRecord> read_episodic(const std::string& path);

}  // namespace hearth::store
