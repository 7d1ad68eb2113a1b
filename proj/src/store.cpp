#include "hearth/store.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "hearth/text.hpp"

namespace hearth::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path, Errc code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_all(int fd, std::string_view data, const std::string& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::InputError, path + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

void save_profile(const std::string& path, const UserProfile& profile) {
  if (const auto v = validate_profile(profile); !v.ok()) {
    throw Error(Errc::InputError, "profile " + profile.user_id + ": " + text::join(v.violations, "; "));
  }
  const json j = profile;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::InputError, "cannot write " + tmp);
    out << j.dump(2) << '\n';
    if (!out) throw Error(Errc::InputError, "short write to " + tmp);
  }
  fs::rename(tmp, path);
}

UserProfile load_profile(const std::string& path) {
  const std::string body = read_file(path, Errc::CorruptProfile);
  const auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::CorruptProfile, path + ": not a JSON object");
  UserProfile p;
  try {
    p = j.get<UserProfile>();
  } catch (const std::exception& e) {
    throw Error(Errc::CorruptProfile, path + ": " + e.what());
  }
  if (const auto v = validate_profile(p); !v.ok()) {
    throw Error(Errc::CorruptProfile, path + ": " + text::join(v.violations, "; "));
  }
  return p;
}

EpisodicLog::EpisodicLog(std::string path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(Errc::InputError, path_ + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) throw Error(Errc::LockHeld, path_ + " is held by another writer");
    throw Error(Errc::InputError, path_ + ": " + std::strerror(err));
  }
  try {
    const std::string body = read_file(path_, Errc::InputError);
    if (body.empty()) {
      write_all(fd_, std::string(kEpisodicCsvHeader) + "\n", path_);
      return;
    }
    const auto lines = text::split(body, '\n');
    if (text::trim(lines.front()) != kEpisodicCsvHeader) throw Error(Errc::InputError, path_ + ": unexpected header");
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (text::trim(*it).empty() || it == std::prev(lines.rend())) continue;
      last_ = parse_csv_row(*it).timestamp;
      break;
    }
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

EpisodicLog::~EpisodicLog() {
  if (fd_ >= 0) ::close(fd_);  // closing releases the lock
}

void EpisodicLog::append(const EpisodicRecord& record) {
  if (last_ && record.timestamp < *last_) {
    throw Error(Errc::NonMonotonicTimestamp,
                path_ + ": " + record.timestamp.iso() + " is earlier than " + last_->iso());
  }
  write_all(fd_, to_csv_row(record) + "\n", path_);
  last_ = record.timestamp;
}

std::vector<EpisodicRecord> read_episodic(const std::string& path) {
  const std::string body = read_file(path, Errc::InputError);
  const auto lines = text::split(body, '\n');
  if (lines.empty() || text::trim(lines.front()) != kEpisodicCsvHeader) {
    throw Error(Errc::InputError, path + ": unexpected header");
  }
  std::vector<EpisodicRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    out.push_back(parse_csv_row(lines[i]));
  }
  return out;
}

}  // namespace hearth::store
