#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "hearth/core.hpp"

namespace test_support {

inline hearth::ScenarioEntry make_entry(hearth::Archetype archetype = hearth::Archetype::TypicalAdult,
                                        hearth::Category category = hearth::Category::DailyTasks) {
  hearth::ScenarioEntry e;
  e.id = "e-1";
  e.archetype = archetype;
  e.age = hearth::age_band(archetype).min_age + 2;
  e.category = category;
  e.urgency = category == hearth::Category::Emergencies ? hearth::Urgency::Emergency : hearth::Urgency::Low;
  e.query = "How do I set a reminder for my shopping list today?";
  e.expected_response = "You can set a reminder for your shopping list in the app today.";
  return e;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hearth-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// A loopback port that was free a moment ago and has nothing listening on it.
inline int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace test_support
