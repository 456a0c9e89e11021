#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace mumkit {

/// Content-addressed response store.
///
/// Layout: `<dir>/<key[0:2]>/<key>.json`, each file holding
/// {"key", "evaluator_id", "trial_index", "response"}. Files are written via
/// rename so readers never observe partial entries. An empty directory string
/// keeps the cache in memory only.
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir = {});

  static std::string make_key(const std::string& evaluator_id, const std::string& prompt, double temperature, int trial_index,
                              int attempt = 0, const std::string& context_digest = {});

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& evaluator_id, int trial_index, const std::string& response);

  const std::string& dir() const { return dir_; }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::string path_for(const std::string& key) const;

  std::string dir_;
  mutable std::shared_mutex mu_;
  mutable std::map<std::string, std::string> memory_;
  std::mutex write_mu_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace mumkit
