#include "mumkit/cache.hpp"

#include <filesystem>

#include <json.hpp>

#include "mumkit/text.hpp"

namespace mumkit {

using json = nlohmann::json;

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string ResponseCache::make_key(const std::string& evaluator_id, const std::string& prompt, double temperature, int trial_index,
                                    int attempt, const std::string& context_digest) {
  std::string material = evaluator_id + "\x1f" + prompt + "\x1f" + fixed(temperature, 6) + "\x1f" + std::to_string(trial_index);
  if (attempt > 0) material += "\x1f" "retry" + std::to_string(attempt);
  if (!context_digest.empty()) material += "\x1f" + context_digest;
  return sha256_hex(material);
}

std::string ResponseCache::path_for(const std::string& key) const {
  return (std::filesystem::path(dir_) / key.substr(0, 2) / (key + ".json")).string();
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  {
    std::shared_lock lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++hits_;
      return it->second;
    }
  }
  if (!dir_.empty()) {
    auto path = path_for(key);
    if (std::filesystem::exists(path)) {
      auto j = json::parse(read_file(path), nullptr, false);
      if (!j.is_discarded() && j.contains("response")) {
        auto response = j["response"].get<std::string>();
        std::unique_lock lock(mu_);
        memory_.emplace(key, response);
        ++hits_;
        return response;
      }
    }
  }
  ++misses_;
  return std::nullopt;
}

void ResponseCache::put(const std::string& key, const std::string& evaluator_id, int trial_index, const std::string& response) {
  {
    std::unique_lock lock(mu_);
    memory_[key] = response;
  }
  if (dir_.empty()) return;
  std::lock_guard lock(write_mu_);
  json j = {{"key", key}, {"evaluator_id", evaluator_id}, {"trial_index", trial_index}, {"response", response}};
  write_file_atomic(path_for(key), j.dump(2) + "\n");
}

}  // namespace mumkit
