#include "mumkit/remote_evaluator.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mumkit/error.hpp"
#include "mumkit/mock_evaluator.hpp"

namespace mumkit {

using json = nlohmann::json;

namespace {

struct RetryableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Last request time per endpoint, shared by every client in the process.
std::mutex g_pace_mu;
std::map<std::string, std::chrono::steady_clock::time_point> g_last_request;

void pace(const std::string& endpoint, int min_interval_ms) {
  if (min_interval_ms <= 0) return;
  std::chrono::steady_clock::time_point wait_until;
  {
    std::lock_guard lock(g_pace_mu);
    auto now = std::chrono::steady_clock::now();
    auto& last = g_last_request[endpoint];
    auto earliest = last + std::chrono::milliseconds(min_interval_ms);
    wait_until = std::max(now, earliest);
    last = wait_until;
  }
  std::this_thread::sleep_until(wait_until);
}

}  // namespace

EndpointUrl parse_endpoint(const std::string& url) {
  EndpointUrl u;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::kConfig, "endpoint '" + url + "' is not a URL");
  u.scheme = url.substr(0, scheme_end);
  if (u.scheme != "http" && u.scheme != "https") throw Error(ErrorKind::kConfig, "endpoint '" + url + "' must be http or https");
  auto rest = url.substr(scheme_end + 3);
  auto slash = rest.find('/');
  auto authority = rest.substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    u.host = authority.substr(0, colon);
    try {
      u.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kConfig, "endpoint '" + url + "' has a bad port");
    }
  } else {
    u.host = authority;
    u.port = u.scheme == "https" ? 443 : 80;
  }
  if (u.host.empty()) throw Error(ErrorKind::kConfig, "endpoint '" + url + "' has no host");
  return u;
}

RemoteEvaluator::RemoteEvaluator(EvaluatorConfig config) : config_(std::move(config)), url_(parse_endpoint(config_.endpoint)) {
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
  if (config_.model.empty()) config_.model = config_.evaluator_id;
}

RemoteEvaluator::~RemoteEvaluator() = default;

std::string RemoteEvaluator::build_request_body(const EvaluatorConfig& config, const std::string& prompt) {
  json body = {{"model", config.model.empty() ? config.evaluator_id : config.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", config.temperature}};
  return body.dump();
}

std::string RemoteEvaluator::parse_response_body(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kTransport, "endpoint returned non-JSON body");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kTransport, std::string("unexpected completion shape: ") + e.what());
  }
}

void RemoteEvaluator::acquire() {
  std::unique_lock lock(slot_mu_);
  auto limit = std::max<std::size_t>(config_.max_in_flight, 1);
  slot_cv_.wait(lock, [&] { return in_flight_ < limit; });
  ++in_flight_;
}

void RemoteEvaluator::release() {
  {
    std::lock_guard lock(slot_mu_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

void RemoteEvaluator::log_exchange(const std::string& request, int status, const std::string& response) {
  if (config_.request_log.empty()) return;
  json entry = {{"evaluator_id", config_.evaluator_id},
                {"url", config_.endpoint},
                {"authorization", api_key_.empty() ? "none" : "Bearer ***"},
                {"request", request},
                {"status", status},
                {"response", response}};
  std::lock_guard lock(log_mu_);
  std::ofstream out(config_.request_log, std::ios::app);
  out << entry.dump() << "\n";
}

std::string RemoteEvaluator::post_once(const std::string& body) {
  std::string base = url_.scheme + "://" + url_.host + ":" + std::to_string(url_.port);
  httplib::Client client(base);
  client.set_connection_timeout(config_.timeout_s, 0);
  client.set_read_timeout(config_.timeout_s, 0);
  client.set_write_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  pace(config_.endpoint, config_.min_interval_ms);
  auto res = client.Post(url_.path, headers, body, "application/json");
  if (!res) {
    log_exchange(body, 0, httplib::to_string(res.error()));
    throw RetryableError("request failed: " + httplib::to_string(res.error()));
  }
  log_exchange(body, res->status, res->body);
  if (res->status == 429 || res->status >= 500) throw RetryableError("HTTP " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorKind::kTransport, "evaluator '" + config_.evaluator_id + "' HTTP " + std::to_string(res->status));
  return parse_response_body(res->body);
}

std::string RemoteEvaluator::complete(const Query& query) {
  auto body = build_request_body(config_, query.prompt);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms << (attempt - 1)));
    acquire();
    try {
      auto out = post_once(body);
      release();
      return out;
    } catch (const RetryableError& e) {
      release();
      last_error = e.what();
    } catch (...) {
      release();
      throw;
    }
  }
  throw Error(ErrorKind::kTransport, "evaluator '" + config_.evaluator_id + "' unreachable after " +
                                         std::to_string(config_.max_retries + 1) + " attempt(s): " + last_error);
}

std::unique_ptr<Backend> make_backend(const EvaluatorConfig& config, std::shared_ptr<const Lexicon> lexicon) {
  if (config.is_mock()) return std::make_unique<MockEvaluator>(config.mock, std::move(lexicon));
  return std::make_unique<RemoteEvaluator>(config);
}

}  // namespace mumkit
