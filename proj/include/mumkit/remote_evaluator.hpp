#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <string>

#include "mumkit/evaluator.hpp"

namespace mumkit {

struct EndpointUrl {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string path;
};

EndpointUrl parse_endpoint(const std::string& url);

/// Chat-completions client: POSTs {"model", "messages", "temperature"} and
/// reads choices[0].message.content. The bearer token comes from the
/// environment variable named by api_key_env. Failed requests are retried
/// with exponential backoff up to max_retries times; concurrent requests are
/// capped at max_in_flight and spaced by min_interval_ms per endpoint.
class RemoteEvaluator : public Backend {
 public:
  explicit RemoteEvaluator(EvaluatorConfig config);
  ~RemoteEvaluator() override;

  std::string complete(const Query& query) override;
  bool offline() const override { return false; }

  static std::string build_request_body(const EvaluatorConfig& config, const std::string& prompt);
  /// Extracts the reply text; throws Error(kTransport) on unexpected shapes.
  static std::string parse_response_body(const std::string& body);

 private:
  std::string post_once(const std::string& body);
  void log_exchange(const std::string& request, int status, const std::string& response);
  void acquire();
  void release();

  EvaluatorConfig config_;
  EndpointUrl url_;
  std::string api_key_;
  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
  std::mutex log_mu_;
};

/// Builds the backend named by config.endpoint.
std::unique_ptr<Backend> make_backend(const EvaluatorConfig& config, std::shared_ptr<const Lexicon> lexicon);

}  // namespace mumkit
