#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prunerank {

// Text generation backend used for dataset annotation.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string generate(const std::string& prompt, int max_tokens) = 0;
};

// Client for an endpoint speaking POST /v1/generate. Failures raise
// ClientUnavailable.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(std::string base_url, int timeout_ms = 30000);
  std::string generate(const std::string& prompt, int max_tokens) override;

 private:
  std::string base_url_;
  int timeout_ms_;
};

// Sentence-level machine translation backend; replies are expected to be
// count-preserving, which the caller verifies.
class TranslatorClient {
 public:
  virtual ~TranslatorClient() = default;
  virtual std::vector<std::string> translate(const std::vector<std::string>& sentences,
                                             std::string_view target_language) = 0;
};

// Client for an endpoint speaking POST /v1/translate. Failures raise
// ClientUnavailable.
class HttpTranslatorClient final : public TranslatorClient {
 public:
  explicit HttpTranslatorClient(std::string base_url, int timeout_ms = 30000);
  std::vector<std::string> translate(const std::vector<std::string>& sentences,
                                     std::string_view target_language) override;

 private:
  std::string base_url_;
  int timeout_ms_;
};

}  // namespace prunerank
