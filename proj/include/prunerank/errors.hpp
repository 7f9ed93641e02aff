#pragma once

#include <stdexcept>
#include <string>

namespace prunerank {

// Base class for all engine errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// segmenter
struct InconsistentSpans final : Error { using Error::Error; };

// scorer
struct EmptyPassage final : Error { using Error::Error; };
struct RemoteUnavailable final : Error { using Error::Error; };
struct MalformedResponse final : Error { using Error::Error; };
struct ModelLoadError final : Error { using Error::Error; };

// pruner
struct EmptyBatch final : Error { using Error::Error; };

// labeler
struct IndexMismatch final : Error { using Error::Error; };
struct ClientUnavailable final : Error { using Error::Error; };
struct PromptTooLong final : Error { using Error::Error; };
struct TranslationShapeError final : Error { using Error::Error; };

// trainer
struct EmptyExample final : Error { using Error::Error; };
struct EmptyDataset final : Error { using Error::Error; };

// evaluator
struct UnknownLabel final : Error { using Error::Error; };
struct EmptyRelevantSet final : Error { using Error::Error; };

// files / service / config
struct BindError final : Error { using Error::Error; };
struct ConfigError final : Error { using Error::Error; };

// Parse failure in a line-oriented input; carries the 1-based line number.
struct ParseError final : Error {
  size_t line;
  ParseError(size_t line_no, const std::string& msg)
      : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

}  // namespace prunerank
