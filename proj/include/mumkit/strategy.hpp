#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace mumkit {

enum class Strategy {
  kUnknownSpelling,  // altered spelling yielding a non-word
  kNewWordSpelling,  // altered spelling yielding an existing word
  kAbbreviation,
  kPictorial,        // emoji / emoticons
  kParaphrase,
  kCodeWord,         // repurposed words
  kPhonetic,
};

inline constexpr std::array<Strategy, 7> kAllStrategies = {
    Strategy::kUnknownSpelling, Strategy::kNewWordSpelling, Strategy::kAbbreviation, Strategy::kPictorial,
    Strategy::kParaphrase,      Strategy::kCodeWord,        Strategy::kPhonetic,
};

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

/// Stable machine key, also the lexicon section name ("code_word").
std::string_view key(Strategy s);
/// Row label used in rendered tables ("Code").
std::string_view display_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view key);
std::size_t index_of(Strategy s);

enum class Task { kDetection, kUnderstanding };

std::string_view key(Task t);
std::optional<Task> parse_task(std::string_view key);

}  // namespace mumkit
