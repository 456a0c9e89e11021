#include "mumkit/strategy.hpp"

namespace mumkit {

std::string_view key(Strategy s) {
  switch (s) {
    case Strategy::kUnknownSpelling: return "unknown_spelling";
    case Strategy::kNewWordSpelling: return "new_word_spelling";
    case Strategy::kAbbreviation: return "abbreviation";
    case Strategy::kPictorial: return "pictorial";
    case Strategy::kParaphrase: return "paraphrase";
    case Strategy::kCodeWord: return "code_word";
    case Strategy::kPhonetic: return "phonetic";
  }
  return "";
}

std::string_view display_name(Strategy s) {
  switch (s) {
    case Strategy::kUnknownSpelling: return "Unkn. word";
    case Strategy::kNewWordSpelling: return "New word";
    case Strategy::kAbbreviation: return "Abbreviations";
    case Strategy::kPictorial: return "Emoticons";
    case Strategy::kParaphrase: return "Paraphrasing";
    case Strategy::kCodeWord: return "Code";
    case Strategy::kPhonetic: return "Phonetic";
  }
  return "";
}

std::optional<Strategy> parse_strategy(std::string_view k) {
  for (auto s : kAllStrategies)
    if (key(s) == k) return s;
  return std::nullopt;
}

std::size_t index_of(Strategy s) { return static_cast<std::size_t>(s); }

std::string_view key(Task t) { return t == Task::kDetection ? "detection" : "understanding"; }

std::optional<Task> parse_task(std::string_view k) {
  if (k == "detection" || k == "detect") return Task::kDetection;
  if (k == "understanding" || k == "understand") return Task::kUnderstanding;
  return std::nullopt;
}

}  // namespace mumkit
