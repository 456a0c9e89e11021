#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mumkit {

/// Prompt text with `{name}` placeholders. Placeholders used: detection
/// {text}; importance {text}, {count}; reconstruction {text}, {tokens}, {count}.
struct PromptTemplates {
  std::string detection;
  std::string importance;
  std::string reconstruction;

  static PromptTemplates defaults();
  /// Reads "<dir>/detection.txt" etc.; missing files keep the default.
  static PromptTemplates load_dir(const std::string& dir);
  std::string hash() const;
};

/// Substitutes `{name}` placeholders. Unknown placeholders raise a config
/// error; "{{" and "}}" are literal braces.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Placeholder names referenced by a template.
std::vector<std::string> placeholders(std::string_view tmpl);

enum class DetectVerdict { kNo, kYes, kAbstain };

/// Strict yes/no reading of a detection reply. nullopt when unparseable.
std::optional<bool> parse_yes_no(std::string_view response);

/// Splits a list reply on commas/newlines, stripping numbering, quotes and
/// surrounding punctuation.
std::vector<std::string> parse_word_list(std::string_view response);

/// Reads "N. word" / "N: word" / "N) word" lines into `count` slots; missing
/// answers stay empty. Unnumbered lines fill remaining slots in order.
std::vector<std::string> parse_numbered_answers(std::string_view response, std::size_t count);

}  // namespace mumkit
