#include "mumkit/prompts.hpp"

#include <cctype>
#include <filesystem>

#include "mumkit/error.hpp"
#include "mumkit/text.hpp"

namespace mumkit {

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.detection =
      "You are a content moderator. Decide whether the following statement contains misinformation.\n"
      "Answer with a single word: yes or no.\n\n"
      "Statement: {text}\n";
  t.importance =
      "The following statement was classified as misinformation.\n"
      "List the {count} words from the statement that are most responsible for that classification,\n"
      "most important first. Copy each word exactly as it appears, separated by commas, and nothing else.\n\n"
      "Statement: {text}\n";
  t.reconstruction =
      "The following sentence contains {count} altered words. For each altered token listed below,\n"
      "give the original word it stands for. Answer with one line per token in the form \"N. word\".\n\n"
      "Sentence: {text}\n"
      "Altered tokens:\n{tokens}";
  return t;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  auto t = defaults();
  auto load = [&](const char* name, std::string& slot) {
    fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) slot = read_file(p.string());
  };
  load("detection.txt", t.detection);
  load("importance.txt", t.importance);
  load("reconstruction.txt", t.reconstruction);
  return t;
}

std::string PromptTemplates::hash() const {
  return sha256_hex(detection + "\x1f" + importance + "\x1f" + reconstruction);
}

std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
        ++i;
        continue;
      }
      auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) break;
      out.emplace_back(tmpl.substr(i + 1, close - i - 1));
      i = close;
    }
  }
  return out;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if ((c == '{' || c == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == c) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (c == '{') {
      auto close = tmpl.find('}', i);
      if (close == std::string_view::npos) throw Error(ErrorKind::kConfig, "unterminated placeholder in prompt template");
      std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw Error(ErrorKind::kConfig, "unknown placeholder {" + name + "} in prompt template");
      out += it->second;
      i = close;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

namespace {

std::string strip_edges(std::string_view s) {
  std::size_t b = 0, e = s.size();
  auto junk = [](unsigned char c) { return c < 0x80 && (std::isspace(c) || std::ispunct(c)); };
  while (b < e && junk(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && junk(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_numbering(std::string_view s) {
  auto t = trim(s);
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')' || t[i] == ':')) return trim(std::string_view(t).substr(i + 1));
  if (!t.empty() && (t[0] == '-' || t[0] == '*')) return trim(std::string_view(t).substr(1));
  return t;
}

}  // namespace

std::optional<bool> parse_yes_no(std::string_view response) {
  auto text = casefold(trim(response));
  std::size_t i = 0;
  while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t j = i;
  while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
  auto word = text.substr(i, j - i);
  if (word == "yes" || word == "true") return true;
  if (word == "no" || word == "false") return false;
  return std::nullopt;
}

std::vector<std::string> parse_word_list(std::string_view response) {
  std::vector<std::string> out;
  std::string normalized(response);
  for (auto& c : normalized)
    if (c == '\n' || c == ';') c = ',';
  for (const auto& part : split(normalized, ',')) {
    auto w = strip_edges(strip_numbering(part));
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

std::vector<std::string> parse_numbered_answers(std::string_view response, std::size_t count) {
  std::vector<std::string> out(count);
  std::vector<bool> filled(count, false);
  std::vector<std::string> loose;
  for (const auto& raw : split(response, '\n')) {
    auto line = trim(raw);
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i <= 6 && (i == line.size() || line[i] == '.' || line[i] == ':' || line[i] == ')')) {
      std::size_t n = std::stoul(line.substr(0, i));
      auto answer = i < line.size() ? strip_edges(std::string_view(line).substr(i + 1)) : std::string();
      if (n >= 1 && n <= count && !filled[n - 1]) {
        out[n - 1] = answer;
        filled[n - 1] = true;
      }
      continue;
    }
    loose.push_back(strip_edges(line));
  }
  std::size_t next = 0;
  for (auto& w : loose) {
    while (next < count && filled[next]) ++next;
    if (next >= count) break;
    out[next] = w;
    filled[next] = true;
  }
  return out;
}

}  // namespace mumkit
