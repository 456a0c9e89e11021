#include "mumkit/lexicon.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "mumkit/error.hpp"

namespace mumkit {

namespace {

constexpr std::size_t kMaxInverseCandidates = 4096;

bool default_fallback(Strategy s) { return s == Strategy::kUnknownSpelling || s == Strategy::kPhonetic; }

struct MatchSite {
  std::size_t pos;
  std::size_t rule;
};

bool rule_matches(const RewriteRule& r, std::string_view w, std::size_t i) {
  if (r.pattern.empty() || w.compare(i, r.pattern.size(), r.pattern) != 0) return false;
  if (r.word_initial && i != 0) return false;
  if (r.word_final && i + r.pattern.size() != w.size()) return false;
  return true;
}

std::vector<MatchSite> match_sites(const std::vector<RewriteRule>& rules, std::string_view w) {
  std::vector<MatchSite> sites;
  std::size_t i = 0;
  while (i < w.size()) {
    bool hit = false;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (rule_matches(rules[r], w, i)) {
        sites.push_back({i, r});
        i += rules[r].pattern.size();
        hit = true;
        break;
      }
    }
    if (!hit) ++i;
  }
  return sites;
}

RewriteRule parse_rule(const std::string& lhs, const std::string& rhs) {
  RewriteRule r;
  std::string p = lhs;
  if (!p.empty() && p.front() == '^') {
    r.word_initial = true;
    p.erase(0, 1);
  }
  if (!p.empty() && p.back() == '$') {
    r.word_final = true;
    p.pop_back();
  }
  r.pattern = casefold(p);
  r.replacement = rhs;
  return r;
}

std::string rule_text(const RewriteRule& r) {
  return (r.word_initial ? "^" : "") + r.pattern + (r.word_final ? "$" : "") + " -> " + r.replacement;
}

}  // namespace

std::string apply_rules(const std::vector<RewriteRule>& rules, RuleMode mode, std::string_view word, DrawStream& draws) {
  std::string w = casefold(word);
  auto sites = match_sites(rules, w);
  std::vector<bool> chosen(sites.size(), mode == RuleMode::kAll);
  if (mode == RuleMode::kSampleHalf && !sites.empty()) {
    std::size_t len = utf8_decode(w).size();
    std::size_t budget = std::min(sites.size(), (len + 1) / 2);
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < budget; ++i) {
      std::size_t j = i + draws.below(order.size() - i);
      std::swap(order[i], order[j]);
      chosen[order[i]] = true;
    }
  }
  std::string out;
  std::size_t i = 0;
  for (std::size_t s = 0; s < sites.size(); ++s) {
    out.append(w, i, sites[s].pos - i);
    const auto& rule = rules[sites[s].rule];
    out += chosen[s] ? rule.replacement : rule.pattern;
    i = sites[s].pos + rule.pattern.size();
  }
  out.append(w, i, std::string::npos);
  return out;
}

Lexicon Lexicon::parse(std::string_view content, const std::string& source_name) {
  Lexicon lex;
  for (auto s : kAllStrategies) lex.sections_[index_of(s)].rule_fallback = default_fallback(s);
  lex.sections_[index_of(Strategy::kUnknownSpelling)].mode = RuleMode::kSampleHalf;

  enum class Kind { kNone, kDict, kRules, kFallback } kind = Kind::kNone;
  StrategySection* current = nullptr;
  auto fail = [&](std::size_t line, const std::string& msg) {
    throw Error(ErrorKind::kParse, source_name + ":" + std::to_string(line) + ": " + msg);
  };

  std::size_t line_no = 0;
  for (const auto& raw : split(content, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name == "fallback") {
        kind = Kind::kFallback;
        current = nullptr;
        continue;
      }
      bool rules = false;
      if (name.size() > 6 && name.ends_with(".rules")) {
        rules = true;
        name.resize(name.size() - 6);
      }
      auto strategy = parse_strategy(name);
      if (!strategy) fail(line_no, "unknown strategy section '" + name + "'");
      current = &lex.sections_[index_of(*strategy)];
      current->present = true;
      kind = rules ? Kind::kRules : Kind::kDict;
      continue;
    }
    switch (kind) {
      case Kind::kNone:
        fail(line_no, "entry outside of a section");
        break;
      case Kind::kDict: {
        auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'original = replacement'");
        std::string lhs = casefold(trim(std::string_view(line).substr(0, eq)));
        std::string rhs = trim(std::string_view(line).substr(eq + 1));
        if (lhs.empty() || rhs.empty()) fail(line_no, "empty original or replacement");
        DictEntry entry;
        if (rhs.ends_with("[audited]")) {
          entry.audited = true;
          rhs = trim(std::string_view(rhs).substr(0, rhs.size() - 9));
        }
        for (auto& alt : split(rhs, '|')) {
          auto a = trim(alt);
          if (a.empty()) fail(line_no, "empty replacement alternative");
          entry.replacements.push_back(a);
        }
        if (!current->dictionary.emplace(lhs, std::move(entry)).second) fail(line_no, "duplicate entry '" + lhs + "'");
        break;
      }
      case Kind::kRules: {
        auto arrow = line.find("->");
        if (arrow == std::string::npos) {
          auto eq = line.find('=');
          if (eq != std::string::npos && trim(std::string_view(line).substr(0, eq)) == "mode") {
            auto mode = trim(std::string_view(line).substr(eq + 1));
            if (mode == "all") current->mode = RuleMode::kAll;
            else if (mode == "sample-half") current->mode = RuleMode::kSampleHalf;
            else fail(line_no, "unknown rule mode '" + mode + "'");
            break;
          }
          fail(line_no, "expected 'pattern -> replacement'");
        }
        auto rule = parse_rule(trim(std::string_view(line).substr(0, arrow)), trim(std::string_view(line).substr(arrow + 2)));
        if (rule.pattern.empty() || rule.replacement.empty()) fail(line_no, "empty rule pattern or replacement");
        current->rules.push_back(std::move(rule));
        break;
      }
      case Kind::kFallback: {
        auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'strategy = true|false'");
        auto strategy = parse_strategy(trim(std::string_view(line).substr(0, eq)));
        auto value = trim(std::string_view(line).substr(eq + 1));
        if (!strategy) fail(line_no, "unknown strategy in fallback section");
        if (value != "true" && value != "false") fail(line_no, "fallback must be true or false");
        lex.sections_[index_of(*strategy)].rule_fallback = value == "true";
        break;
      }
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) { return parse(read_file(path), path); }

Lexicon Lexicon::default_rules() {
  return parse(R"(
[unknown_spelling.rules]
mode = sample-half
a -> @
e -> 3
i -> 1
o -> 0
s -> 5
[phonetic.rules]
ck -> k
c -> k
ph -> f
qu -> kw
d$ -> t
)",
               "<default rules>");
}

namespace {

std::string serialize_body(const std::array<StrategySection, 7>& sections) {
  std::ostringstream out;
  for (auto s : kAllStrategies) {
    const auto& sec = sections[index_of(s)];
    if (!sec.present) continue;
    if (!sec.dictionary.empty() || sec.rules.empty()) {
      out << "[" << key(s) << "]\n";
      for (const auto& [orig, entry] : sec.dictionary) {
        out << orig << " = ";
        for (std::size_t i = 0; i < entry.replacements.size(); ++i) out << (i ? " | " : "") << entry.replacements[i];
        if (entry.audited) out << " [audited]";
        out << "\n";
      }
    }
    if (!sec.rules.empty()) {
      out << "[" << key(s) << ".rules]\n";
      out << "mode = " << (sec.mode == RuleMode::kAll ? "all" : "sample-half") << "\n";
      for (const auto& r : sec.rules) out << rule_text(r) << "\n";
    }
  }
  out << "[fallback]\n";
  for (auto s : kAllStrategies) out << key(s) << " = " << (sections[index_of(s)].rule_fallback ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace

std::string Lexicon::serialize() const {
  std::string body = serialize_body(sections_);
  return "# mumkit-lexicon version: " + sha256_hex(body) + "\n" + body;
}

void Lexicon::save(const std::string& path) const { write_file_atomic(path, serialize()); }

std::string Lexicon::version() const { return sha256_hex(serialize_body(sections_)); }

std::vector<Strategy> Lexicon::missing_sections() const {
  std::vector<Strategy> out;
  for (auto s : kAllStrategies)
    if (!covers(s)) out.push_back(s);
  return out;
}

std::optional<std::string> Lexicon::substitute(Strategy s, std::string_view word, std::uint64_t draw_key) const {
  const auto& sec = section(s);
  const std::string folded = casefold(word);
  DrawStream draws(draw_key);
  std::string out;
  if (auto it = sec.dictionary.find(folded); it != sec.dictionary.end()) {
    const auto& alts = it->second.replacements;
    out = alts[alts.size() == 1 ? 0 : draws.below(alts.size())];
  } else if (sec.rule_fallback && !sec.rules.empty()) {
    out = apply_rules(sec.rules, sec.mode, folded, draws);
  } else {
    return std::nullopt;
  }
  if (casefold(out) == folded) return std::nullopt;
  if (starts_with_upper(word)) out = capitalize_first(std::move(out));
  return out;
}

std::vector<std::string> Lexicon::invert(Strategy s, std::string_view replacement) const {
  const auto& sec = section(s);
  const std::string folded = casefold(replacement);
  std::vector<std::string> out;
  for (const auto& [orig, entry] : sec.dictionary)
    for (const auto& alt : entry.replacements)
      if (casefold(alt) == folded) {
        out.push_back(orig);
        break;
      }
  if (sec.rules.empty()) return out;

  // Enumerate every way of undoing rule rewrites; reversing is tried before
  // keeping a character so the fully reversed form comes first.
  std::string partial;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (out.size() >= kMaxInverseCandidates) return;
    if (i == folded.size()) {
      if (std::find(out.begin(), out.end(), partial) == out.end()) out.push_back(partial);
      return;
    }
    for (const auto& r : sec.rules) {
      const auto& rep = r.replacement;
      if (folded.compare(i, rep.size(), rep) != 0) continue;
      if (r.word_final && i + rep.size() != folded.size()) continue;
      if (r.word_initial && !partial.empty()) continue;
      auto mark = partial.size();
      partial += r.pattern;
      walk(i + rep.size());
      partial.resize(mark);
    }
    partial.push_back(folded[i]);
    walk(i + 1);
    partial.pop_back();
  };
  walk(0);
  return out;
}

std::set<std::string> Lexicon::originals() const {
  std::set<std::string> out;
  for (const auto& sec : sections_)
    for (const auto& [orig, entry] : sec.dictionary) out.insert(orig);
  return out;
}

std::vector<std::string> Lexicon::ambiguous_replacements(Strategy s) const {
  std::map<std::string, int> seen;
  for (const auto& [orig, entry] : section(s).dictionary)
    for (const auto& alt : entry.replacements) ++seen[casefold(alt)];
  std::vector<std::string> out;
  for (const auto& [rep, count] : seen)
    if (count > 1) out.push_back(rep);
  return out;
}

}  // namespace mumkit
