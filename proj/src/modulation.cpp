#include "mumkit/modulation.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace mumkit {

using json = nlohmann::json;

std::string_view key(MeaningAudit a) {
  switch (a) {
    case MeaningAudit::kUnaudited: return "unaudited";
    case MeaningAudit::kPreserved: return "preserved";
    case MeaningAudit::kBroken: return "broken";
  }
  return "";
}

namespace {

std::optional<MeaningAudit> parse_audit(std::string_view s) {
  if (s == "unaudited") return MeaningAudit::kUnaudited;
  if (s == "preserved") return MeaningAudit::kPreserved;
  if (s == "broken") return MeaningAudit::kBroken;
  return std::nullopt;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : ", ") + w;
  return out;
}

}  // namespace

CoverageError::CoverageError(Strategy s, std::vector<std::string> words)
    : Error(ErrorKind::kCoverage, "lexicon section '" + std::string(key(s)) + "' does not cover: " + join(words)),
      strategy_(s),
      words_(std::move(words)) {}

ModulatedItem modulate(const BaseItem& item, Strategy strategy, int level, const Lexicon& lexicon, std::uint64_t seed) {
  if (level < kMinLevel || level > kMaxLevel)
    throw Error(ErrorKind::kConfig, "modulation level " + std::to_string(level) + " outside 1..5");
  if (!lexicon.covers(strategy))
    throw Error(ErrorKind::kCoverage, "lexicon has no section for strategy '" + std::string(key(strategy)) + "'");
  if (item.important_words.size() < static_cast<std::size_t>(level))
    throw Error(ErrorKind::kState, "item '" + item.id + "' has " + std::to_string(item.important_words.size()) +
                                       " ranked words; level " + std::to_string(level) + " needs more");

  struct Pending {
    std::size_t token_index;
    std::string original;
    std::string replacement;
  };
  std::vector<Pending> pending;
  std::vector<std::string> uncovered;
  for (int r = 0; r < level; ++r) {
    const auto& ranked = item.important_words[static_cast<std::size_t>(r)];
    if (ranked.token_index >= item.tokens.size())
      throw Error(ErrorKind::kInvariant, "item '" + item.id + "' ranks token " + std::to_string(ranked.token_index) + " out of range");
    const auto& tok = item.tokens[ranked.token_index];
    auto draw_key = hash_key(seed, {item.id, key(strategy), std::to_string(ranked.token_index)});
    auto rep = lexicon.substitute(strategy, tok.surface, draw_key);
    if (!rep) {
      uncovered.push_back(tok.surface);
      continue;
    }
    pending.push_back({ranked.token_index, tok.surface, std::move(*rep)});
  }
  if (!uncovered.empty()) throw CoverageError(strategy, std::move(uncovered));

  // Rewrite left to right over token spans; offsets shift by earlier edits.
  std::vector<std::size_t> order(pending.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pending[a].token_index < pending[b].token_index; });

  ModulatedItem out;
  out.base_id = item.id;
  out.strategy = strategy;
  out.level = level;
  out.seed = seed;
  std::vector<std::size_t> offsets(pending.size());
  std::size_t cursor = 0;
  for (auto idx : order) {
    const auto& tok = item.tokens[pending[idx].token_index];
    out.text.append(item.text, cursor, tok.begin - cursor);
    offsets[idx] = out.text.size();
    out.text += pending[idx].replacement;
    cursor = tok.end;
  }
  out.text.append(item.text, cursor, std::string::npos);
  for (std::size_t i = 0; i < pending.size(); ++i)
    out.substitutions.push_back({pending[i].token_index, pending[i].original, pending[i].replacement, offsets[i]});
  return out;
}

std::string restore_text(const ModulatedItem& item) {
  std::vector<const Substitution*> subs;
  for (const auto& s : item.substitutions) subs.push_back(&s);
  std::sort(subs.begin(), subs.end(), [](auto* a, auto* b) { return a->offset > b->offset; });
  std::string text = item.text;
  for (const auto* s : subs) {
    if (text.compare(s->offset, s->replacement.size(), s->replacement) != 0)
      throw Error(ErrorKind::kInvariant, "modulated text of '" + item.base_id + "' lacks replacement '" + s->replacement +
                                             "' at offset " + std::to_string(s->offset));
    text.replace(s->offset, s->replacement.size(), s->original);
  }
  return text;
}

std::string ModulatedDataset::manifest_hash() const {
  json j = {{"corpus_version", corpus_version},
            {"lexicon_version", lexicon_version},
            {"seed", seed},
            {"tokenizer", std::string(kTokenizerId)}};
  return sha256_hex(j.dump());
}

const ModulatedItem* ModulatedDataset::find(const std::string& base_id, Strategy s, int level) const {
  auto it = std::lower_bound(items.begin(), items.end(), std::make_tuple(base_id, s, level), [](const ModulatedItem& m, const auto& k) {
    return std::tie(m.base_id, m.strategy, m.level) < k;
  });
  if (it != items.end() && it->base_id == base_id && it->strategy == s && it->level == level) return &*it;
  return nullptr;
}

const BaseItem* ModulatedDataset::base(const std::string& id) const {
  for (const auto& b : bases)
    if (b.id == id) return &b;
  return nullptr;
}

ModulatedDataset build_dataset(const Corpus& corpus, const Lexicon& lexicon, std::uint64_t seed) {
  if (auto missing = lexicon.missing_sections(); !missing.empty()) {
    std::vector<std::string> names;
    for (auto s : missing) names.emplace_back(key(s));
    throw Error(ErrorKind::kCoverage, "lexicon is missing sections: " + join(names));
  }
  ModulatedDataset ds;
  ds.corpus_version = corpus.version();
  ds.lexicon_version = lexicon.version();
  ds.seed = seed;

  std::vector<std::string> failures;
  for (const auto& item : corpus.items()) {
    if (item.validated != Validation::kPassed) {
      failures.push_back(item.id + ": not validated as passed");
      continue;
    }
    if (item.important_words.size() < static_cast<std::size_t>(kMaxLevel)) {
      failures.push_back(item.id + ": ranking has " + std::to_string(item.important_words.size()) + " words");
      continue;
    }
    ds.bases.push_back(item);
    for (auto s : kAllStrategies) {
      for (int level = kMinLevel; level <= kMaxLevel; ++level) {
        try {
          ds.items.push_back(modulate(item, s, level, lexicon, seed));
        } catch (const CoverageError& e) {
          failures.push_back(item.id + "/" + std::string(key(s)) + "/" + std::to_string(level) + ": " + e.what());
          break;  // higher levels fail on the same words
        } catch (const Error& e) {
          failures.push_back(item.id + "/" + std::string(key(s)) + "/" + std::to_string(level) + ": " + e.what());
        }
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " modulation failure(s):";
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(ErrorKind::kCoverage, msg);
  }
  std::sort(ds.bases.begin(), ds.bases.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(ds.items.begin(), ds.items.end(), [](const auto& a, const auto& b) {
    return std::tie(a.base_id, a.strategy, a.level) < std::tie(b.base_id, b.strategy, b.level);
  });
  return ds;
}

namespace {

json base_to_json(const BaseItem& b) {
  json words = json::array();
  for (const auto& w : b.important_words) words.push_back(json::array({w.token_index, w.surface}));
  return {{"kind", "base"},
          {"id", b.id},
          {"text", b.text},
          {"label", std::string(key(b.label))},
          {"topic", b.topic},
          {"important_words", words},
          {"validated", std::string(key(b.validated))},
          {"ranking_filled", b.ranking_filled}};
}

json item_to_json(const ModulatedItem& m) {
  json subs = json::array();
  for (const auto& s : m.substitutions)
    subs.push_back({{"token_index", s.token_index}, {"original", s.original}, {"replacement", s.replacement}, {"offset", s.offset}});
  return {{"kind", "item"},
          {"base_id", m.base_id},
          {"strategy", std::string(key(m.strategy))},
          {"level", m.level},
          {"text", m.text},
          {"seed", m.seed},
          {"meaning_audit", std::string(key(m.meaning_audit))},
          {"substitutions", subs}};
}

}  // namespace

std::string serialize_dataset(const ModulatedDataset& ds) {
  std::ostringstream out;
  json header = {{"kind", "header"},
                 {"format", "mumkit-dataset/1"},
                 {"corpus_version", ds.corpus_version},
                 {"lexicon_version", ds.lexicon_version},
                 {"seed", ds.seed},
                 {"bases", ds.bases.size()},
                 {"items", ds.items.size()},
                 {"manifest", ds.manifest_hash()}};
  out << header.dump() << "\n";
  for (const auto& b : ds.bases) out << base_to_json(b).dump() << "\n";
  for (const auto& m : ds.items) out << item_to_json(m).dump() << "\n";
  return out.str();
}

ModulatedDataset parse_dataset(std::string_view content, const std::string& source_name) {
  ModulatedDataset ds;
  std::size_t line_no = 0;
  bool have_header = false;
  for (const auto& raw : split(content, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    auto where = source_name + ":" + std::to_string(line_no);
    try {
      auto j = json::parse(line);
      auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        ds.corpus_version = j.at("corpus_version").get<std::string>();
        ds.lexicon_version = j.at("lexicon_version").get<std::string>();
        ds.seed = j.at("seed").get<std::uint64_t>();
        have_header = true;
      } else if (kind == "base") {
        BaseItem b;
        b.id = j.at("id").get<std::string>();
        b.set_text(j.at("text").get<std::string>());
        b.label = j.at("label").get<std::string>() == "benign" ? Label::kBenign : Label::kViolating;
        b.topic = j.value("topic", "");
        for (const auto& w : j.at("important_words")) b.important_words.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::string>()});
        auto v = j.value("validated", "unchecked");
        b.validated = v == "passed" ? Validation::kPassed : v == "failed" ? Validation::kFailed : Validation::kUnchecked;
        b.ranking_filled = j.value("ranking_filled", false);
        ds.bases.push_back(std::move(b));
      } else if (kind == "item") {
        ModulatedItem m;
        m.base_id = j.at("base_id").get<std::string>();
        auto s = parse_strategy(j.at("strategy").get<std::string>());
        if (!s) throw Error(ErrorKind::kParse, where + ": unknown strategy");
        m.strategy = *s;
        m.level = j.at("level").get<int>();
        m.text = j.at("text").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        auto audit = parse_audit(j.value("meaning_audit", "unaudited"));
        if (!audit) throw Error(ErrorKind::kParse, where + ": unknown meaning_audit");
        m.meaning_audit = *audit;
        for (const auto& sj : j.at("substitutions"))
          m.substitutions.push_back({sj.at("token_index").get<std::size_t>(), sj.at("original").get<std::string>(),
                                     sj.at("replacement").get<std::string>(), sj.at("offset").get<std::size_t>()});
        ds.items.push_back(std::move(m));
      } else {
        throw Error(ErrorKind::kParse, where + ": unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, where + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::kParse, source_name + ": missing dataset header");
  std::sort(ds.items.begin(), ds.items.end(), [](const auto& a, const auto& b) {
    return std::tie(a.base_id, a.strategy, a.level) < std::tie(b.base_id, b.strategy, b.level);
  });
  return ds;
}

void save_dataset(const std::string& path, const ModulatedDataset& dataset) { write_file_atomic(path, serialize_dataset(dataset)); }

ModulatedDataset load_dataset(const std::string& path) { return parse_dataset(read_file(path), path); }

std::size_t apply_audit(ModulatedDataset& dataset, std::string_view audit_csv, const std::string& source_name) {
  std::size_t applied = 0;
  std::size_t line_no = 0;
  for (const auto& raw : split(audit_csv, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, ',');
    for (auto& c : cols) c = trim(c);
    if (line_no == 1 && !cols.empty() && cols[0] == "base_id") continue;
    auto where = source_name + ":" + std::to_string(line_no);
    if (cols.size() != 4) throw Error(ErrorKind::kParse, where + ": expected base_id,strategy,level,verdict");
    auto s = parse_strategy(cols[1]);
    if (!s) throw Error(ErrorKind::kParse, where + ": unknown strategy '" + cols[1] + "'");
    int level = 0;
    try {
      level = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, where + ": bad level '" + cols[2] + "'");
    }
    auto verdict = parse_audit(cols[3]);
    if (!verdict) throw Error(ErrorKind::kParse, where + ": verdict must be preserved or broken");
    auto* item = const_cast<ModulatedItem*>(dataset.find(cols[0], *s, level));
    if (!item) throw Error(ErrorKind::kState, where + ": audit references unknown item " + cols[0] + "/" + cols[1] + "/" + cols[2]);
    item->meaning_audit = *verdict;
    ++applied;
  }
  return applied;
}

std::size_t audit_meaning(ModulatedDataset& dataset, const std::string& audit_path) {
  return apply_audit(dataset, read_file(audit_path), audit_path);
}

}  // namespace mumkit
