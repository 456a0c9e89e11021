#include "mumkit/similarity.hpp"

#include <algorithm>
#include <numeric>

namespace mumkit {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  auto s = utf8_decode(a);
  auto t = utf8_decode(b);
  if (s.size() < t.size()) std::swap(s, t);
  std::vector<std::size_t> row(t.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= s.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (s[i - 1] == t[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[t.size()];
}

double similarity(std::string_view a, std::string_view b) {
  auto fa = casefold(a);
  auto fb = casefold(b);
  if (fa == fb) return 1.0;
  auto la = utf8_decode(fa).size();
  auto lb = utf8_decode(fb).size();
  auto denom = std::max<std::size_t>({la, lb, 1});
  // (denom - d) / denom is correctly rounded, so 19/20 compares equal to 0.95.
  return static_cast<double>(denom - levenshtein(fa, fb)) / static_cast<double>(denom);
}

double mean_similarity(const ModulatedItem& item, const std::vector<std::string>& reconstructions) {
  if (reconstructions.size() != item.substitutions.size())
    throw Error(ErrorKind::kInvariant, "reconstructions for '" + item.base_id + "' have " + std::to_string(reconstructions.size()) +
                                           " entries, expected " + std::to_string(item.substitutions.size()));
  if (item.substitutions.empty()) return 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < reconstructions.size(); ++i) total += similarity(item.substitutions[i].original, reconstructions[i]);
  return total / static_cast<double>(reconstructions.size());
}

bool understanding_verdict(const ModulatedItem& item, const std::vector<std::string>& reconstructions, double threshold) {
  return mean_similarity(item, reconstructions) >= threshold;
}

}  // namespace mumkit
