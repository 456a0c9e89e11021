#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mumkit/modulation.hpp"

namespace mumkit {

/// Edit distance over UTF-8 code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(casefold(a), casefold(b)) / max(len(a), len(b), 1).
double similarity(std::string_view a, std::string_view b);

inline constexpr double kDefaultSimilarityThreshold = 0.95;

/// Mean per-word similarity between originals and reconstructions compared
/// against `threshold` (inclusive). Misaligned lengths raise an error.
bool understanding_verdict(const ModulatedItem& item, const std::vector<std::string>& reconstructions,
                           double threshold = kDefaultSimilarityThreshold);

double mean_similarity(const ModulatedItem& item, const std::vector<std::string>& reconstructions);

}  // namespace mumkit
