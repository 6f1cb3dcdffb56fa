#pragma once

#include <string>
#include <vector>

namespace cxrtask {

/// Metric tokenization: lowercase ASCII, then whitespace split after
/// punctuation detachment. Apostrophes and hyphens stay attached so
/// "x-ray" and "don't" survive as single tokens; every other ASCII
/// punctuation character becomes its own token.
std::vector<std::string> tokenize(const std::string& text);

/// Porter (1980) suffix-stripping stemmer over lowercase ASCII words.
/// Words shorter than 3 characters pass through unchanged.
std::string porter_stem(const std::string& word);

}  // namespace cxrtask
