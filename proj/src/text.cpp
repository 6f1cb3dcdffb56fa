#include "cxrtask/text.hpp"

#include <cctype>

namespace cxrtask {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c) && c != '\'' && c != '-') {
            flush();
            tokens.push_back(std::string(1, static_cast<char>(c)));
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

namespace {

bool is_consonant(const std::string& w, std::size_t i) {
    switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(w, i - 1);
        default:
            return true;
    }
}

// number of VC sequences in w[0..len)
int measure(const std::string& w, std::size_t len) {
    int m = 0;
    std::size_t i = 0;
    while (i < len && is_consonant(w, i)) ++i;
    while (i < len) {
        while (i < len && !is_consonant(w, i)) ++i;
        if (i >= len) break;
        ++m;
        while (i < len && is_consonant(w, i)) ++i;
    }
    return m;
}

bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
        if (!is_consonant(w, i)) return true;
    }
    return false;
}

bool double_consonant(const std::string& w) {
    const std::size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// consonant-vowel-consonant ending where the final consonant is not w, x, y
bool cvc(const std::string& w) {
    const std::size_t n = w.size();
    if (n < 3) return false;
    if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) return false;
    const char c = w[n - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, const char* suffix, std::size_t& stem_len) {
    const std::string s(suffix);
    if (w.size() < s.size()) return false;
    if (w.compare(w.size() - s.size(), s.size(), s) != 0) return false;
    stem_len = w.size() - s.size();
    return true;
}

// replace suffix when the measure condition on the stem holds
bool replace_if(std::string& w, const char* suffix, const char* replacement, int min_measure) {
    std::size_t stem_len;
    if (!ends_with(w, suffix, stem_len)) return false;
    if (measure(w, stem_len) <= min_measure) return true;  // matched, condition failed
    w = w.substr(0, stem_len) + replacement;
    return true;
}

void step1ab(std::string& w) {
    std::size_t stem_len;
    if (ends_with(w, "sses", stem_len)) {
        w.resize(w.size() - 2);
    } else if (ends_with(w, "ies", stem_len)) {
        w.resize(w.size() - 2);
    } else if (!ends_with(w, "ss", stem_len) && ends_with(w, "s", stem_len) && stem_len > 0) {
        w.resize(w.size() - 1);
    }

    bool vowel_rule_fired = false;
    if (ends_with(w, "eed", stem_len)) {
        if (measure(w, stem_len) > 0) w.resize(w.size() - 1);
    } else if (ends_with(w, "ed", stem_len) && has_vowel(w, stem_len)) {
        w.resize(stem_len);
        vowel_rule_fired = true;
    } else if (ends_with(w, "ing", stem_len) && has_vowel(w, stem_len)) {
        w.resize(stem_len);
        vowel_rule_fired = true;
    }
    if (vowel_rule_fired) {
        if (ends_with(w, "at", stem_len) || ends_with(w, "bl", stem_len) ||
            ends_with(w, "iz", stem_len)) {
            w.push_back('e');
        } else if (double_consonant(w) && w.back() != 'l' && w.back() != 's' && w.back() != 'z') {
            w.pop_back();
        } else if (measure(w, w.size()) == 1 && cvc(w)) {
            w.push_back('e');
        }
    }
}

void step1c(std::string& w) {
    std::size_t stem_len;
    if (ends_with(w, "y", stem_len) && has_vowel(w, stem_len)) {
        w.back() = 'i';
    }
}

void step2(std::string& w) {
    static const std::pair<const char*, const char*> rules[] = {
        {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
        {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
        {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
        {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
        {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"}};
    for (const auto& [suffix, replacement] : rules) {
        if (replace_if(w, suffix, replacement, 0)) return;
    }
}

void step3(std::string& w) {
    static const std::pair<const char*, const char*> rules[] = {
        {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
        {"ical", "ic"},  {"ful", ""},   {"ness", ""}};
    for (const auto& [suffix, replacement] : rules) {
        if (replace_if(w, suffix, replacement, 0)) return;
    }
}

void step4(std::string& w) {
    static const char* suffixes[] = {"al",  "ance", "ence", "er",   "ic",  "able", "ible",
                                     "ant", "ement", "ment", "ent",  "ion", "ou",   "ism",
                                     "ate", "iti",   "ous",  "ive",  "ize"};
    std::size_t stem_len;
    for (const char* suffix : suffixes) {
        if (ends_with(w, suffix, stem_len)) {
            if (measure(w, stem_len) > 1) {
                if (std::string(suffix) == "ion" && stem_len > 0 && w[stem_len - 1] != 's' &&
                    w[stem_len - 1] != 't') {
                    return;
                }
                w.resize(stem_len);
            }
            return;
        }
    }
}

void step5(std::string& w) {
    std::size_t stem_len;
    if (ends_with(w, "e", stem_len)) {
        const int m = measure(w, stem_len);
        if (m > 1 || (m == 1 && !cvc(w.substr(0, stem_len)))) {
            w.resize(stem_len);
        }
    }
    if (double_consonant(w) && w.back() == 'l' && measure(w, w.size()) > 1) {
        w.pop_back();
    }
}

}  // namespace

std::string porter_stem(const std::string& word) {
    if (word.size() < 3) return word;
    for (unsigned char c : word) {
        if (!std::isalpha(c)) return word;  // stem alphabetic words only
    }
    std::string w = word;
    step1ab(w);
    step1c(w);
    step2(w);
    step3(w);
    step4(w);
    step5(w);
    return w;
}

}  // namespace cxrtask
