#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <regex>
#include <string>
#include <vector>

#include "pmeval/contracts.hpp"
#include "pmeval/error.hpp"

namespace pmeval {
namespace {

struct NumberToken {
  double value;
  std::size_t begin;
  std::size_t end;
  std::size_t word;
  bool plain_integer;  // digits only: no separator, decimal point or suffix
  std::size_t digits;
};

constexpr std::array<std::string_view, 24> kMonths = {
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec"};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::size_t count_digits_at(std::string_view s, std::size_t pos) {
  std::size_t n = 0;
  while (pos + n < s.size() && is_digit(s[pos + n])) ++n;
  return n;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Word index of every character (whitespace-separated words).
std::vector<std::size_t> word_indices(std::string_view s, std::vector<std::string>& words) {
  std::vector<std::size_t> index(s.size(), 0);
  bool in_word = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(s[i]))) {
      in_word = false;
      index[i] = words.empty() ? 0 : words.size() - 1;
      continue;
    }
    if (!in_word) {
      words.emplace_back();
      in_word = true;
    }
    words.back().push_back(s[i]);
    index[i] = words.size() - 1;
  }
  return index;
}

bool is_month_word(std::string_view word) {
  std::string letters;
  for (char c : word) {
    if (is_alpha(c)) letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else if (!letters.empty()) break;
  }
  return std::find(kMonths.begin(), kMonths.end(), letters) != kMonths.end();
}

/// Length of a numeric date ("2026-06-30", "6/30/2026", "6/30") starting at i, else 0.
std::size_t numeric_date_at(std::string_view s, std::size_t i) {
  static const std::regex date(R"(\d{4}-\d{1,2}-\d{1,2}|\d{1,2}/\d{1,2}(/\d{2,4})?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(), m, date,
                         std::regex_constants::match_continuous)) {
    return 0;
  }
  const std::size_t end = i + static_cast<std::size_t>(m.length(0));
  return end < s.size() && is_digit(s[end]) ? 0 : static_cast<std::size_t>(m.length(0));
}

std::vector<NumberToken> tokenize_numbers(std::string_view s) {
  std::vector<std::string> words;
  const auto word_of = word_indices(s, words);
  std::vector<NumberToken> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    // Digits glued to letters ("H1N1", "Q4") are identifiers, not quantities.
    if (i > 0 && is_alpha(s[i - 1])) {
      while (i < s.size() && (is_digit(s[i]) || is_alpha(s[i]))) ++i;
      continue;
    }
    if (const std::size_t skip = numeric_date_at(s, i)) {
      i += skip;
      continue;
    }
    const std::size_t begin = i;
    std::string digits;
    const std::size_t lead = count_digits_at(s, i);
    digits.append(s.substr(i, lead));
    i += lead;
    bool plain = true;
    // Thousands groups: separator followed by exactly three digits.
    while (i + 1 < s.size() && (s[i] == ',' || (s[i] == ' ' && lead <= 3)) && count_digits_at(s, i + 1) == 3) {
      digits.append(s.substr(i + 1, 3));
      i += 4;
      plain = false;
    }
    std::string fraction;
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      const std::size_t n = count_digits_at(s, i + 1);
      fraction = std::string(s.substr(i + 1, n));
      i += 1 + n;
      plain = false;
    }
    double value = std::stod(digits + (fraction.empty() ? "" : "." + fraction));
    if (i < s.size() && (s[i] == 'k' || s[i] == 'K') && (i + 1 >= s.size() || !is_alpha(s[i + 1]))) {
      value *= 1000.0;
      ++i;
      plain = false;
    }
    tokens.push_back(NumberToken{value, begin, i, word_of[begin], plain, digits.size()});
  }

  // Drop date context: years near month names, day-of-month numbers next to them.
  std::vector<std::size_t> month_words;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (is_month_word(words[w])) month_words.push_back(w);
  }
  auto distance_to_month = [&](std::size_t w) {
    std::size_t best = SIZE_MAX;
    for (std::size_t m : month_words) best = std::min(best, m > w ? m - w : w - m);
    return best;
  };
  std::erase_if(tokens, [&](const NumberToken& t) {
    if (!t.plain_integer) return false;
    const std::size_t d = distance_to_month(t.word);
    if (t.digits == 4 && d <= 2) return true;
    return t.value >= 1 && t.value <= 31 && t.digits <= 2 && d == 1;
  });
  return tokens;
}

bool contains_any(const std::string& haystack, std::initializer_list<std::string_view> needles) {
  return std::any_of(needles.begin(), needles.end(),
                     [&](std::string_view n) { return haystack.find(n) != std::string::npos; });
}

}  // namespace

double parse_threshold_label(std::string_view label) {
  const auto tokens = tokenize_numbers(label);
  if (tokens.empty()) throw Error(ErrorCode::NoNumber, "no numeric threshold in label '" + std::string(label) + "'");
  if (tokens.size() > 1) {
    throw Error(ErrorCode::AmbiguousNumber, "label '" + std::string(label) + "' has " +
                                                std::to_string(tokens.size()) + " numeric tokens");
  }
  return tokens.front().value;
}

RangeBounds parse_range_label(std::string_view label) {
  const auto tokens = tokenize_numbers(label);
  const std::string text = lower(label);
  if (tokens.empty()) throw Error(ErrorCode::NoNumber, "no numeric bound in label '" + std::string(label) + "'");
  if (tokens.size() == 2) {
    if (!(tokens[0].value < tokens[1].value)) {
      throw Error(ErrorCode::AmbiguousNumber, "range label '" + std::string(label) + "' is not increasing");
    }
    return RangeBounds{tokens[0].value, tokens[1].value};
  }
  if (tokens.size() > 2) {
    throw Error(ErrorCode::AmbiguousNumber, "label '" + std::string(label) + "' has " +
                                                std::to_string(tokens.size()) + " numeric tokens");
  }
  const double n = tokens.front().value;
  const std::string after = text.substr(std::min(tokens.front().end, text.size()));
  const std::string before = text.substr(0, tokens.front().begin);
  if (contains_any(before, {"<", "under", "less than", "below", "fewer than", "up to"})) {
    return RangeBounds{std::nullopt, n};
  }
  if (contains_any(after, {"+", "or more", "or higher", "or above", "and above", "and up", "or greater"}) ||
      contains_any(before, {">", "\xE2\x89\xA5", "over", "above", "more than", "at least", "greater than"})) {
    return RangeBounds{n, std::nullopt};
  }
  if (contains_any(after, {"or less", "or fewer", "or lower", "and below"})) return RangeBounds{std::nullopt, n};
  throw Error(ErrorCode::AmbiguousNumber, "cannot tell which side of " + std::to_string(n) +
                                              " the label '" + std::string(label) + "' covers");
}

}  // namespace pmeval
