#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geoground/error.hpp"

namespace geoground {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

// Lowercase, map '-' and '_' to spaces and collapse whitespace runs.
inline std::string normalize_phrase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (unsigned char c : s) {
    if (c == '-' || c == '_' || std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Category vocabulary shared by the index and the query parser. Canonical
// tags are lowercase; aliases map free phrases ("coffee shop") onto them.
class CategoryLexicon {
 public:
  CategoryLexicon() = default;

  static CategoryLexicon with_defaults() {
    CategoryLexicon lex;
    for (const char* tag : {"lake", "park", "cafe", "cinema", "restaurant", "museum", "library", "school",
                            "hospital", "pharmacy", "bank", "hotel", "bar", "bakery", "supermarket", "parking",
                            "church", "stadium", "bookstore", "gym", "boba tea", "building", "bridge", "river",
                            "beach", "mall", "station", "zoo", "university", "theater", "playground", "garden",
                            "fountain", "market", "pizzeria", "post office"}) {
      lex.add_category(tag);
    }
    const std::pair<const char*, const char*> aliases[] = {
        {"coffee shop", "cafe"},       {"coffee house", "cafe"},     {"coffee", "cafe"},
        {"movie theater", "cinema"},   {"movie theatre", "cinema"},  {"cineplex", "cinema"},
        {"boba tea shop", "boba tea"}, {"boba shop", "boba tea"},    {"bubble tea", "boba tea"},
        {"boba", "boba tea"},          {"pond", "lake"},             {"grocery store", "supermarket"},
        {"grocery", "supermarket"},    {"book store", "bookstore"},  {"parking lot", "parking"},
        {"car park", "parking"},       {"pub", "bar"},               {"drugstore", "pharmacy"},
        {"train station", "station"},  {"shopping mall", "mall"},    {"eatery", "restaurant"},
        {"diner", "restaurant"},       {"pizza place", "pizzeria"},  {"theatre", "theater"},
    };
    for (const auto& [alias, tag] : aliases) lex.add_alias(alias, tag);
    return lex;
  }

  void add_category(std::string_view tag) {
    auto t = normalize_phrase(tag);
    if (t.empty()) fail(ErrorCode::InvalidArgument, "empty category tag");
    categories_.insert(t);
  }

  void add_alias(std::string_view alias, std::string_view tag) {
    auto a = normalize_phrase(alias);
    auto t = normalize_phrase(tag);
    if (a.empty() || t.empty()) fail(ErrorCode::InvalidArgument, "empty alias entry");
    categories_.insert(t);
    if (a != t) aliases_[a] = t;
  }

  // Plain `alias = tag` lines; `tag = tag` (or a bare `tag`) declares a
  // category. '#' starts a comment.
  void load(std::istream& in) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto text = trim(line);
      if (text.empty()) continue;
      auto eq = text.find('=');
      if (eq == std::string::npos) {
        add_category(text);
        continue;
      }
      auto key = trim(std::string_view(text).substr(0, eq));
      auto value = trim(std::string_view(text).substr(eq + 1));
      if (key.empty() || value.empty())
        fail(ErrorCode::InvalidArgument, "alias table line " + std::to_string(line_no) + " is incomplete");
      add_alias(key, value);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot open alias table " + path);
    load(in);
  }

  // Canonical tag for a phrase, or nullopt when neither a category nor an
  // alias matches. Simple English plurals are folded.
  std::optional<std::string> canonical(std::string_view phrase) const {
    auto p = normalize_phrase(phrase);
    if (p.empty()) return std::nullopt;
    if (auto hit = lookup(p)) return hit;
    if (p.size() > 3 && p.ends_with("ies")) {
      if (auto hit = lookup(p.substr(0, p.size() - 3) + "y")) return hit;
    }
    if (p.size() > 2 && p.ends_with("es")) {
      if (auto hit = lookup(p.substr(0, p.size() - 2))) return hit;
    }
    if (p.size() > 1 && p.ends_with('s')) {
      if (auto hit = lookup(p.substr(0, p.size() - 1))) return hit;
    }
    return std::nullopt;
  }

  // Same as canonical() but unknown non-empty tags pass through lowercased.
  // Used at ingestion where the data defines its own vocabulary.
  std::string canonical_or_self(std::string_view phrase) const {
    if (auto hit = canonical(phrase)) return *hit;
    return normalize_phrase(phrase);
  }

  bool is_category(std::string_view tag) const { return categories_.count(normalize_phrase(tag)) > 0; }

  // Every phrase that resolves to a category (canonical tags and aliases),
  // longest first so that greedy matching prefers "coffee shop" over "coffee".
  std::vector<std::string> phrases() const {
    std::vector<std::string> out(categories_.begin(), categories_.end());
    for (const auto& [alias, tag] : aliases_) out.push_back(alias);
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      if (a.size() != b.size()) return a.size() > b.size();
      return a < b;
    });
    return out;
  }

  const std::set<std::string>& categories() const { return categories_; }
  const std::map<std::string, std::string>& aliases() const { return aliases_; }

 private:
  std::optional<std::string> lookup(const std::string& p) const {
    if (categories_.count(p)) return p;
    if (auto it = aliases_.find(p); it != aliases_.end()) return it->second;
    return std::nullopt;
  }

  std::set<std::string> categories_;
  std::map<std::string, std::string> aliases_;
};

}  // namespace geoground
