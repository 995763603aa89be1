#pragma once

// Report emission: line-oriented `key=value` records and simple aligned
// tables. No locale-dependent formatting; floats use 12 significant digits,
// rationals print as `p/q` (or `p` when integral).

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pwadyn/rat.hpp"

namespace pwadyn {

inline std::string fmt_float(double x) {
  if (x != x) return "nan";
  if (x == std::numeric_limits<double>::infinity()) return "inf";
  if (x == -std::numeric_limits<double>::infinity()) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class Record {
 public:
  Record& add(std::string key, std::string value) {
    fields_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Record& add(std::string key, const char* value) { return add(std::move(key), std::string(value)); }
  Record& add(std::string key, const Rat& value) { return add(std::move(key), value.str()); }
  Record& add(std::string key, double value) { return add(std::move(key), fmt_float(value)); }
  Record& add(std::string key, long long value) { return add(std::move(key), std::to_string(value)); }
  Record& add(std::string key, unsigned long long value) {
    return add(std::move(key), std::to_string(value));
  }
  Record& add(std::string key, long value) { return add(std::move(key), std::to_string(value)); }
  Record& add(std::string key, unsigned long value) {
    return add(std::move(key), std::to_string(value));
  }
  Record& add(std::string key, unsigned value) { return add(std::move(key), std::to_string(value)); }
  Record& add(std::string key, int value) { return add(std::move(key), std::to_string(value)); }
  Record& add(std::string key, bool value) {
    return add(std::move(key), value ? std::string("true") : std::string("false"));
  }

  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

  std::string line() const {
    std::string s;
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (i) s += ' ';
      s += fields_[i].first;
      s += '=';
      s += fields_[i].second;
    }
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

enum class OutputMode { records, table };

// Prints records either raw (`k=v` per line) or as an aligned table whose
// columns are the union of the record keys in first-seen order.
inline void emit(std::ostream& os, const std::vector<Record>& recs, OutputMode mode) {
  if (mode == OutputMode::records) {
    for (const auto& r : recs) os << r.line() << '\n';
    return;
  }
  std::vector<std::string> cols;
  for (const auto& r : recs)
    for (const auto& [k, v] : r.fields()) {
      bool seen = false;
      for (const auto& c : cols)
        if (c == k) {
          seen = true;
          break;
        }
      if (!seen) cols.push_back(k);
    }
  std::vector<std::size_t> width(cols.size());
  auto cell = [&](const Record& r, const std::string& key) -> std::string {
    for (const auto& [k, v] : r.fields())
      if (k == key) return v;
    return "";
  };
  for (std::size_t c = 0; c < cols.size(); ++c) {
    width[c] = cols[c].size();
    for (const auto& r : recs) width[c] = std::max(width[c], cell(r, cols[c]).size());
  }
  auto pad = [](const std::string& s, std::size_t w) {
    std::string t = s;
    t.resize(w, ' ');
    return t;
  };
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "  " : "") << pad(cols[c], width[c]);
  os << '\n';
  for (const auto& r : recs) {
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "  " : "") << pad(cell(r, cols[c]), width[c]);
    os << '\n';
  }
}

}  // namespace pwadyn
