#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgflow/common.hpp"

namespace cgflow {

// Flat text config: "[section]" headers followed by "key = value" lines.
// Blank lines and full-line '#' comments are allowed; everything else is an
// error with a file:line message. Lookups are recorded so that keys nobody
// ever asked for can be rejected after parsing (typo protection).
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text,
                                 const std::string& origin = "<config>");

  // Creates or replaces a value (command-line overrides).
  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // Accepts "section.key=value".
  void set_dotted(const std::string& assignment);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section,
                         const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  // Whitespace-separated list of exactly n doubles.
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key, int n) const;
  std::vector<double> get_doubles(const std::string& section,
                                  const std::string& key, int n,
                                  const std::vector<double>& fallback) const;

  std::vector<std::string> section_names() const;  // in file order
  std::vector<std::string> keys_in(const std::string& section) const;

  // Errors with the first key that was never read by any getter.
  void require_all_consumed() const;

  const std::string& origin() const { return origin_; }

  // Canonical re-serialization (file order, overrides applied); used for run
  // manifests so that identical configs hash identically.
  std::string canonical_text() const;

 private:
  struct Entry {
    std::string key;
    std::string value;
    mutable bool consumed = false;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  const Entry* find(const std::string& section, const std::string& key) const;
  Entry* find_mutable(const std::string& section, const std::string& key);
  const Entry& require(const std::string& sectionphrase,
                       const std::string& key) const;

  std::string origin_ = "<config>";
  std::vector<Section> sections_;
};

}  // namespace cgflow
