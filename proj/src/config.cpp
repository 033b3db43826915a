#include "cgflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace cgflow {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' &&
        c != '-')
      return false;
  return true;
}

double parse_double(const std::string& value, const std::string& where) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError(cat(where, ": '", value, "' is not a number"));
  }
  if (used != value.size())
    throw ConfigError(cat(where, ": trailing characters in number '", value, "'"));
  return out;
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text,
                                    const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(cat(origin, ":", line_no, ": unterminated section header"));
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (!valid_name(name))
        throw ConfigError(cat(origin, ":", line_no, ": bad section name '", name, "'"));
      for (const Section& s : cfg.sections_)
        if (s.name == name)
          throw ConfigError(cat(origin, ":", line_no, ": duplicate section [", name, "]"));
      cfg.sections_.push_back(Section{name, {}});
      current = &cfg.sections_.back();
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(cat(origin, ":", line_no, ": expected 'key = value' or '[section]'"));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!valid_name(key))
      throw ConfigError(cat(origin, ":", line_no, ": bad key '", key, "'"));
    if (value.empty())
      throw ConfigError(cat(origin, ":", line_no, ": empty value for key '", key, "'"));
    if (current == nullptr)
      throw ConfigError(cat(origin, ":", line_no, ": key '", key,
                            "' appears before any [section]"));
    for (const Entry& e : current->entries)
      if (e.key == key)
        throw ConfigError(cat(origin, ":", line_no, ": duplicate key '", key,
                              "' in [", current->name, "]"));
    current->entries.push_back(Entry{key, value, false});
  }
  return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(cat("cannot open config file ", path));
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str(), path);
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
  if (!valid_name(section) || !valid_name(key))
    throw ConfigError(cat("bad override target '", section, ".", key, "'"));
  if (trim(value).empty())
    throw ConfigError(cat("empty override value for ", section, ".", key));
  if (Entry* e = find_mutable(section, key)) {
    e->value = trim(value);
    e->consumed = false;
    return;
  }
  for (Section& s : sections_)
    if (s.name == section) {
      s.entries.push_back(Entry{key, trim(value), false});
      return;
    }
  sections_.push_back(Section{section, {Entry{key, trim(value), false}}});
}

void ConfigFile::set_dotted(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError(cat("override '", assignment, "' is not section.key=value"));
  const std::string target = trim(assignment.substr(0, eq));
  const std::size_t dot = target.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= target.size())
    throw ConfigError(cat("override '", assignment, "' is not section.key=value"));
  set(target.substr(0, dot), target.substr(dot + 1),
      trim(assignment.substr(eq + 1)));
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section,
                                          const std::string& key) const {
  for (const Section& s : sections_)
    if (s.name == section)
      for (const Entry& e : s.entries)
        if (e.key == key) return &e;
  return nullptr;
}

ConfigFile::Entry* ConfigFile::find_mutable(const std::string& section,
                                            const std::string& key) {
  return const_cast<Entry*>(find(section, key));
}

const ConfigFile::Entry& ConfigFile::require(const std::string& section,
                                             const std::string& key) const {
  const Entry* e = find(section, key);
  if (e == nullptr)
    throw ConfigError(cat(origin_, ": missing required key '", key, "' in [",
                          section, "]"));
  e->consumed = true;
  return *e;
}

bool ConfigFile::has_section(const std::string& section) const {
  for (const Section& s : sections_)
    if (s.name == section) return true;
  return false;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
  return require(section, key).value;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key,
                                   const std::string& fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  e->consumed = true;
  return e->value;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key) const {
  const Entry& e = require(section, key);
  return parse_double(e.value, cat(origin_, ": [", section, "] ", key));
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  return get_double(section, key);
}

int ConfigFile::get_int(const std::string& section,
                        const std::string& key) const {
  const double v = get_double(section, key);
  const int out = static_cast<int>(v);
  if (static_cast<double>(out) != v)
    throw ConfigError(cat(origin_, ": [", section, "] ", key,
                          " must be an integer, got ", v));
  return out;
}

int ConfigFile::get_int(const std::string& section, const std::string& key,
                        int fallback) const {
  if (!has(section, key)) return fallback;
  return get_int(section, key);
}

std::uint64_t ConfigFile::get_u64(const std::string& section,
                                  const std::string& key,
                                  std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  e->consumed = true;
  try {
    std::size_t used = 0;
    const std::uint64_t out = std::stoull(e->value, &used);
    if (used != e->value.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(cat(origin_, ": [", section, "] ", key,
                          " must be a non-negative integer, got '", e->value, "'"));
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  e->consumed = true;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  throw ConfigError(cat(origin_, ": [", section, "] ", key,
                        " must be true/false/1/0, got '", e->value, "'"));
}

std::vector<double> ConfigFile::get_doubles(const std::string& section,
                                            const std::string& key,
                                            int n) const {
  const Entry& e = require(section, key);
  std::istringstream in(e.value);
  std::vector<double> out;
  std::string token;
  while (in >> token)
    out.push_back(parse_double(token, cat(origin_, ": [", section, "] ", key)));
  if (static_cast<int>(out.size()) != n)
    throw ConfigError(cat(origin_, ": [", section, "] ", key, " expects ", n,
                          " numbers, got ", out.size()));
  return out;
}

std::vector<double> ConfigFile::get_doubles(
    const std::string& section, const std::string& key, int n,
    const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  return get_doubles(section, key, n);
}

std::vector<std::string> ConfigFile::section_names() const {
  std::vector<std::string> out;
  for (const Section& s : sections_) out.push_back(s.name);
  return out;
}

std::vector<std::string> ConfigFile::keys_in(const std::string& section) const {
  std::vector<std::string> out;
  for (const Section& s : sections_)
    if (s.name == section)
      for (const Entry& e : s.entries) out.push_back(e.key);
  return out;
}

void ConfigFile::require_all_consumed() const {
  for (const Section& s : sections_)
    for (const Entry& e : s.entries)
      if (!e.consumed)
        throw ConfigError(cat(origin_, ": unknown key '", e.key, "' in [",
                              s.name, "]"));
}

std::string ConfigFile::canonical_text() const {
  std::ostringstream out;
  for (const Section& s : sections_) {
    out << "[" << s.name << "]\n";
    for (const Entry& e : s.entries) out << e.key << " = " << e.value << "\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace cgflow
