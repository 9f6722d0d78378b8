#pragma once

// Typed INI-style configuration files for the experiment driver.
//
// The format is deliberately flat: `[section]` headers group `key = value`
// lines, `#` or `;` starts a comment, and list values are comma-separated.
// Every lookup marks the key as consumed; `require_consumed()` then rejects
// whatever is left over, so a typo in a key name fails loudly instead of
// silently falling back to a default.

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace crossed {

class Config {
 public:
  // Parse errors carry 1-based line numbers (ParseError).
  static Config parse(std::istream& in, const std::string& name = "<config>");
  // Throws std::runtime_error when the file cannot be opened.
  static Config parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  // Lookups without a fallback throw std::invalid_argument when the key is
  // missing; every variant throws on a malformed value, naming section.key.
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key) const;

  // Rejects any key no lookup has touched (std::invalid_argument naming every
  // stray section.key); call once after all options have been read.
  void require_consumed() const;

  const std::string& name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& at(const std::string& section, const std::string& key) const;

  std::string name_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace crossed
