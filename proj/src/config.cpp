#include "crossed/config.hpp"

#include <cctype>
#include <climits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "crossed/errors.hpp"

namespace crossed {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::islower(static_cast<unsigned char>(c)) &&
        !std::isdigit(static_cast<unsigned char>(c)) && c != '_')
      return false;
  return true;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& value, const std::string& where) {
  try {
    size_t used = 0;
    double x = std::stod(value, &used);
    if (used == value.size()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config: " + where + ": not a number: '" + value + "'");
}

int parse_int(const std::string& value, const std::string& where) {
  try {
    size_t used = 0;
    long x = std::stol(value, &used);
    if (used == value.size() && x >= INT_MIN && x <= INT_MAX)
      return static_cast<int>(x);
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config: " + where + ": not an integer: '" + value + "'");
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  throw std::invalid_argument("config: " + where + ": not a boolean: '" + value + "'");
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& name) {
  Config out;
  out.name_ = name;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(lineno, name + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section))
        throw ParseError(lineno, name + ": bad section name '" + section + "'");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, name + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (!valid_name(key))
      throw ParseError(lineno, name + ": bad key name '" + key + "'");
    if (section.empty())
      throw ParseError(lineno, name + ": key '" + key + "' before any [section]");
    auto [it, inserted] = out.sections_[section].try_emplace(
        key, Entry{trim(line.substr(eq + 1)), lineno});
    if (!inserted)
      throw ParseError(lineno, name + ": duplicate key '" + section + "." + key +
                                   "' (first on line " + std::to_string(it->second.line) + ")");
  }
  return out;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  return parse(in, path);
}

const Config::Entry* Config::find(const std::string& section,
                                  const std::string& key) const {
  auto sec = sections_.find(section);
  if (sec == sections_.end()) return nullptr;
  auto it = sec->second.find(key);
  if (it == sec->second.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

const Config::Entry& Config::at(const std::string& section,
                                const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e)
    throw std::invalid_argument("config: " + name_ + ": missing required key '" +
                                section + "." + key + "'");
  return *e;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return at(section, key).value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  return parse_double(at(section, key).value, section + "." + key);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_double(e->value, section + "." + key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  return parse_int(at(section, key).value, section + "." + key);
}

int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_int(e->value, section + "." + key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
  return parse_bool(at(section, key).value, section + "." + key);
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  const Entry* e = find(section, key);
  return e ? parse_bool(e->value, section + "." + key) : fallback;
}

std::vector<int> Config::get_int_list(const std::string& section,
                                      const std::string& key) const {
  std::vector<int> out;
  for (const std::string& item : split_list(at(section, key).value))
    out.push_back(parse_int(item, section + "." + key));
  return out;
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(at(section, key).value))
    out.push_back(parse_double(item, section + "." + key));
  return out;
}

void Config::require_consumed() const {
  std::string stray;
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, entry] : entries)
      if (!entry.used) {
        if (!stray.empty()) stray += ", ";
        stray += section + "." + key + " (line " + std::to_string(entry.line) + ")";
      }
  if (!stray.empty())
    throw std::invalid_argument("config: " + name_ + ": unknown keys: " + stray);
}

}  // namespace crossed
