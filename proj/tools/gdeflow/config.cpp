#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gde::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::pair<std::string, std::string> split_dotted(const std::string& dotted) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
    throw std::invalid_argument("config: expected section.key, got '" + dotted + "'");
  }
  return {dotted.substr(0, dot), dotted.substr(dot + 1)};
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": key outside a section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.sections_[section][key] = Entry{value, lineno};
  }
  return cfg;
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  const auto [section, key] = split_dotted(dotted_key);
  sections_[section][key] = Entry{value, 0};
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key)) {
    throw std::runtime_error("config: missing required key " + section + "." + key);
  }
  return s->second.at(key).value;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return std::stod(get(section, key));
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  return std::stol(get(section, key));
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: boolean expected for " + section + "." + key + ", got '" + v +
                           "'");
}

std::vector<std::uint64_t> Config::get_seed_list(const std::string& section, const std::string& key,
                                                 std::vector<std::uint64_t> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<std::uint64_t> seeds;
  std::istringstream ss(get(section, key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  if (seeds.empty()) throw std::runtime_error("config: empty seed list in " + section + "." + key);
  return seeds;
}

void Config::validate_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      const std::string dotted = section + "." + key;
      bool ok = false;
      for (const auto& a : allowed) {
        if (a == dotted) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        throw std::runtime_error(origin_ + ":" + std::to_string(entry.line) +
                                 ": unknown configuration key '" + dotted + "'");
      }
    }
  }
}

std::string Config::normalized_text() const {
  std::ostringstream out;
  for (const auto& [section, entries] : sections_) {
    out << "[" << section << "]\n";
    for (const auto& [key, entry] : entries) out << key << " = " << entry.value << "\n";
  }
  return out.str();
}

std::string config_hash(const Config& cfg) {
  const std::string text = cfg.normalized_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gde::cli
