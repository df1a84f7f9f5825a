#include "trimer/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "trimer/errors.hpp"

namespace trimer {

namespace {

class TomlLine {
 public:
  TomlLine(const std::string& text, int number) : s_(text), line_(number) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("config line " + std::to_string(line_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string key() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == '"') return basic_string();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return s_.substr(start, pos_ - start);
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key()};
    while (consume('.')) parts.push_back(key());
    return parts;
  }

  nlohmann::json value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return basic_string();
    if (c == '[') return array();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

 private:
  std::string basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  nlohmann::json array() {
    ++pos_;
    nlohmann::json out = nlohmann::json::array();
    if (consume(']')) return out;
    for (;;) {
      out.push_back(value());
      if (consume(']')) return out;
      expect(',');
      if (consume(']')) return out;
    }
  }

  nlohmann::json number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '_'))
      ++pos_;
    std::string tok;
    for (std::size_t i = start; i < pos_; ++i)
      if (s_[i] != '_') tok += s_[i];
    if (tok.empty()) fail("expected a value");
    const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* e = tok.data() + tok.size();
    if (tok.find_first_of(".eEin") == std::string::npos) {
      long long i = 0;
      const auto r = std::from_chars(b, e, i);
      if (r.ec != std::errc() || r.ptr != e) fail("bad integer '" + tok + "'");
      return i;
    }
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    double d = 0.0;
    const auto r = std::from_chars(b, e, d);
    if (r.ec != std::errc() || r.ptr != e) fail("bad number '" + tok + "'");
    return d;
  }

  const std::string& s_;
  int line_;
  std::size_t pos_ = 0;
};

nlohmann::json& descend(nlohmann::json& root, const std::vector<std::string>& path, TomlLine& line) {
  nlohmann::json* node = &root;
  for (const auto& k : path) {
    nlohmann::json& next = (*node)[k];
    if (next.is_null()) next = nlohmann::json::object();
    if (!next.is_object()) line.fail("'" + k + "' is already a value");
    node = &next;
  }
  return *node;
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    TomlLine line(raw, number);
    if (line.at_end()) continue;
    if (line.consume('[')) {
      const auto path = line.dotted_key();
      line.expect(']');
      if (!line.at_end()) line.fail("trailing characters after table header");
      table = &descend(root, path, line);
      continue;
    }
    auto path = line.dotted_key();
    line.expect('=');
    nlohmann::json value = line.value();
    if (!line.at_end()) line.fail("trailing characters after value");
    const std::string leaf = path.back();
    path.pop_back();
    nlohmann::json& parent = descend(*table, path, line);
    if (parent.contains(leaf)) line.fail("duplicate key '" + leaf + "'");
    parent[leaf] = std::move(value);
  }
  return root;
}

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const auto ext = path.extension().string();
  if (ext == ".toml") return parse_toml(buf.str());
  if (ext == ".json") {
    try {
      auto j = nlohmann::json::parse(buf.str());
      if (!j.is_object()) throw InvalidArgument("config root must be an object");
      return j;
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument(std::string("config: ") + e.what());
    }
  }
  throw InvalidArgument("config file must end in .toml or .json: " + path.string());
}

const nlohmann::json* config_lookup(const nlohmann::json& config, const std::string& dotted) {
  const nlohmann::json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string k = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(k)) return nullptr;
    node = &(*node)[k];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace trimer
