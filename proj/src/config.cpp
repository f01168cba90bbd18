#include "fedboost/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fedboost/error.hpp"

namespace fedboost::config {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kConfig, "line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a '#' comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  Value parse() {
    Value v = value();
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value value() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return {string()};
    if (c == '[') return {array()};
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return number();
  }

  std::string string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += s_[pos_];
      }
      ++pos_;
    }
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  Array array() {
    ++pos_;
    Array out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) fail(line_, "unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail(line_, "expected ',' or ']' in array");
    }
  }

  Value number() {
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string tok;
    for (char c : s_.substr(start, pos_ - start))
      if (c != '_') tok += c;
    if (tok.empty()) fail(line_, "expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" ||
                          tok == "nan";
    if (!is_float) {
      std::int64_t v = 0;
      const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(b, tok.data() + tok.size(), v);
      if (ec == std::errc() && ptr == tok.data() + tok.size()) return {v};
      fail(line_, "bad integer '" + tok + "'");
    }
    double d = 0.0;
    const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(b, tok.data() + tok.size(), d);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail(line_, "bad number '" + tok + "'");
    return {d};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

// Typed access to one table, remembering which keys were consumed.
class Reader {
 public:
  Reader(const Table* table, std::string name) : table_(table), name_(std::move(name)) {}

  std::optional<std::int64_t> integer(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    if (auto* i = std::get_if<std::int64_t>(&v->data)) return *i;
    bad(key, "an integer");
  }
  std::optional<std::size_t> count(const std::string& key) {
    auto v = integer(key);
    if (v && *v < 0) bad(key, "a non-negative integer");
    if (!v) return std::nullopt;
    return static_cast<std::size_t>(*v);
  }
  std::optional<double> real(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    if (auto* d = std::get_if<double>(&v->data)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&v->data)) return static_cast<double>(*i);
    bad(key, "a number");
  }
  std::optional<bool> boolean(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    if (auto* b = std::get_if<bool>(&v->data)) return *b;
    bad(key, "a boolean");
  }
  std::optional<std::string> text(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    if (auto* s = std::get_if<std::string>(&v->data)) return *s;
    bad(key, "a string");
  }
  std::optional<std::vector<std::string>> texts(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    const auto* arr = std::get_if<Array>(&v->data);
    if (!arr) bad(key, "an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
      const auto* s = std::get_if<std::string>(&e.data);
      if (!s) bad(key, "an array of strings");
      out.push_back(*s);
    }
    return out;
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [key, value] : *table_)
      if (!used_.contains(key))
        throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in [" + name_ + "]");
  }

 private:
  const Value* find(const std::string& key) {
    used_.insert(key);
    if (!table_) return nullptr;
    auto it = table_->find(key);
    return it == table_->end() ? nullptr : &it->second;
  }
  [[noreturn]] void bad(const std::string& key, const char* expected) {
    throw Error(ErrorCode::kConfig, "[" + name_ + "] " + key + " must be " + expected);
  }

  const Table* table_;
  std::string name_;
  std::set<std::string> used_;
};

}  // namespace

Document parse_toml(const std::string& text) {
  Document doc;
  doc[""];
  std::string current;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(line_no, "malformed table header");
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (doc.contains(current) && current != "") fail(line_no, "duplicate table [" + current + "]");
      doc[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    auto& table = doc[current];
    if (table.contains(key)) fail(line_no, "duplicate key '" + key + "'");
    table[key] = ValueParser(std::string_view(line).substr(eq + 1), line_no).parse();
  }
  return doc;
}

Document load_toml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

RunConfig run_config_from(const Document& doc) {
  static const std::set<std::string> kTables = {"", "scenario", "analysis", "run"};
  for (const auto& [name, table] : doc) {
    if (!kTables.contains(name)) throw Error(ErrorCode::kConfig, "unknown table [" + name + "]");
    if (name.empty() && !table.empty())
      throw Error(ErrorCode::kConfig, "key '" + table.begin()->first + "' outside any table");
  }
  auto table = [&](const char* name) -> const Table* {
    auto it = doc.find(name);
    return it == doc.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  {
    Reader r(table("scenario"), "scenario");
    auto& s = cfg.scenario;
    if (auto v = r.text("name")) s.name = *v;
    if (auto v = r.count("n")) s.n = *v;
    if (auto v = r.count("p")) s.p = *v;
    if (auto v = r.text("structure")) s.structure = sim::parse_structure(*v);
    if (auto v = r.count("group_size")) s.group_size = *v;
    if (auto v = r.real("p_same_within")) s.p_same_within = *v;
    if (auto v = r.real("p_same_between")) s.p_same_between = *v;
    if (auto v = r.count("effect_count")) s.effects.count = *v;
    if (auto v = r.real("effect_size")) s.effects.size = *v;
    if (auto v = r.count("effects_per_group")) s.effects.per_group = *v;
    if (auto v = r.count("sites")) s.sites = *v;
    if (auto v = r.integer("seed")) s.seed = static_cast<std::uint64_t>(*v);
    if (auto v = r.count("replicates")) s.replicates = *v;
    // Paper-scale preset: p = 2500 unless p is given explicitly.
    if (auto v = r.boolean("full_scale"); v && *v && !r.count("p")) s.p = 2500;
    r.reject_unknown();
    s.validate();
  }
  {
    Reader r(table("analysis"), "analysis");
    auto& a = cfg.analysis;
    if (auto v = r.texts("methods")) a.methods = *v;
    if (auto v = r.count("buffer")) a.buffer = *v;
    if (auto v = r.real("nu")) a.nu = *v;
    if (auto v = r.count("steps")) a.steps = *v;
    if (auto v = r.count("model_size")) a.model_size = *v;
    if (auto v = r.text("standardize")) a.standardize = parse_standardization(*v);
    if (auto v = r.count("min_site_n")) a.min_site_n = *v;
    r.reject_unknown();
    for (const auto& m : a.methods) parse_boost_mode(m);
    if (a.methods.empty()) throw Error(ErrorCode::kConfig, "[analysis] methods is empty");
    BoostingConfig probe;
    probe.p = cfg.scenario.p;
    probe.nu = a.nu;
    probe.max_steps = a.steps;
    probe.buffer_w = a.buffer;
    probe.validate();
    if (a.min_site_n < 1) throw Error(ErrorCode::kConfig, "[analysis] min_site_n must be >= 1");
  }
  {
    Reader r(table("run"), "run");
    if (auto v = r.text("out")) cfg.run.out = *v;
    if (auto v = r.boolean("in_process")) cfg.run.in_process = *v;
    if (auto v = r.boolean("baseline")) cfg.run.baseline = *v;
    r.reject_unknown();
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from(load_toml(path));
}

}  // namespace fedboost::config
