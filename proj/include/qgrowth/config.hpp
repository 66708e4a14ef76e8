#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qgrowth/calculus.hpp"
#include "qgrowth/error.hpp"

namespace qgrowth {

/// Closed-form field in x and y: + - * / ^, sin cos exp ln abs min max, constant pi.
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    Parser p{text, 0};
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    return e;
  }

  double operator()(double x, double y = 0.0) const { return root_ ? root_->eval(x, y) : 0.0; }
  bool depends_on_position() const { return root_ && root_->uses_xy(); }
  bool empty() const { return !root_; }
  const std::string& text() const { return text_; }

  GridFunction sample(const GridPtr& g) const {
    return GridFunction::sample(g, [&](double x, double y) { return (*this)(x, y); });
  }

 private:
  struct Node {
    enum Kind { number, var_x, var_y, neg, add, sub, mul, div, pow, call1, call2 } kind = number;
    double value = 0.0;
    std::string fn;
    std::unique_ptr<Node> a, b;

    double eval(double x, double y) const {
      switch (kind) {
        case number: return value;
        case var_x: return x;
        case var_y: return y;
        case neg: return -a->eval(x, y);
        case add: return a->eval(x, y) + b->eval(x, y);
        case sub: return a->eval(x, y) - b->eval(x, y);
        case mul: return a->eval(x, y) * b->eval(x, y);
        case div: return a->eval(x, y) / b->eval(x, y);
        case pow: return std::pow(a->eval(x, y), b->eval(x, y));
        case call1: {
          const double v = a->eval(x, y);
          if (fn == "sin") return std::sin(v);
          if (fn == "cos") return std::cos(v);
          if (fn == "exp") return std::exp(v);
          if (fn == "ln") return std::log(v);
          return std::abs(v);
        }
        case call2: {
          const double u = a->eval(x, y), v = b->eval(x, y);
          return fn == "min" ? std::min(u, v) : std::max(u, v);
        }
      }
      return 0.0;
    }
    bool uses_xy() const {
      if (kind == var_x || kind == var_y) return true;
      return (a && a->uses_xy()) || (b && b->uses_xy());
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError("expression '" + s + "' column " + std::to_string(pos + 1) + ": " + what);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    static std::unique_ptr<Node> make(Node::Kind k, std::unique_ptr<Node> a = {}, std::unique_ptr<Node> b = {}) {
      auto n = std::make_unique<Node>();
      n->kind = k;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }
    std::unique_ptr<Node> sum() {
      auto l = term();
      while (true) {
        if (eat('+')) l = make(Node::add, std::move(l), term());
        else if (eat('-')) l = make(Node::sub, std::move(l), term());
        else return l;
      }
    }
    std::unique_ptr<Node> term() {
      auto l = unary();
      while (true) {
        if (eat('*')) l = make(Node::mul, std::move(l), unary());
        else if (eat('/')) l = make(Node::div, std::move(l), unary());
        else return l;
      }
    }
    std::unique_ptr<Node> unary() {
      if (eat('-')) return make(Node::neg, unary());
      if (eat('+')) return unary();
      return power();
    }
    // right associative, binds tighter than unary minus on its left: -x^2 = -(x^2)
    std::unique_ptr<Node> power() {
      auto base = primary();
      if (eat('^')) return make(Node::pow, std::move(base), unary());
      return base;
    }
    std::unique_ptr<Node> primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end");
      const char c = s[pos];
      if (eat('(')) {
        auto e = sum();
        if (!eat(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = make(Node::number);
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "x") return make(Node::var_x);
        if (id == "y") return make(Node::var_y);
        if (id == "pi") {
          auto n = make(Node::number);
          n->value = M_PI;
          return n;
        }
        const bool one = id == "sin" || id == "cos" || id == "exp" || id == "ln" || id == "abs";
        const bool two = id == "min" || id == "max";
        if (!one && !two) {
          pos = start;
          fail("unknown identifier '" + id + "'");
        }
        if (!eat('(')) fail("expected '(' after " + id);
        auto a = sum();
        std::unique_ptr<Node> b;
        if (two) {
          if (!eat(',')) fail(id + " takes two arguments");
          b = sum();
        }
        if (!eat(')')) fail("expected ')'");
        auto n = make(two ? Node::call2 : Node::call1, std::move(a), std::move(b));
        n->fn = id;
        return n;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
    NodePtr expr() { return NodePtr(sum().release()); }
  };

  std::string text_;
  NodePtr root_;
};

/// One [section] of a configuration document.
class ConfigSection {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  ConfigSection() = default;
  ConfigSection(std::string name, int line) : name_(std::move(name)), line_(line) {}

  const std::string& name() const { return name_; }
  int line() const { return line_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  void set(const std::string& key, std::string value, int line) {
    if (has(key)) throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + qualified(key) + "'");
    entries_[key] = {std::move(value), line};
  }

  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw ConfigError("missing required field '" + qualified(key) + "'" +
                        (line_ > 0 ? " (section at line " + std::to_string(line_) + ")" : ""));
    return it->second;
  }

  std::string str(const std::string& key) const { return entry(key).value; }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  Expression expr(const std::string& key) const {
    const auto& e = entry(key);
    try {
      return Expression::parse(e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(where(key) + ": " + err.what());
    }
  }
  Expression expr(const std::string& key, const std::string& fallback) const {
    return has(key) ? expr(key) : Expression::parse(fallback);
  }

  /// A scalar; position-free expressions such as 0.5*pi are accepted.
  double real(const std::string& key) const {
    const Expression e = expr(key);
    if (e.depends_on_position()) throw ConfigError(where(key) + ": '" + qualified(key) + "' must be a constant");
    const double v = e(0.0, 0.0);
    if (!std::isfinite(v)) throw ConfigError(where(key) + ": '" + qualified(key) + "' is not finite");
    return v;
  }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  long long integer(const std::string& key) const {
    const double v = real(key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(where(key) + ": '" + qualified(key) + "' must be an integer");
    return static_cast<long long>(v);
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(where(key) + ": '" + qualified(key) + "' must be true or false");
  }

  std::string where(const std::string& key) const { return "line " + std::to_string(entry(key).line); }

  /// Rejects keys outside `allowed`.
  void only(const std::set<std::string>& allowed) const {
    for (const auto& [k, e] : entries_)
      if (!allowed.count(k)) throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + qualified(k) + "'");
  }

 private:
  std::string name_;
  int line_ = 0;
  std::map<std::string, Entry> entries_;
};

/// Plain-text key = value document with [section] and [section.sub] headers.
/// '#' starts a comment.
class Config {
 public:
  static Config parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    std::string current;
    c.sections_.emplace(std::string(), ConfigSection("", 0));
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    while (std::getline(in, raw)) {
      ++line;
      if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string s = trim(raw);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated section header");
        current = trim(s.substr(1, s.size() - 2));
        if (current.empty()) throw ConfigError("line " + std::to_string(line) + ": empty section name");
        for (char ch : current)
          if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '-'))
            throw ConfigError("line " + std::to_string(line) + ": bad section name '" + current + "'");
        if (c.sections_.count(current))
          throw ConfigError("line " + std::to_string(line) + ": duplicate section [" + current + "]");
        c.sections_.emplace(current, ConfigSection(current, line));
        c.order_.push_back(current);
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
      if (value.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value for '" + key + "'");
      c.sections_[current].set(key, value, line);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string& section) const { return sections_.count(section) > 0; }

  const ConfigSection& section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end()) throw ConfigError("missing required section [" + name + "]");
    return it->second;
  }

  /// The section if present, else an empty one.
  const ConfigSection& optional(const std::string& name) const {
    static const ConfigSection empty;
    auto it = sections_.find(name);
    return it == sections_.end() ? empty : it->second;
  }

  /// Sections named prefix.<something>, in file order.
  std::vector<const ConfigSection*> children(const std::string& prefix) const {
    std::vector<const ConfigSection*> out;
    for (const auto& n : order_)
      if (n.rfind(prefix + ".", 0) == 0) out.push_back(&sections_.at(n));
    return out;
  }

  std::vector<std::string> section_names() const { return order_; }

 private:
  std::map<std::string, ConfigSection> sections_;
  std::vector<std::string> order_;
};

}  // namespace qgrowth
