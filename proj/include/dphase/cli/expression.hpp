/*******************************************************************************
* Copyright 2026 The dphase Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/


#pragma once

// Scalar expressions in x and y for fields and boundary data:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := ('-' | '+') unary | power
//   power := atom ('^' unary)?
//   atom  := number | x | y | pi | name '(' expr (',' expr)* ')' | '(' expr ')'

#include <dphase/core.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace dphase {

class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view text) {
    Parser p{text};
    Expression e;
    e.text_ = std::string(text);
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size())
      throw InputError("unexpected '" + std::string(1, text[p.pos]) + "' in expression at column " +
                       std::to_string(p.pos + 1));
    return e;
  }

  double operator()(const Point& x) const { return root_->eval(x); }
  const std::string& text() const { return text_; }
  explicit operator bool() const { return root_ != nullptr; }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(const Point& x) const = 0;
  };
  using Ptr = std::shared_ptr<const Node>;

  struct Const : Node {
    double v;
    explicit Const(double value) : v(value) {}
    double eval(const Point&) const override { return v; }
  };
  struct Var : Node {
    int axis;
    explicit Var(int a) : axis(a) {}
    double eval(const Point& x) const override { return x[static_cast<std::size_t>(axis)]; }
  };
  struct Binary : Node {
    char op;
    Ptr l, r;
    Binary(char o, Ptr a, Ptr b) : op(o), l(std::move(a)), r(std::move(b)) {}
    double eval(const Point& x) const override {
      const double a = l->eval(x), b = r->eval(x);
      switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
  };
  struct Call : Node {
    std::function<double(const std::vector<double>&)> fn;
    std::vector<Ptr> args;
    double eval(const Point& x) const override {
      std::vector<double> v;
      v.reserve(args.size());
      for (const auto& a : args) v.push_back(a->eval(x));
      return fn(v);
    }
  };

  struct Parser {
    std::string_view s;
    std::size_t pos = 0;

    void skip() {
      while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    [[noreturn]] void fail(const std::string& what) const {
      throw InputError(what + " in expression at column " + std::to_string(pos + 1));
    }

    Ptr expr() {
      Ptr l = term();
      for (;;) {
        if (eat('+')) l = std::make_shared<Binary>('+', l, term());
        else if (eat('-')) l = std::make_shared<Binary>('-', l, term());
        else return l;
      }
    }
    Ptr term() {
      Ptr l = unary();
      for (;;) {
        if (eat('*')) l = std::make_shared<Binary>('*', l, unary());
        else if (eat('/')) l = std::make_shared<Binary>('/', l, unary());
        else return l;
      }
    }
    Ptr unary() {
      if (eat('-')) return std::make_shared<Binary>('-', std::make_shared<Const>(0.0), unary());
      if (eat('+')) return unary();
      Ptr b = atom();
      if (eat('^')) return std::make_shared<Binary>('^', b, unary());
      return b;
    }
    Ptr atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end");
      if (eat('(')) {
        Ptr e = expr();
        if (!eat(')')) fail("expected ')'");
        return e;
      }
      const char c = s[pos];
      if ((c >= '0' && c <= '9') || c == '.') {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
        if (ec != std::errc()) fail("bad number");
        pos = static_cast<std::size_t>(end - s.data());
        return std::make_shared<Const>(v);
      }
      std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      const std::string name(s.substr(start, pos - start));
      if (name.empty()) fail("unexpected '" + std::string(1, c) + "'");
      if (name == "x") return std::make_shared<Var>(0);
      if (name == "y") return std::make_shared<Var>(1);
      if (name == "pi") return std::make_shared<Const>(std::numbers::pi);
      auto call = std::make_shared<Call>();
      std::size_t arity = 1;
      if (name == "sin") call->fn = [](const auto& v) { return std::sin(v[0]); };
      else if (name == "cos") call->fn = [](const auto& v) { return std::cos(v[0]); };
      else if (name == "tanh") call->fn = [](const auto& v) { return std::tanh(v[0]); };
      else if (name == "exp") call->fn = [](const auto& v) { return std::exp(v[0]); };
      else if (name == "log") call->fn = [](const auto& v) { return std::log(v[0]); };
      else if (name == "sqrt") call->fn = [](const auto& v) { return std::sqrt(v[0]); };
      else if (name == "abs") call->fn = [](const auto& v) { return std::abs(v[0]); };
      else if (name == "min") { call->fn = [](const auto& v) { return std::min(v[0], v[1]); }; arity = 2; }
      else if (name == "max") { call->fn = [](const auto& v) { return std::max(v[0], v[1]); }; arity = 2; }
      else {
        pos = start;
        fail("unknown name '" + name + "'");
      }
      if (!eat('(')) fail("expected '(' after " + name);
      call->args.push_back(expr());
      while (eat(',')) call->args.push_back(expr());
      if (!eat(')')) fail("expected ')'");
      if (call->args.size() != arity) fail(name + " takes " + std::to_string(arity) + " argument(s)");
      return call;
    }
  };

  std::string text_;
  Ptr root_;
};

}  // namespace dphase
