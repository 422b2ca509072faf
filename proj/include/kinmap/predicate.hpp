#pragma once

// Domain predicates over C x W: finite boolean combinations of chart
// coordinate inequalities. Clauses read configuration chart coordinates
// ("C", circles normalized to [0, 2*pi)), working-space chart coordinates
// ("W"), or the wrapped difference from the configuration to the plan's
// target configuration ("D", circles in (-pi, pi]).

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinmap/charts.hpp"
#include "kinmap/error.hpp"

namespace kinmap {

enum class Space { C, W, D };
enum class Rel { le, lt, ge, gt, eq };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::C: return "C";
    case Space::W: return "W";
    case Space::D: return "D";
  }
  return "?";
}

inline const char* to_string(Rel r) {
  switch (r) {
    case Rel::le: return "<=";
    case Rel::lt: return "<";
    case Rel::ge: return ">=";
    case Rel::gt: return ">";
    case Rel::eq: return "=";
  }
  return "?";
}

struct PredicateInput {
  const Vec* c = nullptr;
  const Vec* w = nullptr;
  const Vec* d = nullptr;
};

struct Predicate {
  enum class Op { always, clause, all, any, negate };
  Op op = Op::always;
  Space on = Space::C;
  int index = 0;
  Rel rel = Rel::le;
  double bound = 0.0;
  std::vector<Predicate> args;

  static Predicate always() { return {}; }

  static Predicate clause(Space on, int index, Rel rel, double bound) {
    Predicate p;
    p.op = Op::clause;
    p.on = on;
    p.index = index;
    p.rel = rel;
    p.bound = bound;
    return p;
  }

  static Predicate all(std::vector<Predicate> args) {
    Predicate p;
    p.op = Op::all;
    p.args = std::move(args);
    return p;
  }

  static Predicate any(std::vector<Predicate> args) {
    Predicate p;
    p.op = Op::any;
    p.args = std::move(args);
    return p;
  }

  static Predicate negate(Predicate a) {
    Predicate p;
    p.op = Op::negate;
    p.args.push_back(std::move(a));
    return p;
  }

  bool uses(Space s) const {
    if (op == Op::clause) return on == s;
    for (const auto& a : args)
      if (a.uses(s)) return true;
    return false;
  }

  bool operator()(const PredicateInput& in) const {
    switch (op) {
      case Op::always: return true;
      case Op::clause: {
        const Vec* v = on == Space::C ? in.c : on == Space::W ? in.w : in.d;
        require(v != nullptr && index < v->size(), std::string("predicate reads missing coordinate ") + to_string(on) +
                                                       "[" + std::to_string(index) + "]");
        const double x = (*v)[index];
        switch (rel) {
          case Rel::le: return x <= bound;
          case Rel::lt: return x < bound;
          case Rel::ge: return x >= bound;
          case Rel::gt: return x > bound;
          case Rel::eq: return x == bound;
        }
        return false;
      }
      case Op::all:
        for (const auto& a : args)
          if (!a(in)) return false;
        return true;
      case Op::any:
        for (const auto& a : args)
          if (a(in)) return true;
        return false;
      case Op::negate: return !args.front()(in);
    }
    return false;
  }

  /// Copy with clause indices shifted per space (used by product plans).
  Predicate shifted(int dc, int dw, int dd) const {
    Predicate p = *this;
    if (op == Op::clause) p.index += on == Space::C ? dc : on == Space::W ? dw : dd;
    for (auto& a : p.args) a = a.shifted(dc, dw, dd);
    return p;
  }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

inline nlohmann::json predicate_to_json(const Predicate& p) {
  using json = nlohmann::json;
  switch (p.op) {
    case Predicate::Op::always: return json{{"op", "true"}};
    case Predicate::Op::clause:
      return json{{"on", to_string(p.on)}, {"index", p.index}, {"rel", to_string(p.rel)}, {"bound", p.bound}};
    case Predicate::Op::negate: return json{{"op", "not"}, {"arg", predicate_to_json(p.args.front())}};
    case Predicate::Op::all: case Predicate::Op::any: {
      json args = json::array();
      for (const auto& a : p.args) args.push_back(predicate_to_json(a));
      return json{{"op", p.op == Predicate::Op::all ? "all" : "any"}, {"args", args}};
    }
  }
  return json();
}

inline Predicate predicate_from_json(const nlohmann::json& j, const std::string& path) {
  auto fail = [&](const std::string& what) { throw Error(ErrorCode::parse, "field '" + path + "': " + what); };
  if (!j.is_object()) fail("expected an object");
  if (j.contains("op")) {
    const auto& op = j.at("op");
    if (!op.is_string()) fail("op must be a string");
    const std::string name = op.get<std::string>();
    if (name == "true") return Predicate::always();
    if (name == "not") {
      if (!j.contains("arg")) fail("'not' needs arg");
      return Predicate::negate(predicate_from_json(j.at("arg"), path + ".arg"));
    }
    if (name == "all" || name == "any") {
      if (!j.contains("args") || !j.at("args").is_array()) fail("'" + name + "' needs an args array");
      std::vector<Predicate> args;
      for (size_t i = 0; i < j.at("args").size(); ++i)
        args.push_back(predicate_from_json(j.at("args")[i], path + ".args[" + std::to_string(i) + "]"));
      return name == "all" ? Predicate::all(std::move(args)) : Predicate::any(std::move(args));
    }
    fail("unknown op '" + name + "'");
  }
  for (const char* key : {"on", "index", "rel", "bound"})
    if (!j.contains(key)) fail(std::string("clause missing '") + key + "'");
  const std::string on = j.at("on").is_string() ? j.at("on").get<std::string>() : "";
  Space space;
  if (on == "C") space = Space::C;
  else if (on == "W") space = Space::W;
  else if (on == "D") space = Space::D;
  else fail("'on' must be C, W or D");
  const std::string rel = j.at("rel").is_string() ? j.at("rel").get<std::string>() : "";
  Rel r;
  if (rel == "<=") r = Rel::le;
  else if (rel == "<") r = Rel::lt;
  else if (rel == ">=") r = Rel::ge;
  else if (rel == ">") r = Rel::gt;
  else if (rel == "=") r = Rel::eq;
  else fail("'rel' must be one of <= < >= > =");
  if (!j.at("index").is_number_integer() || j.at("index").get<int>() < 0) fail("'index' must be a nonnegative integer");
  if (!j.at("bound").is_number()) fail("'bound' must be a number");
  return Predicate::clause(space, j.at("index").get<int>(), r, j.at("bound").get<double>());
}

}  // namespace kinmap
