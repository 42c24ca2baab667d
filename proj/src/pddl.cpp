#include "bciassist/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>
#include <variant>

#include "bciassist/common.hpp"

namespace bciassist::pddl {

const ActionSchema* Domain::find_action(const std::string& name) const {
  for (const auto& a : actions) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::set<std::string> Domain::static_predicates() const {
  std::set<std::string> out;
  for (const auto& [name, _] : predicates) out.insert(name);
  for (const auto& a : actions) {
    for (const auto& e : a.add) out.erase(e.predicate);
    for (const auto& e : a.del) out.erase(e.predicate);
  }
  return out;
}

std::string GroundAtom::str() const {
  std::string s = "(" + predicate;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

std::map<std::string, std::string> all_objects(const Domain& d, const Problem& p) {
  auto out = d.constants;
  for (const auto& [name, type] : p.objects) out[name] = type;
  return out;
}

namespace {

struct SExpr {
  std::variant<std::string, std::vector<SExpr>> value;
  int line = 0;
  int col = 0;

  bool is_atom() const { return value.index() == 0; }
  const std::string& atom() const { return std::get<std::string>(value); }
  const std::vector<SExpr>& list() const { return std::get<std::vector<SExpr>>(value); }
};

[[noreturn]] void fail(const SExpr& at, const std::string& msg) {
  throw Error(ErrorCode::parse_error, std::to_string(at.line) + ":" +
                                          std::to_string(at.col) + ": " + msg);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  SExpr read_document() {
    skip_space();
    if (pos_ >= text_.size()) error("empty input");
    SExpr e = read();
    skip_space();
    if (pos_ < text_.size()) error("trailing input after top-level form");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& msg) {
    throw Error(ErrorCode::parse_error,
                std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg);
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_space();
    if (pos_ >= text_.size()) error("unexpected end of input");
    SExpr e;
    e.line = line_;
    e.col = col_;
    if (text_[pos_] == ')') error("unexpected ')'");
    if (text_[pos_] == '(') {
      advance();
      std::vector<SExpr> items;
      for (;;) {
        skip_space();
        if (pos_ >= text_.size()) error("unbalanced '(' opened at " +
                                        std::to_string(e.line) + ":" +
                                        std::to_string(e.col));
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        items.push_back(read());
      }
      e.value = std::move(items);
      return e;
    }
    std::string tok;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' ||
          c == ';') {
        break;
      }
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      advance();
    }
    e.value = std::move(tok);
    return e;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_var(const std::string& s) { return !s.empty() && s[0] == '?'; }

bool head_is(const SExpr& e, const char* name) {
  return !e.is_atom() && !e.list().empty() && e.list()[0].is_atom() &&
         e.list()[0].atom() == name;
}

const std::string& expect_atom(const SExpr& e, const char* what) {
  if (!e.is_atom()) fail(e, std::string("expected ") + what);
  return e.atom();
}

const std::vector<SExpr>& expect_list(const SExpr& e, const char* what) {
  if (e.is_atom()) fail(e, std::string("expected ") + what);
  return e.list();
}

// "a b - t c" -> [(a,t), (b,t), (c,object)]
std::vector<std::pair<TypedName, const SExpr*>> typed_list(
    const std::vector<SExpr>& items, std::size_t first) {
  std::vector<std::pair<TypedName, const SExpr*>> out;
  std::vector<const SExpr*> pending;
  for (std::size_t i = first; i < items.size(); ++i) {
    const auto& tok = expect_atom(items[i], "name in typed list");
    if (tok == "-") {
      if (i + 1 >= items.size()) fail(items[i], "missing type after '-'");
      const auto& type = expect_atom(items[i + 1], "type name");
      if (pending.empty()) fail(items[i], "'-' without preceding names");
      for (const auto* p : pending) out.push_back({{p->atom(), type}, p});
      pending.clear();
      ++i;
    } else {
      pending.push_back(&items[i]);
    }
  }
  for (const auto* p : pending) out.push_back({{p->atom(), TypeHierarchy::kRoot}, p});
  return out;
}

struct Scope {
  const Domain& domain;
  const std::map<std::string, std::string>* objects = nullptr;  // problem objects
  std::map<std::string, std::string> vars;                     // ?v -> type

  std::optional<std::string> type_of(const std::string& term) const {
    if (is_var(term)) {
      if (auto it = vars.find(term); it != vars.end()) return it->second;
      return std::nullopt;
    }
    if (auto it = domain.constants.find(term); it != domain.constants.end()) {
      return it->second;
    }
    if (objects) {
      if (auto it = objects->find(term); it != objects->end()) return it->second;
    }
    return std::nullopt;
  }
};

AtomPattern parse_atom(const SExpr& e, const Scope& scope) {
  const auto& items = expect_list(e, "atom");
  if (items.empty()) fail(e, "empty atom");
  AtomPattern atom;
  atom.predicate = expect_atom(items[0], "predicate name");
  auto pit = scope.domain.predicates.find(atom.predicate);
  if (pit == scope.domain.predicates.end()) {
    fail(items[0], "undeclared predicate '" + atom.predicate + "'");
  }
  const auto& decl = pit->second;
  if (items.size() - 1 != decl.params.size()) {
    fail(e, "arity mismatch for '" + atom.predicate + "': expected " +
                std::to_string(decl.params.size()) + ", got " +
                std::to_string(items.size() - 1));
  }
  for (std::size_t i = 1; i < items.size(); ++i) {
    const auto& term = expect_atom(items[i], "term");
    auto type = scope.type_of(term);
    if (!type) {
      fail(items[i], std::string(is_var(term) ? "unbound variable '"
                                               : "undeclared object '") +
                         term + "'");
    }
    const auto& want = decl.params[i - 1].type;
    const auto& types = scope.domain.types;
    if (!types.is_subtype(*type, want) && !types.is_subtype(want, *type)) {
      fail(items[i], "type mismatch: '" + term + "' is " + *type + ", '" +
                         atom.predicate + "' expects " + want);
    }
    atom.args.push_back(term);
  }
  return atom;
}

Equality parse_equality(const SExpr& e, const Scope& scope, bool negated) {
  const auto& items = e.list();
  if (items.size() != 3) fail(e, "'=' takes two terms");
  Equality eq{expect_atom(items[1], "term"), expect_atom(items[2], "term"), negated};
  for (const auto* t : {&eq.lhs, &eq.rhs}) {
    if (!scope.type_of(*t)) fail(e, "unknown term '" + *t + "' in equality");
  }
  return eq;
}

void parse_condition(const SExpr& e, const Scope& scope, Condition& out) {
  if (e.is_atom()) fail(e, "expected condition");
  const auto& items = e.list();
  if (items.empty()) return;  // ()
  if (head_is(e, "and")) {
    for (std::size_t i = 1; i < items.size(); ++i) parse_condition(items[i], scope, out);
  } else if (head_is(e, "=")) {
    out.equalities.push_back(parse_equality(e, scope, false));
  } else if (head_is(e, "not")) {
    if (items.size() != 2 || !head_is(items[1], "=")) {
      fail(e, "negation is only supported around equality");
    }
    out.equalities.push_back(parse_equality(items[1], scope, true));
  } else if (head_is(e, "or") || head_is(e, "forall") || head_is(e, "when") ||
             head_is(e, "imply") || head_is(e, "exists")) {
    fail(e, "unsupported construct '" + items[0].atom() + "'");
  } else {
    out.atoms.push_back(parse_atom(e, scope));
  }
}

void parse_effect(const SExpr& e, const Scope& scope, ActionSchema& action) {
  if (e.is_atom()) fail(e, "expected effect");
  const auto& items = e.list();
  if (items.empty()) return;
  if (head_is(e, "and")) {
    for (std::size_t i = 1; i < items.size(); ++i) parse_effect(items[i], scope, action);
  } else if (head_is(e, "not")) {
    if (items.size() != 2) fail(e, "malformed negative effect");
    action.del.push_back(parse_atom(items[1], scope));
  } else if (head_is(e, "when") || head_is(e, "forall") || head_is(e, "increase")) {
    fail(e, "unsupported effect '" + items[0].atom() + "'");
  } else {
    action.add.push_back(parse_atom(e, scope));
  }
}

void check_type(const Domain& d, const std::string& type, const SExpr& at) {
  if (!d.types.contains(type)) fail(at, "undeclared type '" + type + "'");
}

void parse_types(const SExpr& section, Domain& d) {
  auto entries = typed_list(section.list(), 1);
  // Parents may be declared after their children.
  std::map<std::string, std::string> parent;
  for (const auto& [tn, _] : entries) parent[tn.name] = tn.type;
  std::set<std::string> added;
  std::function<void(const std::string&, int)> add = [&](const std::string& t, int depth) {
    if (d.types.contains(t)) return;
    if (depth > 64) fail(section, "cyclic type hierarchy at '" + t + "'");
    auto it = parent.find(t);
    const std::string p = it == parent.end() ? TypeHierarchy::kRoot : it->second;
    add(p, depth + 1);
    d.types.add(t, p);
  };
  for (const auto& [tn, _] : entries) add(tn.name, 0);
}

ActionSchema parse_action(const SExpr& e, const Domain& d) {
  const auto& items = e.list();
  if (items.size() < 2) fail(e, "action without name");
  ActionSchema a;
  a.name = expect_atom(items[1], "action name");
  Scope scope{d, nullptr, {}};
  const SExpr* pre = nullptr;
  const SExpr* eff = nullptr;
  for (std::size_t i = 2; i < items.size(); i += 2) {
    const auto& key = expect_atom(items[i], "action keyword");
    if (i + 1 >= items.size()) fail(items[i], "missing value for " + key);
    const auto& val = items[i + 1];
    if (key == ":parameters") {
      for (const auto& [tn, at] : typed_list(expect_list(val, "parameter list"), 0)) {
        if (!is_var(tn.name)) fail(*at, "parameter '" + tn.name + "' must start with '?'");
        check_type(d, tn.type, *at);
        if (scope.vars.count(tn.name)) fail(*at, "duplicate parameter '" + tn.name + "'");
        scope.vars[tn.name] = tn.type;
        a.params.push_back(tn);
      }
    } else if (key == ":precondition") {
      pre = &val;
    } else if (key == ":effect") {
      eff = &val;
    } else {
      fail(items[i], "unknown action keyword '" + key + "'");
    }
  }
  if (pre) parse_condition(*pre, scope, a.precondition);
  if (eff) parse_effect(*eff, scope, a);
  return a;
}

Goal parse_goal(const SExpr& e, Scope scope) {
  Goal goal;
  const SExpr* body = &e;
  if (head_is(e, "exists")) {
    const auto& items = e.list();
    if (items.size() != 3) fail(e, "malformed exists");
    for (const auto& [tn, at] : typed_list(expect_list(items[1], "variable list"), 0)) {
      if (!is_var(tn.name)) fail(*at, "quantified variable must start with '?'");
      check_type(scope.domain, tn.type, *at);
      scope.vars[tn.name] = tn.type;
      goal.exists.push_back({tn.name, tn.type, std::nullopt});
    }
    body = &items[2];
  }
  parse_condition(*body, scope, goal.condition);
  return goal;
}

}  // namespace

Domain parse_domain(const std::string& text) {
  Reader reader(text);
  const SExpr doc = reader.read_document();
  if (!head_is(doc, "define")) fail(doc, "expected (define ...)");
  const auto& items = doc.list();
  Domain d;
  if (items.size() < 2 || !head_is(items[1], "domain") || items[1].list().size() != 2) {
    fail(doc, "expected (domain <name>)");
  }
  d.name = expect_atom(items[1].list()[1], "domain name");
  for (std::size_t i = 2; i < items.size(); ++i) {
    const auto& sec = items[i];
    const auto& list = expect_list(sec, "domain section");
    if (list.empty()) fail(sec, "empty section");
    const auto& key = expect_atom(list[0], "section keyword");
    if (key == ":requirements") {
      for (std::size_t j = 1; j < list.size(); ++j) {
        const auto& r = expect_atom(list[j], "requirement");
        if (r != ":strips" && r != ":typing" && r != ":equality") {
          fail(list[j], "unsupported requirement '" + r + "'");
        }
      }
    } else if (key == ":types") {
      parse_types(sec, d);
    } else if (key == ":constants") {
      for (const auto& [tn, at] : typed_list(list, 1)) {
        check_type(d, tn.type, *at);
        d.constants[tn.name] = tn.type;
      }
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < list.size(); ++j) {
        const auto& p = expect_list(list[j], "predicate declaration");
        if (p.empty()) fail(list[j], "empty predicate declaration");
        PredicateDecl decl;
        decl.name = expect_atom(p[0], "predicate name");
        for (const auto& [tn, at] : typed_list(p, 1)) {
          check_type(d, tn.type, *at);
          decl.params.push_back(tn);
        }
        d.predicates[decl.name] = std::move(decl);
      }
    } else if (key == ":action") {
      d.actions.push_back(parse_action(sec, d));
    } else {
      fail(list[0], "unsupported domain section '" + key + "'");
    }
  }
  return d;
}

Problem parse_problem(const std::string& text, const Domain& domain) {
  Reader reader(text);
  const SExpr doc = reader.read_document();
  if (!head_is(doc, "define")) fail(doc, "expected (define ...)");
  const auto& items = doc.list();
  Problem p;
  if (items.size() < 2 || !head_is(items[1], "problem") || items[1].list().size() != 2) {
    fail(doc, "expected (problem <name>)");
  }
  p.name = expect_atom(items[1].list()[1], "problem name");
  const SExpr* goal = nullptr;
  const SExpr* init = nullptr;
  for (std::size_t i = 2; i < items.size(); ++i) {
    const auto& sec = items[i];
    const auto& list = expect_list(sec, "problem section");
    if (list.empty()) fail(sec, "empty section");
    const auto& key = expect_atom(list[0], "section keyword");
    if (key == ":domain") {
      if (list.size() != 2) fail(sec, "expected (:domain <name>)");
      p.domain_name = expect_atom(list[1], "domain name");
      if (p.domain_name != domain.name) {
        fail(list[1], "problem is for domain '" + p.domain_name + "', loaded '" +
                          domain.name + "'");
      }
    } else if (key == ":objects") {
      for (const auto& [tn, at] : typed_list(list, 1)) {
        check_type(domain, tn.type, *at);
        if (domain.constants.count(tn.name)) fail(*at, "object shadows constant '" + tn.name + "'");
        p.objects[tn.name] = tn.type;
      }
    } else if (key == ":init") {
      init = &sec;
    } else if (key == ":goal") {
      if (list.size() != 2) fail(sec, "expected (:goal <condition>)");
      goal = &list[1];
    } else {
      fail(list[0], "unsupported problem section '" + key + "'");
    }
  }
  Scope scope{domain, &p.objects, {}};
  if (init) {
    const auto& list = init->list();
    for (std::size_t j = 1; j < list.size(); ++j) {
      if (head_is(list[j], "=") || head_is(list[j], "not")) {
        fail(list[j], "only positive ground atoms are allowed in :init");
      }
      AtomPattern a = parse_atom(list[j], scope);
      p.init.insert(GroundAtom{a.predicate, a.args});
    }
  }
  if (goal) p.goal = parse_goal(*goal, scope);
  return p;
}

Goal parse_goal_formula(const std::string& text, const Domain& domain,
                        const std::vector<TypedName>& free_vars,
                        const std::map<std::string, std::string>* objects) {
  Reader reader(text);
  const SExpr doc = reader.read_document();
  Scope scope{domain, objects, {}};
  for (const auto& v : free_vars) {
    if (!is_var(v.name)) fail(doc, "free variable '" + v.name + "' must start with '?'");
    check_type(domain, v.type, doc);
    scope.vars[v.name] = v.type;
  }
  return parse_goal(doc, scope);
}

std::string render(const Goal& goal) {
  std::ostringstream os;
  for (const auto& v : goal.exists) {
    os << "exists " << v.name;
    if (v.candidates) {
      os << " in {";
      for (std::size_t i = 0; i < v.candidates->size(); ++i) {
        os << (i ? ", " : "") << (*v.candidates)[i];
      }
      os << "}";
    } else {
      os << " - " << v.type;
    }
    os << ". ";
  }
  bool first = true;
  for (const auto& a : goal.condition.atoms) {
    os << (first ? "" : " & ") << "(" << a.predicate;
    for (const auto& arg : a.args) os << " " << arg;
    os << ")";
    first = false;
  }
  for (const auto& e : goal.condition.equalities) {
    os << (first ? "" : " & ") << (e.negated ? "(not (= " : "(= ") << e.lhs << " "
       << e.rhs << (e.negated ? "))" : ")");
    first = false;
  }
  if (first) os << "true";
  return os.str();
}

std::string to_pddl(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name << ")\n  (:domain " << p.domain_name << ")\n";
  os << "  (:objects";
  for (const auto& [name, type] : p.objects) os << "\n    " << name << " - " << type;
  os << ")\n  (:init";
  for (const auto& a : p.init) os << "\n    " << a.str();
  os << ")\n  (:goal ";
  std::string body = "(and";
  for (const auto& a : p.goal.condition.atoms) {
    body += " (" + a.predicate;
    for (const auto& arg : a.args) body += " " + arg;
    body += ")";
  }
  for (const auto& e : p.goal.condition.equalities) {
    body += e.negated ? " (not (= " + e.lhs + " " + e.rhs + "))"
                      : " (= " + e.lhs + " " + e.rhs + ")";
  }
  body += ")";
  if (p.goal.exists.empty()) {
    os << body;
  } else {
    os << "(exists (";
    for (std::size_t i = 0; i < p.goal.exists.size(); ++i) {
      os << (i ? " " : "") << p.goal.exists[i].name << " - " << p.goal.exists[i].type;
    }
    os << ") " << body << ")";
  }
  os << "))\n";
  return os.str();
}

}  // namespace bciassist::pddl
