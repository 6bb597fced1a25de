#include "handover/tql.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <stdexcept>

#include "handover/errors.hpp"

namespace handover {

// ---------------------------------------------------------------------------
// Alphabet / PropositionSet

Alphabet::Alphabet(std::initializer_list<std::string_view> names) {
  for (std::string_view n : names) add(n);
}

int Alphabet::add(std::string_view name) {
  if (auto i = index_of(name)) return *i;
  if (names_.size() >= kMaxAtoms) throw Error("alphabet is limited to 32 atoms");
  names_.emplace_back(name);
  return static_cast<int>(names_.size() - 1);
}

std::optional<int> Alphabet::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<std::string> PropositionSet::names(const Alphabet& alphabet) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (contains(static_cast<int>(i))) out.push_back(alphabet.name(static_cast<int>(i)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formula

struct Formula::Node {
  Op op = Op::True;
  std::string name;
  int index = -1;
  int bound = 0;
  std::vector<Formula> children;
};

Formula Formula::make(Node node) { return Formula(std::make_shared<const Node>(std::move(node))); }

namespace {

const Formula& true_formula() {
  static const Formula f = Formula::constant(true);
  return f;
}

}  // namespace

Formula::Formula() : Formula(true_formula()) {}

Formula Formula::constant(bool value) {
  static const Formula yes = make({Op::True, {}, -1, 0, {}});
  static const Formula no = make({Op::False, {}, -1, 0, {}});
  return value ? yes : no;
}

Formula Formula::atom(std::string name) {
  Node n;
  n.op = Op::Atom;
  n.name = std::move(name);
  return make(std::move(n));
}

Formula Formula::negation(Formula f) { return make({Op::Not, {}, -1, 0, {std::move(f)}}); }

Formula Formula::conjunction(Formula lhs, Formula rhs) {
  return make({Op::And, {}, -1, 0, {std::move(lhs), std::move(rhs)}});
}

Formula Formula::disjunction(Formula lhs, Formula rhs) {
  return make({Op::Or, {}, -1, 0, {std::move(lhs), std::move(rhs)}});
}

Formula Formula::next(Formula f) { return make({Op::Next, {}, -1, 0, {std::move(f)}}); }

Formula Formula::finally(int bound, Formula f) {
  if (bound < 0) throw std::invalid_argument("negative bound");
  return make({Op::Finally, {}, -1, bound, {std::move(f)}});
}

Formula Formula::globally(int bound, Formula f) {
  if (bound < 0) throw std::invalid_argument("negative bound");
  return make({Op::Globally, {}, -1, bound, {std::move(f)}});
}

Formula Formula::until(int bound, Formula lhs, Formula rhs) {
  if (bound < 0) throw std::invalid_argument("negative bound");
  return make({Op::Until, {}, -1, bound, {std::move(lhs), std::move(rhs)}});
}

Op Formula::op() const noexcept { return node_->op; }
const std::string& Formula::atom_name() const noexcept { return node_->name; }
int Formula::atom_index() const noexcept { return node_->index; }
int Formula::bound() const noexcept { return node_->bound; }
const Formula& Formula::lhs() const { return node_->children.at(0); }
const Formula& Formula::rhs() const { return node_->children.at(1); }

std::size_t Formula::depth() const noexcept {
  std::size_t d = 0;
  for (const Formula& c : node_->children) d = std::max(d, c.depth());
  return d + 1;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  return x.op == y.op && x.name == y.name && x.bound == y.bound && x.children == y.children;
}

std::size_t hash_value(const Formula& f) noexcept {
  auto mix = [](std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  };
  std::size_t h = mix(static_cast<std::size_t>(f.op()), static_cast<std::size_t>(f.bound()));
  switch (f.op()) {
    case Op::Atom: return mix(h, std::hash<std::string>{}(f.atom_name()));
    case Op::Not:
    case Op::Next:
    case Op::Finally:
    case Op::Globally: return mix(h, hash_value(f.lhs()));
    case Op::And:
    case Op::Or:
    case Op::Until: return mix(mix(h, hash_value(f.lhs())), hash_value(f.rhs()));
    default: return h;
  }
}

Formula bind(const Formula& f, const Alphabet& alphabet) {
  Formula::Node n = *f.node_;
  if (n.op == Op::Atom) {
    auto index = alphabet.index_of(n.name);
    if (!index) throw UnknownAtom(n.name);
    n.index = *index;
    return Formula::make(std::move(n));
  }
  for (Formula& c : n.children) c = bind(c, alphabet);
  return Formula::make(std::move(n));
}

std::vector<std::string> atom_names(const Formula& f) {
  std::vector<std::string> out;
  auto visit = [&out](const Formula& g, auto& self) -> void {
    if (g.op() == Op::Atom) {
      if (std::find(out.begin(), out.end(), g.atom_name()) == out.end()) {
        out.push_back(g.atom_name());
      }
      return;
    }
    if (g.op() == Op::True || g.op() == Op::False) return;
    self(g.lhs(), self);
    if (g.op() == Op::And || g.op() == Op::Or || g.op() == Op::Until) self(g.rhs(), self);
  };
  visit(f, visit);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

constexpr int kMaxBound = 1'000'000;

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw QuerySyntaxError(message, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek_char(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  // Identifier at the cursor without consuming it.
  std::string_view peek_ident() {
    skip_ws();
    std::size_t end = pos_;
    if (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) {
      ++end;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
        ++end;
      }
    }
    return text_.substr(pos_, end - pos_);
  }

  // True when the cursor is at the bounded operator `name[`.
  bool at_bounded_op(std::string_view name) {
    if (peek_ident() != name) return false;
    std::size_t p = pos_ + name.size();
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return p < text_.size() && text_[p] == '[';
  }

  void expect(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) != token) fail("expected '" + std::string(token) + "'");
    pos_ += token.size();
  }

  int parse_bound() {
    expect("[");
    expect("<=");
    skip_ws();
    const std::size_t start = pos_;
    long long value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = value * 10 + (text_[pos_] - '0');
      if (value > kMaxBound) fail("bound too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected a non-negative integer bound");
    expect("]");
    return static_cast<int>(value);
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (peek_char('|')) {
      ++pos_;
      lhs = Formula::disjunction(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_until();
    while (peek_char('&')) {
      ++pos_;
      lhs = Formula::conjunction(std::move(lhs), parse_until());
    }
    return lhs;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    if (!at_bounded_op("U")) return lhs;
    pos_ += 1;
    const int k = parse_bound();
    Formula until = Formula::until(k, std::move(lhs), parse_unary());
    if (at_bounded_op("U")) throw NonChainingUntil(pos_);
    return until;
  }

  Formula parse_unary() {
    if (peek_char('!')) {
      ++pos_;
      return Formula::negation(parse_unary());
    }
    const std::string_view ident = peek_ident();
    if (ident == "X") {
      pos_ += 1;
      return Formula::next(parse_unary());
    }
    if (ident == "F" || ident == "G") {
      if (!at_bounded_op(ident)) fail("expected '[<=k]' after " + std::string(ident));
      const bool eventually = ident == "F";
      pos_ += 1;
      const int k = parse_bound();
      Formula operand = parse_unary();
      return eventually ? Formula::finally(k, std::move(operand))
                        : Formula::globally(k, std::move(operand));
    }
    return parse_atom();
  }

  Formula parse_atom() {
    if (peek_char('(')) {
      ++pos_;
      Formula inner = parse_or();
      expect(")");
      return inner;
    }
    const std::string_view ident = peek_ident();
    if (ident.empty()) {
      if (pos_ >= text_.size()) fail("unexpected end of query");
      fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    }
    if (ident == "U") fail("U[<=k] needs a left operand");
    pos_ += ident.size();
    if (ident == "true") return Formula::constant(true);
    if (ident == "false") return Formula::constant(false);
    return Formula::atom(std::string(ident));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int precedence(Op op) {
  switch (op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Until: return 3;
    case Op::Not:
    case Op::Next:
    case Op::Finally:
    case Op::Globally: return 4;
    default: return 5;
  }
}

void render(const Formula& f, std::string& out);

void render_operand(const Formula& f, bool parenthesize, std::string& out) {
  if (parenthesize) out += '(';
  render(f, out);
  if (parenthesize) out += ')';
}

void render(const Formula& f, std::string& out) {
  const int p = precedence(f.op());
  switch (f.op()) {
    case Op::True: out += "true"; return;
    case Op::False: out += "false"; return;
    case Op::Atom: out += f.atom_name(); return;
    case Op::Not:
      out += '!';
      render_operand(f.lhs(), precedence(f.lhs().op()) < p, out);
      return;
    case Op::Next:
      out += "X ";
      render_operand(f.lhs(), precedence(f.lhs().op()) < p, out);
      return;
    case Op::Finally:
    case Op::Globally:
      out += f.op() == Op::Finally ? "F[<=" : "G[<=";
      out += std::to_string(f.bound());
      out += "] ";
      render_operand(f.lhs(), precedence(f.lhs().op()) < p, out);
      return;
    case Op::Until:
      render_operand(f.lhs(), precedence(f.lhs().op()) <= p, out);
      out += " U[<=" + std::to_string(f.bound()) + "] ";
      render_operand(f.rhs(), precedence(f.rhs().op()) <= p, out);
      return;
    case Op::And:
    case Op::Or:
      render_operand(f.lhs(), precedence(f.lhs().op()) < p, out);
      out += f.op() == Op::And ? " & " : " | ";
      render_operand(f.rhs(), precedence(f.rhs().op()) <= p, out);
      return;
  }
}

}  // namespace

Formula parse_query(std::string_view text) { return QueryParser(text).parse(); }

std::string to_string(const Formula& f) {
  std::string out;
  render(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

// next_true[i] = smallest j >= i with v[j], or v.size() when none.
std::vector<std::size_t> next_true(const std::vector<bool>& v) {
  std::vector<std::size_t> out(v.size() + 1, v.size());
  for (std::size_t i = v.size(); i-- > 0;) out[i] = v[i] ? i : out[i + 1];
  return out;
}

std::vector<bool> negated(std::vector<bool> v) {
  v.flip();
  return v;
}

// Smallest witness of `lhs U[<=k] rhs` at index i, or nullopt.
std::optional<std::size_t> until_witness(const std::vector<std::size_t>& next_rhs,
                                         const std::vector<std::size_t>& next_not_lhs,
                                         std::size_t i, int k, std::size_t last) {
  const std::size_t limit = std::min(last, i + static_cast<std::size_t>(k));
  const std::size_t j = next_rhs[i];
  if (j > limit) return std::nullopt;
  if (next_not_lhs[i] < j) return std::nullopt;
  return j;
}

}  // namespace

std::vector<bool> eval_all(const Formula& f, TraceView trace) {
  const std::size_t len = trace.size();
  if (len == 0) return {};
  const std::size_t last = len - 1;
  auto window_end = [last](std::size_t i, int k) {
    return std::min(last, i + static_cast<std::size_t>(k));
  };

  switch (f.op()) {
    case Op::True: return std::vector<bool>(len, true);
    case Op::False: return std::vector<bool>(len, false);
    case Op::Atom: {
      if (f.atom_index() < 0) throw std::logic_error("atom '" + f.atom_name() + "' is unbound");
      std::vector<bool> out(len);
      for (std::size_t i = 0; i < len; ++i) out[i] = trace[i].contains(f.atom_index());
      return out;
    }
    case Op::Not: return negated(eval_all(f.lhs(), trace));
    case Op::And:
    case Op::Or: {
      auto a = eval_all(f.lhs(), trace);
      const auto b = eval_all(f.rhs(), trace);
      for (std::size_t i = 0; i < len; ++i) a[i] = f.op() == Op::And ? (a[i] && b[i]) : (a[i] || b[i]);
      return a;
    }
    case Op::Next: {
      const auto c = eval_all(f.lhs(), trace);
      std::vector<bool> out(len, false);
      for (std::size_t i = 0; i + 1 < len; ++i) out[i] = c[i + 1];
      return out;
    }
    case Op::Finally: {
      const auto nt = next_true(eval_all(f.lhs(), trace));
      std::vector<bool> out(len);
      for (std::size_t i = 0; i < len; ++i) out[i] = nt[i] <= window_end(i, f.bound());
      return out;
    }
    case Op::Globally: {
      const auto nf = next_true(negated(eval_all(f.lhs(), trace)));
      std::vector<bool> out(len);
      for (std::size_t i = 0; i < len; ++i) out[i] = nf[i] > window_end(i, f.bound());
      return out;
    }
    case Op::Until: {
      const auto next_rhs = next_true(eval_all(f.rhs(), trace));
      const auto next_not_lhs = next_true(negated(eval_all(f.lhs(), trace)));
      std::vector<bool> out(len);
      for (std::size_t i = 0; i < len; ++i) {
        out[i] = until_witness(next_rhs, next_not_lhs, i, f.bound(), last).has_value();
      }
      return out;
    }
  }
  return {};
}

bool eval(const Formula& f, TraceView trace, std::size_t i) {
  if (i >= trace.size()) {
    throw std::out_of_range("index " + std::to_string(i) + " outside trace of length " +
                            std::to_string(trace.size()));
  }
  return eval_all(f, trace)[i];
}

std::optional<std::size_t> earliest_match(const Formula& f, TraceView trace) {
  if (trace.empty() || !eval_all(f, trace)[0]) return std::nullopt;
  const std::size_t last = trace.size() - 1;
  if (f.op() == Op::Finally) {
    return next_true(eval_all(f.lhs(), trace))[0];
  }
  if (f.op() == Op::Until) {
    const auto next_rhs = next_true(eval_all(f.rhs(), trace));
    const auto next_not_lhs = next_true(negated(eval_all(f.lhs(), trace)));
    return until_witness(next_rhs, next_not_lhs, 0, f.bound(), last);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Progression

namespace {

Formula simplify_not(Formula a) {
  if (a.op() == Op::True) return Formula::constant(false);
  if (a.op() == Op::False) return Formula::constant(true);
  if (a.op() == Op::Not) return a.lhs();
  return Formula::negation(std::move(a));
}

Formula simplify_and(Formula a, Formula b) {
  if (a.op() == Op::False || b.op() == Op::False) return Formula::constant(false);
  if (a.op() == Op::True) return b;
  if (b.op() == Op::True) return a;
  if (a == b) return a;
  return Formula::conjunction(std::move(a), std::move(b));
}

Formula simplify_or(Formula a, Formula b) {
  if (a.op() == Op::True || b.op() == Op::True) return Formula::constant(true);
  if (a.op() == Op::False) return b;
  if (b.op() == Op::False) return a;
  if (a == b) return a;
  return Formula::disjunction(std::move(a), std::move(b));
}

}  // namespace

Formula progress(const Formula& f, PropositionSet state, bool last) {
  const bool more = !last;
  switch (f.op()) {
    case Op::True:
    case Op::False: return f;
    case Op::Atom:
      if (f.atom_index() < 0) throw std::logic_error("atom '" + f.atom_name() + "' is unbound");
      return Formula::constant(state.contains(f.atom_index()));
    case Op::Not: return simplify_not(progress(f.lhs(), state, last));
    case Op::And:
      return simplify_and(progress(f.lhs(), state, last), progress(f.rhs(), state, last));
    case Op::Or:
      return simplify_or(progress(f.lhs(), state, last), progress(f.rhs(), state, last));
    case Op::Next: return more ? f.lhs() : Formula::constant(false);
    case Op::Finally: {
      Formula later = more && f.bound() > 0 ? Formula::finally(f.bound() - 1, f.lhs())
                                            : Formula::constant(false);
      return simplify_or(progress(f.lhs(), state, last), std::move(later));
    }
    case Op::Globally: {
      Formula later = more && f.bound() > 0 ? Formula::globally(f.bound() - 1, f.lhs())
                                            : Formula::constant(true);
      return simplify_and(progress(f.lhs(), state, last), std::move(later));
    }
    case Op::Until: {
      Formula later = more && f.bound() > 0 ? Formula::until(f.bound() - 1, f.lhs(), f.rhs())
                                            : Formula::constant(false);
      return simplify_or(progress(f.rhs(), state, last),
                         simplify_and(progress(f.lhs(), state, last), std::move(later)));
    }
  }
  return f;
}

}  // namespace handover
