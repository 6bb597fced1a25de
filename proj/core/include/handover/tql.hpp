#pragma once

// Bounded temporal queries over finite traces of proposition sets.
//
// Grammar (whitespace insignificant, tightest binding first: unary, U, &, |):
//
//   formula := or
//   or      := and ('|' and)*
//   and     := until ('&' until)*
//   until   := unary ('U[<=' INT ']' unary)?      -- does not chain
//   unary   := '!' unary | 'X' unary | 'F[<=' INT ']' unary
//            | 'G[<=' INT ']' unary | atom
//   atom    := IDENT | 'true' | 'false' | '(' formula ')'
//
// Semantics on a trace of length n+1 at index i: X is a strong next
// (false at i = n), F/G/U quantify over [i, min(i+k, n)], and G is
// optimistic about steps cut off by the end of the trace.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace handover {

/// Maps atom names to bit positions of a PropositionSet.
class Alphabet {
 public:
  static constexpr std::size_t kMaxAtoms = 32;

  Alphabet() = default;
  Alphabet(std::initializer_list<std::string_view> names);

  /// Returns the index of `name`, appending it when absent.
  int add(std::string_view name);
  std::optional<int> index_of(std::string_view name) const noexcept;
  const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

/// Set of atoms true in one state.
class PropositionSet {
 public:
  constexpr PropositionSet() = default;
  constexpr explicit PropositionSet(std::uint32_t bits) : bits_(bits) {}

  void insert(int atom) noexcept { bits_ |= 1U << atom; }
  void erase(int atom) noexcept { bits_ &= ~(1U << atom); }
  bool contains(int atom) const noexcept { return ((bits_ >> atom) & 1U) != 0; }
  std::uint32_t bits() const noexcept { return bits_; }
  bool empty() const noexcept { return bits_ == 0; }

  /// Names of the member atoms in alphabet order.
  std::vector<std::string> names(const Alphabet& alphabet) const;

  friend bool operator==(PropositionSet, PropositionSet) = default;

 private:
  std::uint32_t bits_ = 0;
};

using TraceView = std::span<const PropositionSet>;

enum class Op : std::uint8_t { True, False, Atom, Not, And, Or, Next, Finally, Globally, Until };

/// Immutable formula tree with shared subterms.
class Formula {
 public:
  /// The constant `true`.
  Formula();

  static Formula constant(bool value);
  static Formula atom(std::string name);
  static Formula negation(Formula f);
  static Formula conjunction(Formula lhs, Formula rhs);
  static Formula disjunction(Formula lhs, Formula rhs);
  static Formula next(Formula f);
  static Formula finally(int bound, Formula f);
  static Formula globally(int bound, Formula f);
  static Formula until(int bound, Formula lhs, Formula rhs);

  Op op() const noexcept;
  const std::string& atom_name() const noexcept;
  /// Alphabet index after bind(); -1 while unbound.
  int atom_index() const noexcept;
  int bound() const noexcept;
  /// Operand of a unary operator, or the left operand of a binary one.
  const Formula& lhs() const;
  const Formula& rhs() const;

  bool is_constant() const noexcept { return op() == Op::True || op() == Op::False; }
  std::size_t depth() const noexcept;

  /// Structural equality; atom indices are ignored.
  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Formula make(Node node);

  std::shared_ptr<const Node> node_;

  friend Formula bind(const Formula& f, const Alphabet& alphabet);
};

/// Throws QuerySyntaxError, or NonChainingUntil for `a U[<=1] b U[<=1] c`.
Formula parse_query(std::string_view text);

/// Structural hash consistent with operator==.
std::size_t hash_value(const Formula& f) noexcept;

/// Minimal-parenthesis rendering that parses back to the same tree.
std::string to_string(const Formula& f);

/// Resolves atom names against `alphabet`. Throws UnknownAtom.
Formula bind(const Formula& f, const Alphabet& alphabet);

/// Collects the atom names of `f` in first-occurrence order.
std::vector<std::string> atom_names(const Formula& f);

/// Truth value of a bound formula at every index of the trace.
std::vector<bool> eval_all(const Formula& f, TraceView trace);

/// Truth value at index i. Throws std::out_of_range for i outside the trace.
bool eval(const Formula& f, TraceView trace, std::size_t i);

/// Index at which a formula that holds at 0 is first witnessed: the smallest
/// witness of a top-level F or U, 0 for every other shape, nullopt when the
/// formula does not hold at 0.
std::optional<std::size_t> earliest_match(const Formula& f, TraceView trace);

/// Rewrites `f`, to be evaluated at the current index, into the obligation on
/// the rest of the trace after observing `state`. `last` marks the final index
/// of the trace. After the final index the result is always a constant.
Formula progress(const Formula& f, PropositionSet state, bool last);

}  // namespace handover
