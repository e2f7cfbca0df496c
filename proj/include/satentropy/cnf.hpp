#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace satentropy {

/// A propositional variable. Stored 0-indexed; DIMACS index is `index + 1`.
struct Var {
  std::uint32_t index = 0;

  static constexpr Var from_dimacs(std::int64_t dimacs) { return Var{static_cast<std::uint32_t>(dimacs - 1)}; }
  [[nodiscard]] constexpr std::int64_t dimacs() const { return static_cast<std::int64_t>(index) + 1; }

  friend constexpr auto operator<=>(Var, Var) = default;
};

/// A literal packed as `2 * var + negative`.
class Lit {
public:
  constexpr Lit() = default;
  constexpr Lit(Var v, bool negative) : code_(2 * v.index + (negative ? 1U : 0U)) {}

  static constexpr Lit from_code(std::uint32_t code) {
    Lit l;
    l.code_ = code;
    return l;
  }
  static constexpr Lit from_dimacs(std::int64_t dimacs) {
    return dimacs > 0 ? Lit(Var::from_dimacs(dimacs), false) : Lit(Var::from_dimacs(-dimacs), true);
  }
  static constexpr Lit pos(Var v) { return Lit(v, false); }
  static constexpr Lit neg(Var v) { return Lit(v, true); }

  [[nodiscard]] constexpr Var var() const { return Var{code_ >> 1U}; }
  [[nodiscard]] constexpr bool negative() const { return (code_ & 1U) != 0; }
  [[nodiscard]] constexpr std::uint32_t code() const { return code_; }
  [[nodiscard]] constexpr std::int64_t dimacs() const { return negative() ? -var().dimacs() : var().dimacs(); }

  constexpr Lit operator~() const { return from_code(code_ ^ 1U); }
  friend constexpr auto operator<=>(Lit, Lit) = default;

private:
  std::uint32_t code_ = 0;
};

/// Literals in input order with duplicates removed. A clause holding both
/// polarities of a variable is kept but marked tautological.
class Clause {
public:
  Clause() = default;
  explicit Clause(std::vector<Lit> lits);
  Clause(std::initializer_list<std::int64_t> dimacs_lits);

  [[nodiscard]] std::span<const Lit> lits() const { return lits_; }
  [[nodiscard]] std::size_t size() const { return lits_.size(); }
  [[nodiscard]] bool empty() const { return lits_.empty(); }
  [[nodiscard]] bool tautology() const { return tautology_; }

  auto begin() const { return lits_.begin(); }
  auto end() const { return lits_.end(); }

  friend bool operator==(const Clause&, const Clause&) = default;

private:
  std::vector<Lit> lits_;
  bool tautology_ = false;
};

class CnfFormula {
public:
  CnfFormula() = default;
  explicit CnfFormula(std::uint32_t num_vars) : num_vars_(num_vars) {}
  CnfFormula(std::uint32_t num_vars, std::vector<Clause> clauses);

  /// Throws std::out_of_range if a literal refers to a variable beyond num_vars().
  void add_clause(Clause c);

  [[nodiscard]] std::uint32_t num_vars() const { return num_vars_; }
  [[nodiscard]] std::size_t num_clauses() const { return clauses_.size(); }
  [[nodiscard]] const std::vector<Clause>& clauses() const { return clauses_; }

  friend bool operator==(const CnfFormula&, const CnfFormula&) = default;

private:
  std::uint32_t num_vars_ = 0;
  std::vector<Clause> clauses_;
};

enum class Value : std::int8_t { False = 0, True = 1, Unassigned = 2 };

class Assignment {
public:
  Assignment() = default;
  explicit Assignment(std::uint32_t num_vars) : values_(num_vars, Value::Unassigned) {}

  /// Total assignment whose bit i gives the value of variable i.
  static Assignment from_bits(std::uint32_t num_vars, std::uint64_t bits);

  [[nodiscard]] std::uint32_t num_vars() const { return static_cast<std::uint32_t>(values_.size()); }
  [[nodiscard]] Value value(Var v) const { return values_.at(v.index); }
  [[nodiscard]] Value value(Lit l) const;
  void set(Var v, bool value) { values_.at(v.index) = value ? Value::True : Value::False; }
  void unset(Var v) { values_.at(v.index) = Value::Unassigned; }
  [[nodiscard]] bool is_total() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

private:
  std::vector<Value> values_;
};

class DimacsError : public std::runtime_error {
public:
  DimacsError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Reads DIMACS CNF. Lines starting with `c` are comments; a line starting
/// with `%` ends the clause section (SATLIB convention).
CnfFormula parse_dimacs(std::istream& in);
CnfFormula parse_dimacs(std::string_view text);
CnfFormula read_dimacs_file(const std::filesystem::path& path);

void write_dimacs(std::ostream& out, const CnfFormula& formula);
[[nodiscard]] std::string write_dimacs(const CnfFormula& formula);

/// Throws std::invalid_argument for a partial or wrongly sized assignment.
[[nodiscard]] bool evaluate(const CnfFormula& formula, const Assignment& a);

/// Hex SHA-256 of the canonical DIMACS text, truncated to 16 characters.
[[nodiscard]] std::string content_hash(const CnfFormula& formula);
[[nodiscard]] std::string content_hash(std::string_view text);

}  // namespace satentropy
