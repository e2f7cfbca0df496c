#include "satentropy/cnf.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace satentropy {

Clause::Clause(std::vector<Lit> lits) {
  lits_.reserve(lits.size());
  for (Lit l : lits) {
    if (std::find(lits_.begin(), lits_.end(), l) != lits_.end())
      continue;
    if (std::find(lits_.begin(), lits_.end(), ~l) != lits_.end())
      tautology_ = true;
    lits_.push_back(l);
  }
}

static std::vector<Lit> to_lits(std::initializer_list<std::int64_t> dimacs_lits) {
  std::vector<Lit> out;
  out.reserve(dimacs_lits.size());
  for (auto d : dimacs_lits) {
    if (d == 0)
      throw std::invalid_argument("literal 0 is not a valid DIMACS literal");
    out.push_back(Lit::from_dimacs(d));
  }
  return out;
}

Clause::Clause(std::initializer_list<std::int64_t> dimacs_lits) : Clause(to_lits(dimacs_lits)) {}

CnfFormula::CnfFormula(std::uint32_t num_vars, std::vector<Clause> clauses) : num_vars_(num_vars) {
  clauses_.reserve(clauses.size());
  for (auto& c : clauses)
    add_clause(std::move(c));
}

void CnfFormula::add_clause(Clause c) {
  for (Lit l : c) {
    if (l.var().index >= num_vars_)
      throw std::out_of_range("literal " + std::to_string(l.dimacs()) + " exceeds declared " +
                              std::to_string(num_vars_) + " vars");
  }
  clauses_.push_back(std::move(c));
}

Assignment Assignment::from_bits(std::uint32_t num_vars, std::uint64_t bits) {
  Assignment a(num_vars);
  for (std::uint32_t i = 0; i < num_vars; ++i)
    a.values_[i] = ((bits >> i) & 1U) != 0 ? Value::True : Value::False;
  return a;
}

Value Assignment::value(Lit l) const {
  Value v = values_.at(l.var().index);
  if (v == Value::Unassigned || !l.negative())
    return v;
  return v == Value::True ? Value::False : Value::True;
}

bool Assignment::is_total() const {
  return std::none_of(values_.begin(), values_.end(), [](Value v) { return v == Value::Unassigned; });
}

DimacsError::DimacsError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
      ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])))
      ++j;
    if (j > i)
      out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_int(std::string_view tok, std::int64_t& out) {
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

}  // namespace

CnfFormula parse_dimacs(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool saw_any = false;
  std::int64_t declared_vars = 0;
  std::int64_t declared_clauses = 0;
  CnfFormula formula;
  std::vector<Lit> pending;
  std::size_t pending_line = 0;

  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty())
      continue;
    saw_any = true;
    if (toks[0].front() == 'c')
      continue;
    if (toks[0].front() == '%')
      break;
    if (toks[0] == "p") {
      if (have_header)
        throw DimacsError(line_no, "duplicate header");
      if (toks.size() != 4 || toks[1] != "cnf" || !parse_int(toks[2], declared_vars) ||
          !parse_int(toks[3], declared_clauses) || declared_vars < 0 || declared_clauses < 0 ||
          declared_vars > std::int64_t{1} << 30)
        throw DimacsError(line_no, "malformed header, expected 'p cnf <vars> <clauses>'");
      have_header = true;
      formula = CnfFormula(static_cast<std::uint32_t>(declared_vars));
      continue;
    }
    if (!have_header)
      throw DimacsError(line_no, "clause data before 'p cnf' header");
    for (auto tok : toks) {
      std::int64_t v = 0;
      if (!parse_int(tok, v))
        throw DimacsError(line_no, "invalid token '" + std::string(tok) + "'");
      if (v == 0) {
        if (static_cast<std::int64_t>(formula.num_clauses()) >= declared_clauses)
          throw DimacsError(line_no, "more clauses than the " + std::to_string(declared_clauses) + " declared");
        formula.add_clause(Clause(std::move(pending)));
        pending.clear();
        continue;
      }
      if (v > declared_vars || -v > declared_vars)
        throw DimacsError(line_no, "literal " + std::string(tok) + " exceeds declared " +
                                       std::to_string(declared_vars) + " vars");
      if (pending.empty())
        pending_line = line_no;
      pending.push_back(Lit::from_dimacs(v));
    }
  }
  if (!saw_any)
    throw DimacsError(1, "empty input");
  if (!have_header)
    throw DimacsError(line_no, "missing 'p cnf' header");
  if (!pending.empty())
    throw DimacsError(pending_line, "clause missing terminating 0");
  if (static_cast<std::int64_t>(formula.num_clauses()) != declared_clauses)
    throw DimacsError(line_no, "header declares " + std::to_string(declared_clauses) + " clauses, found " +
                                   std::to_string(formula.num_clauses()));
  return formula;
}

CnfFormula parse_dimacs(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dimacs(in);
}

CnfFormula read_dimacs_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  try {
    return parse_dimacs(in);
  } catch (const DimacsError& e) {
    throw DimacsError(e.line(), path.string() + ": " + std::string(e.what()));
  }
}

void write_dimacs(std::ostream& out, const CnfFormula& formula) {
  out << "p cnf " << formula.num_vars() << ' ' << formula.num_clauses() << '\n';
  for (const auto& c : formula.clauses()) {
    for (Lit l : c)
      out << l.dimacs() << ' ';
    out << "0\n";
  }
}

std::string write_dimacs(const CnfFormula& formula) {
  std::ostringstream out;
  write_dimacs(out, formula);
  return out.str();
}

bool evaluate(const CnfFormula& formula, const Assignment& a) {
  if (a.num_vars() != formula.num_vars())
    throw std::invalid_argument("assignment covers " + std::to_string(a.num_vars()) + " vars, formula has " +
                                std::to_string(formula.num_vars()));
  if (!a.is_total())
    throw std::invalid_argument("evaluate requires a total assignment");
  return std::all_of(formula.clauses().begin(), formula.clauses().end(), [&](const Clause& c) {
    return std::any_of(c.begin(), c.end(), [&](Lit l) { return a.value(l) == Value::True; });
  });
}

std::string content_hash(std::string_view text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    out.push_back(hex[digest[i] >> 4U]);
    out.push_back(hex[digest[i] & 0xFU]);
  }
  return out;
}

std::string content_hash(const CnfFormula& formula) { return content_hash(write_dimacs(formula)); }

}  // namespace satentropy
