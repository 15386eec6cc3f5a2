#pragma once

// Table-repair transformations: explicit, logged, idempotent rewrites on a
// TableSet, plus the line-oriented script format that drives them and the
// replayable report each run produces.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lgt/errors.hpp"
#include "lgt/formula.hpp"
#include "lgt/split.hpp"
#include "lgt/tableset.hpp"

namespace lgt {

// ---------------------------------------------------------------------------
// Report model

enum class StepKind {
  SplitConjoinedDefinition,
  ExpandDefinitionalAlternation,
  PromoteConstantColumn,
  DemoteDefinitionalToColumn,
  DuplicateColumnCoding,
  RenameColumn,
  DeriveComplementColumn,
  AddDefinitional,
  AddClass,
  SplitClass,
};

inline const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::SplitConjoinedDefinition: return "SplitConjoinedDefinition";
    case StepKind::ExpandDefinitionalAlternation: return "ExpandDefinitionalAlternation";
    case StepKind::PromoteConstantColumn: return "PromoteConstantColumn";
    case StepKind::DemoteDefinitionalToColumn: return "DemoteDefinitionalToColumn";
    case StepKind::DuplicateColumnCoding: return "DuplicateColumnCoding";
    case StepKind::RenameColumn: return "RenameColumn";
    case StepKind::DeriveComplementColumn: return "DeriveComplementColumn";
    case StepKind::AddDefinitional: return "AddDefinitional";
    case StepKind::AddClass: return "AddClass";
    case StepKind::SplitClass: return "SplitClass";
  }
  return "?";
}

inline StepKind step_kind_from(const std::string& s) {
  for (StepKind k : {StepKind::SplitConjoinedDefinition, StepKind::ExpandDefinitionalAlternation,
                     StepKind::PromoteConstantColumn, StepKind::DemoteDefinitionalToColumn,
                     StepKind::DuplicateColumnCoding, StepKind::RenameColumn,
                     StepKind::DeriveComplementColumn, StepKind::AddDefinitional,
                     StepKind::AddClass, StepKind::SplitClass})
    if (s == step_kind_name(k)) return k;
  fail(Errc::Format, "unknown transformation step kind '" + s + "'");
}

struct TransformationStep {
  StepKind kind = StepKind::AddDefinitional;
  std::string classId;
  std::vector<std::string> before;  // canonical label strings
  std::vector<std::string> after;
  std::string details;  // the script line that performs (and replays) the step
  bool skipped = false;
};

struct TransformationReport {
  std::vector<TransformationStep> steps;
};

namespace detail {

inline std::string escape_field(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_field(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char c = s[++i];
      if (c == 't')
        out += '\t';
      else if (c == 'n')
        out += '\n';
      else
        out += c;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t at = s.find("; ", pos);
    if (at == std::string::npos) {
      if (pos < s.size()) out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, at - pos));
    pos = at + 2;
  }
  return out;
}

inline std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "; ";
    out += v[i];
  }
  return out;
}

}  // namespace detail

inline std::string serialize_report(const TransformationReport& report) {
  std::ostringstream out;
  for (const auto& s : report.steps) {
    out << (s.skipped ? "skipped" : "applied") << '\t' << step_kind_name(s.kind) << '\t'
        << s.classId << '\t' << detail::escape_field(detail::join_list(s.before)) << '\t'
        << detail::escape_field(detail::join_list(s.after)) << '\t'
        << detail::escape_field(s.details) << '\n';
  }
  return out.str();
}

inline TransformationReport parse_report(const std::string& text) {
  TransformationReport report;
  std::size_t lineno = 0;
  for (const auto& line : detail::split_lines(text)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 6)
      fail(Errc::Format,
           "report line " + std::to_string(lineno) + ": expected 6 tab-separated fields");
    TransformationStep step;
    if (fields[0] == "applied")
      step.skipped = false;
    else if (fields[0] == "skipped")
      step.skipped = true;
    else
      fail(Errc::Format, "report line " + std::to_string(lineno) + ": bad status '" + fields[0] + "'");
    step.kind = step_kind_from(fields[1]);
    step.classId = fields[2];
    step.before = detail::split_list(detail::unescape_field(fields[3]));
    step.after = detail::split_list(detail::unescape_field(fields[4]));
    step.details = detail::unescape_field(fields[5]);
    report.steps.push_back(std::move(step));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Core operations

namespace detail {

inline Table& table_ref(TableSet& ts, const std::string& classId) {
  auto it = ts.tables.find(classId);
  if (it == ts.tables.end()) fail(Errc::UnknownClass, "no class '" + classId + "'");
  return it->second;
}

inline ClassDefinition& definition_ref(TableSet& ts, const std::string& classId) {
  auto it = ts.definitions.find(classId);
  if (it == ts.definitions.end()) fail(Errc::UnknownClass, "no class '" + classId + "'");
  return it->second;
}

inline std::optional<std::size_t> definitional_index(const ClassDefinition& def,
                                                     const std::string& canonical) {
  for (std::size_t i = 0; i < def.definitional.size(); ++i)
    if (print_canonical(def.definitional[i]) == canonical) return i;
  return std::nullopt;
}

// True when `part` can be carved out of `target`: a construction part must be a
// subsequence of the target's slots (alternations may contribute one arm or
// nothing, role tags are ignored); a feature part needs a slot annotated with
// its tag; a constraint/equivalence part may only mention symbols the target
// contains.
inline bool part_derivable(const Construction& target, const PropertyLabel& part) {
  auto slot_matches = [](const SlotSymbol& a, const SlotSymbol& b) {
    return a.kind == b.kind && a.index == b.index && a.human == b.human && a.lexeme == b.lexeme;
  };
  if (const auto* c = std::get_if<Construction>(&part.value)) {
    if (!is_plain(*c)) return false;
    // Greedy subsequence match over target elements.
    std::size_t pi = 0;
    for (const auto& el : target.slots) {
      if (pi >= c->slots.size()) break;
      const auto& want = std::get<SlotSymbol>(c->slots[pi]);
      if (const auto* s = std::get_if<SlotSymbol>(&el)) {
        if (slot_matches(*s, want)) ++pi;
      } else {
        // An alternation may contribute one arm (matched as a run) or nothing.
        for (const auto& arm : std::get<Alternation>(el).alternatives) {
          const auto* seq = std::get_if<std::vector<SlotSymbol>>(&arm);
          if (!seq || seq->empty()) continue;
          std::size_t save = pi;
          bool all = true;
          for (const auto& s : *seq) {
            if (pi < c->slots.size() && slot_matches(s, std::get<SlotSymbol>(c->slots[pi])))
              ++pi;
            else {
              all = false;
              break;
            }
          }
          if (all) break;
          pi = save;
        }
      }
    }
    return pi == c->slots.size();
  }
  if (const auto* f = std::get_if<Feature>(&part.value)) {
    bool found = false;
    for_each_symbol(target, [&](const SlotSymbol& s) {
      if (s.kind == f->subject.kind && s.index == f->subject.index && s.annotation == f->tag)
        found = true;
    });
    return found;
  }
  // Constraint / equivalence: every argument-indexed symbol it mentions must
  // occur in the target.
  std::set<int> have;
  for_each_symbol(target, [&](const SlotSymbol& s) {
    if (s.kind == SymbolKind::FreeArg || s.kind == SymbolKind::FrozenArg) have.insert(s.index);
  });
  bool ok = true;
  for_each_symbol(part, [&](const SlotSymbol& s) {
    if ((s.kind == SymbolKind::FreeArg || s.kind == SymbolKind::FrozenArg) && !have.count(s.index))
      ok = false;
  });
  return ok;
}

inline void check_not_column(const Table& t, const std::string& canonical, const char* what) {
  if (column_index(t, canonical))
    fail(Errc::DuplicateLabel,
         std::string(what) + " '" + canonical + "' is already a column of " + t.classId);
}

inline void check_not_definitional(const ClassDefinition& def, const std::string& canonical,
                                   const char* what) {
  if (definitional_index(def, canonical))
    fail(Errc::DuplicateLabel,
         std::string(what) + " '" + canonical + "' is already definitional in " + def.classId);
}

}  // namespace detail

inline TableSet split_conjoined_definition(const TableSet& ts, const std::string& classId,
                                           const PropertyLabel& target,
                                           const std::vector<PropertyLabel>& parts) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string canon = print_canonical(target);
  auto at = detail::definitional_index(def, canon);
  if (!at)
    fail(Errc::NotDefinitional, "'" + canon + "' is not definitional in " + classId);
  if (parts.size() < 2)
    fail(Errc::InvalidDecomposition, "splitting '" + canon + "' needs at least two parts");
  const auto* targetC = std::get_if<Construction>(&def.definitional[*at].value);
  if (!targetC)
    fail(Errc::InvalidDecomposition, "'" + canon + "' is not a construction");
  for (const auto& part : parts) {
    if (!detail::part_derivable(*targetC, part))
      fail(Errc::InvalidDecomposition,
           "part '" + print_canonical(part) + "' is not derivable from '" + canon + "'");
    detail::check_not_column(t, print_canonical(part), "split part");
  }
  std::vector<PropertyLabel> rebuilt;
  for (std::size_t i = 0; i < def.definitional.size(); ++i) {
    if (i != *at) {
      rebuilt.push_back(def.definitional[i]);
      continue;
    }
    for (const auto& part : parts) {
      bool dup = false;
      for (const auto& existing : rebuilt)
        if (print_canonical(existing) == print_canonical(part)) dup = true;
      if (!dup && detail::definitional_index(def, print_canonical(part)) &&
          print_canonical(part) != canon)
        dup = true;  // already definitional elsewhere in the list
      if (!dup) rebuilt.push_back(part);
    }
  }
  def.definitional = std::move(rebuilt);
  validate_definition(def);
  return out;
}

inline TableSet expand_definitional_alternation(
    const TableSet& ts, const std::string& classId, const PropertyLabel& target,
    const std::optional<PropertyLabel>& replaceWith = std::nullopt) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string canon = print_canonical(target);
  auto at = detail::definitional_index(def, canon);
  if (!at)
    fail(Errc::NotDefinitional, "'" + canon + "' is not definitional in " + classId);
  const auto* c = std::get_if<Construction>(&def.definitional[*at].value);
  if (!c) fail(Errc::NothingToExpand, "'" + canon + "' is not a construction");
  bool has_alt = false;
  for (const auto& el : c->slots)
    if (std::holds_alternative<Alternation>(el)) has_alt = true;
  if (!has_alt) fail(Errc::NothingToExpand, "'" + canon + "' contains no alternation");

  std::vector<PropertyLabel> expansions;
  if (replaceWith) {
    expansions.push_back(*replaceWith);
  } else {
    for (auto& e : expand_alternations(*c)) {
      PropertyLabel l;
      l.rawText = print_canonical(e);
      l.value = std::move(e);
      expansions.push_back(std::move(l));
    }
  }
  std::vector<PropertyLabel> rebuilt;
  for (std::size_t i = 0; i < def.definitional.size(); ++i) {
    if (i != *at) {
      rebuilt.push_back(def.definitional[i]);
      continue;
    }
    for (const auto& e : expansions) {
      std::string ec = print_canonical(e);
      bool dup = false;
      for (const auto& existing : def.definitional)
        if (print_canonical(existing) == ec && print_canonical(existing) != canon) dup = true;
      for (const auto& existing : rebuilt)
        if (print_canonical(existing) == ec) dup = true;
      if (dup) continue;
      detail::check_not_column(t, ec, "expansion");
      rebuilt.push_back(e);
    }
  }
  def.definitional = std::move(rebuilt);
  validate_definition(def);
  return out;
}

inline TableSet promote_constant_column(const TableSet& ts, const std::string& classId,
                                        const PropertyLabel& column) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string canon = print_canonical(column);
  auto at = column_index(t, canon);
  if (!at) fail(Errc::UnknownColumn, "class " + classId + " has no column '" + canon + "'");
  if (t.entries.empty())
    fail(Errc::EmptyTable,
         "refusing to promote '" + canon + "' in empty class " + classId +
             ": a definitional property must be witnessed by at least one entry");
  std::vector<std::string> offending;
  for (const auto& e : t.entries)
    if (e.codings[*at] != Coding::Plus)
      offending.push_back(e.lemma + "=" + std::string(1, coding_char(e.codings[*at])));
  if (!offending.empty()) {
    std::string who;
    for (std::size_t i = 0; i < offending.size(); ++i) who += (i ? ", " : "") + offending[i];
    fail(Errc::NotConstant, "column '" + canon + "' of " + classId + " is not all-Plus (" + who + ")");
  }
  t.columns.erase(t.columns.begin() + static_cast<std::ptrdiff_t>(*at));
  for (auto& e : t.entries) e.codings.erase(e.codings.begin() + static_cast<std::ptrdiff_t>(*at));
  def.definitional.push_back(column);
  validate_definition(def);
  return out;
}

inline TableSet demote_definitional_to_column(const TableSet& ts, const std::string& classId,
                                              const PropertyLabel& target,
                                              const std::map<std::string, Coding>& codings) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string canon = print_canonical(target);
  auto at = detail::definitional_index(def, canon);
  if (!at)
    fail(Errc::NotDefinitional, "'" + canon + "' is not definitional in " + classId);
  std::vector<std::string> missing;
  for (const auto& e : t.entries)
    if (!codings.count(e.lemma)) missing.push_back(e.lemma);
  if (!missing.empty()) {
    std::string who;
    for (std::size_t i = 0; i < missing.size(); ++i) who += (i ? ", " : "") + missing[i];
    fail(Errc::IncompleteCodings, "demotion of '" + canon + "' lacks codings for: " + who);
  }
  for (const auto& [lemma, c] : codings) {
    (void)c;
    bool known = false;
    for (const auto& e : t.entries)
      if (e.lemma == lemma) known = true;
    if (!known)
      fail(Errc::IncompleteCodings,
           "demotion of '" + canon + "' codes unknown lemma '" + lemma + "'");
  }
  detail::check_not_column(t, canon, "demoted label");
  def.definitional.erase(def.definitional.begin() + static_cast<std::ptrdiff_t>(*at));
  t.columns.push_back(target);
  for (auto& e : t.entries) e.codings.push_back(codings.at(e.lemma));
  validate_definition(def);
  return out;
}

inline TableSet duplicate_column_coding(const TableSet& ts, const std::string& classId,
                                        const PropertyLabel& source,
                                        const PropertyLabel& newLabel) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string src_canon = print_canonical(source);
  std::string new_canon = print_canonical(newLabel);
  auto at = column_index(t, src_canon);
  if (!at) fail(Errc::UnknownColumn, "class " + classId + " has no column '" + src_canon + "'");
  detail::check_not_column(t, new_canon, "new column");
  detail::check_not_definitional(def, new_canon, "new column");
  t.columns.push_back(newLabel);
  for (auto& e : t.entries) e.codings.push_back(e.codings[*at]);
  return out;
}

inline TableSet rename_column(const TableSet& ts, const std::string& classId,
                              const PropertyLabel& oldLabel, const PropertyLabel& newLabel) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string old_canon = print_canonical(oldLabel);
  std::string new_canon = print_canonical(newLabel);
  auto at = column_index(t, old_canon);
  if (!at) fail(Errc::UnknownColumn, "class " + classId + " has no column '" + old_canon + "'");
  if (new_canon == old_canon) return out;  // rename to itself: recorded no-op
  detail::check_not_column(t, new_canon, "new name");
  detail::check_not_definitional(def, new_canon, "new name");
  t.columns[*at] = newLabel;
  return out;
}

inline TableSet rename_definitional(const TableSet& ts, const std::string& classId,
                                    const PropertyLabel& oldLabel, const PropertyLabel& newLabel) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string old_canon = print_canonical(oldLabel);
  std::string new_canon = print_canonical(newLabel);
  auto at = detail::definitional_index(def, old_canon);
  if (!at)
    fail(Errc::NotDefinitional, "'" + old_canon + "' is not definitional in " + classId);
  if (new_canon == old_canon) return out;
  detail::check_not_column(t, new_canon, "new name");
  detail::check_not_definitional(def, new_canon, "new name");
  def.definitional[*at] = newLabel;
  validate_definition(def);
  return out;
}

inline TableSet derive_complement_column(const TableSet& ts, const std::string& classId,
                                         const PropertyLabel& source,
                                         const PropertyLabel& target) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  std::string src_canon = print_canonical(source);
  std::string tgt_canon = print_canonical(target);
  auto src = column_index(t, src_canon);
  if (!src) fail(Errc::UnknownColumn, "class " + classId + " has no column '" + src_canon + "'");
  auto tgt = column_index(t, tgt_canon);
  if (!tgt) fail(Errc::UnknownColumn, "class " + classId + " has no column '" + tgt_canon + "'");
  for (auto& e : t.entries) e.codings[*tgt] = e.codings[*src];
  return out;
}

inline TableSet add_definitional(const TableSet& ts, const std::string& classId,
                                 const PropertyLabel& label) {
  TableSet out = ts;
  Table& t = detail::table_ref(out, classId);
  ClassDefinition& def = detail::definition_ref(out, classId);
  std::string canon = print_canonical(label);
  detail::check_not_definitional(def, canon, "definitional label");
  detail::check_not_column(t, canon, "definitional label");
  def.definitional.push_back(label);
  validate_definition(def);
  return out;
}

inline TableSet add_class(const TableSet& ts, const ClassDefinition& def, const Table& table) {
  if (ts.tables.count(table.classId) || ts.definitions.count(def.classId))
    fail(Errc::DuplicateClass, "class '" + def.classId + "' already exists");
  if (def.classId != table.classId)
    fail(Errc::Definition, "definition and table class ids disagree");
  TableSet out = ts;
  out.tables.emplace(table.classId, table);
  out.definitions.emplace(def.classId, def);
  validate_tableset(out);
  return out;
}

// ---------------------------------------------------------------------------
// Script commands

struct CmdSplit {
  std::string classId;
  std::string target;
  std::vector<std::string> parts;
};
struct CmdExpand {
  std::string classId;
  std::string target;
  std::optional<std::string> replaceWith;
};
struct CmdPromote {
  std::string classId;
  std::string column;
};
struct CmdDemote {
  std::string classId;
  std::string target;
  std::vector<std::pair<std::string, Coding>> codings;
};
struct CmdDup {
  std::string classId;
  std::string source;
  std::string newLabel;
};
struct CmdRename {
  std::string classId;
  std::string oldLabel;
  std::string newLabel;
  bool definitional = false;
};
struct CmdDerive {
  std::string classId;
  std::string source;
  std::string target;
};
struct CmdAddDef {
  std::string classId;
  std::string label;
};
struct CmdAddClass {
  std::string classId;
  Category category = Category::Verb;
  std::vector<std::string> defs;
  std::vector<std::string> entries;
};
struct CmdSplitLoc {
  std::string classId;
  bool human = false;
  std::string src, dst, dep;
  std::map<RouteKey, std::string> targets;
};

using Command = std::variant<CmdSplit, CmdExpand, CmdPromote, CmdDemote, CmdDup, CmdRename,
                             CmdDerive, CmdAddDef, CmdAddClass, CmdSplitLoc>;

struct ScriptLine {
  std::size_t lineno = 0;
  Command cmd;
};

// ---------------------------------------------------------------------------
// Script tokenizer / parser

namespace detail {

struct ScriptTok {
  enum class Type { Word, Quoted, Arrow, Semi, Eq, End } type;
  std::string text;
};

inline std::vector<ScriptTok> script_tokens(const std::string& line, std::size_t lineno) {
  std::vector<ScriptTok> toks;
  std::size_t i = 0;
  auto err = [&](const std::string& m) {
    fail(Errc::Script, "script line " + std::to_string(lineno) + ": " + m);
  };
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (c == '#') break;  // comment to end of line
    if (c == '"') {
      std::string s;
      ++i;
      for (;;) {
        if (i >= line.size()) err("unterminated string");
        char d = line[i++];
        if (d == '"') break;
        if (d == '\\') {
          if (i >= line.size()) err("dangling backslash");
          char e = line[i++];
          if (e == 'n')
            s += '\n';
          else if (e == 't')
            s += '\t';
          else
            s += e;  // \" and \\ and anything else literally
        } else {
          s += d;
        }
      }
      toks.push_back({ScriptTok::Type::Quoted, std::move(s)});
      continue;
    }
    if (c == ';') {
      toks.push_back({ScriptTok::Type::Semi, ";"});
      ++i;
      continue;
    }
    if (c == '=') {
      toks.push_back({ScriptTok::Type::Eq, "="});
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '"' &&
           line[i] != ';' && line[i] != '=' && line[i] != '#')
      ++i;
    std::string w = line.substr(start, i - start);
    if (w == "->")
      toks.push_back({ScriptTok::Type::Arrow, std::move(w)});
    else
      toks.push_back({ScriptTok::Type::Word, std::move(w)});
  }
  toks.push_back({ScriptTok::Type::End, ""});
  return toks;
}

struct ScriptCursor {
  const std::vector<ScriptTok>* toks;
  std::size_t at = 0;
  std::size_t lineno = 0;

  [[noreturn]] void err(const std::string& m) const {
    fail(Errc::Script, "script line " + std::to_string(lineno) + ": " + m);
  }
  const ScriptTok& peek() const { return (*toks)[at]; }
  const ScriptTok& next() {
    const ScriptTok& t = (*toks)[at];
    if (t.type != ScriptTok::Type::End) ++at;
    return t;
  }
  std::string word(const char* what) {
    const ScriptTok& t = next();
    if (t.type != ScriptTok::Type::Word) err(std::string("expected ") + what);
    return t.text;
  }
  std::string quoted(const char* what) {
    const ScriptTok& t = next();
    if (t.type != ScriptTok::Type::Quoted) err(std::string("expected quoted ") + what);
    return t.text;
  }
  void arrow() {
    if (next().type != ScriptTok::Type::Arrow) err("expected '->'");
  }
  void eq() {
    if (next().type != ScriptTok::Type::Eq) err("expected '='");
  }
  bool take_semi() {
    if (peek().type == ScriptTok::Type::Semi) {
      next();
      return true;
    }
    return false;
  }
  void end() {
    if (peek().type != ScriptTok::Type::End) err("trailing content '" + peek().text + "'");
  }
  std::string keyword(const char* want) {
    std::string w = word(want);
    if (w != want) err(std::string("expected '") + want + "', got '" + w + "'");
    return w;
  }
};

inline Coding coding_from_word(const std::string& w, ScriptCursor& cur) {
  if (w == "+") return Coding::Plus;
  if (w == "-") return Coding::Minus;
  if (w == "~") return Coding::Uncoded;
  cur.err("expected coding +, - or ~, got '" + w + "'");
}

}  // namespace detail

inline Command parse_script_command(const std::string& line, std::size_t lineno) {
  auto toks = detail::script_tokens(line, lineno);
  detail::ScriptCursor cur{&toks, 0, lineno};
  std::string verb = cur.word("a command verb");
  if (verb == "split") {
    CmdSplit c;
    c.classId = cur.word("class id");
    c.target = cur.quoted("target label");
    cur.arrow();
    c.parts.push_back(cur.quoted("part label"));
    while (cur.take_semi()) c.parts.push_back(cur.quoted("part label"));
    cur.end();
    return c;
  }
  if (verb == "expand") {
    CmdExpand c;
    c.classId = cur.word("class id");
    c.target = cur.quoted("target label");
    if (cur.peek().type == detail::ScriptTok::Type::Arrow) {
      cur.arrow();
      c.replaceWith = cur.quoted("replacement label");
    }
    cur.end();
    return c;
  }
  if (verb == "promote") {
    CmdPromote c;
    c.classId = cur.word("class id");
    c.column = cur.quoted("column label");
    cur.end();
    return c;
  }
  if (verb == "demote") {
    CmdDemote c;
    c.classId = cur.word("class id");
    c.target = cur.quoted("target label");
    cur.keyword("codings");
    for (;;) {
      std::string lemma = cur.quoted("lemma");
      cur.eq();
      c.codings.emplace_back(lemma, detail::coding_from_word(cur.word("coding"), cur));
      if (!cur.take_semi()) break;
    }
    cur.end();
    return c;
  }
  if (verb == "dup") {
    CmdDup c;
    c.classId = cur.word("class id");
    c.source = cur.quoted("source column");
    cur.arrow();
    c.newLabel = cur.quoted("new column");
    cur.end();
    return c;
  }
  if (verb == "rename" || verb == "rename-def") {
    CmdRename c;
    c.definitional = (verb == "rename-def");
    c.classId = cur.word("class id");
    c.oldLabel = cur.quoted("old label");
    cur.arrow();
    c.newLabel = cur.quoted("new label");
    cur.end();
    return c;
  }
  if (verb == "derive") {
    CmdDerive c;
    c.classId = cur.word("class id");
    c.source = cur.quoted("source column");
    cur.arrow();
    c.target = cur.quoted("target column");
    cur.end();
    return c;
  }
  if (verb == "adddef") {
    CmdAddDef c;
    c.classId = cur.word("class id");
    c.label = cur.quoted("label");
    cur.end();
    return c;
  }
  if (verb == "addclass") {
    CmdAddClass c;
    c.classId = cur.word("class id");
    std::string cat = cur.word("category");
    auto category = category_from(cat);
    if (!category) cur.err("unknown category '" + cat + "'");
    c.category = *category;
    cur.keyword("defs");
    c.defs.push_back(cur.quoted("definitional label"));
    while (cur.take_semi()) c.defs.push_back(cur.quoted("definitional label"));
    cur.keyword("entries");
    c.entries.push_back(cur.quoted("lemma"));
    while (cur.take_semi()) c.entries.push_back(cur.quoted("lemma"));
    cur.end();
    return c;
  }
  if (verb == "split-loc") {
    CmdSplitLoc c;
    c.classId = cur.word("class id");
    cur.keyword("human");
    cur.eq();
    std::string h = cur.word("yes or no");
    if (h != "yes" && h != "no") cur.err("human= takes yes or no");
    c.human = (h == "yes");
    cur.keyword("src");
    cur.eq();
    c.src = cur.quoted("source construction");
    cur.keyword("dst");
    cur.eq();
    c.dst = cur.quoted("destination construction");
    cur.keyword("dep");
    cur.eq();
    c.dep = cur.quoted("dependent-source column");
    cur.arrow();
    auto route_binding = [&](const std::string& key) -> std::optional<RouteKey> {
      if (key == "both") return RouteKey::BothIndependent;
      if (key == "srconly") return RouteKey::SourceOnly;
      if (key == "dstonly") return RouteKey::DestOnly;
      if (key == "static") return RouteKey::Static;
      if (key == "residual") return RouteKey::Residual;
      return std::nullopt;
    };
    while (cur.peek().type == detail::ScriptTok::Type::Word) {
      std::string key = cur.word("route binding");
      auto rk = route_binding(key);
      if (!rk) cur.err("unknown route '" + key + "'");
      cur.eq();
      std::string id = cur.word("target class id");
      if (c.targets.count(*rk)) cur.err("duplicate route '" + key + "'");
      c.targets[*rk] = id;
      if (*rk == RouteKey::BothIndependent) c.targets[RouteKey::BothDependentSource] = id;
    }
    cur.end();
    for (RouteKey k : {RouteKey::BothIndependent, RouteKey::SourceOnly, RouteKey::DestOnly,
                       RouteKey::Residual})
      if (!c.targets.count(k))
        cur.err(std::string("missing route binding for ") + route_name(k));
    return c;
  }
  detail::ScriptCursor bad{&toks, 0, lineno};
  bad.err("unknown command '" + verb + "'");
}

inline std::vector<ScriptLine> parse_script(const std::string& text) {
  std::vector<ScriptLine> out;
  std::size_t lineno = 0;
  for (const auto& raw : detail::split_lines(text)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    out.push_back({lineno, parse_script_command(line, lineno)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical script-line rendering (used for replayable report details)

namespace detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string canon_label(const std::string& s) { return print_canonical(parse_label(s)); }

}  // namespace detail

inline std::string render_command(const Command& cmd) {
  std::ostringstream o;
  auto q = [](const std::string& s) { return detail::quote(s); };
  auto ql = [](const std::string& s) { return detail::quote(detail::canon_label(s)); };
  if (const auto* c = std::get_if<CmdSplit>(&cmd)) {
    o << "split " << c->classId << ' ' << ql(c->target) << " -> ";
    for (std::size_t i = 0; i < c->parts.size(); ++i) o << (i ? " ; " : "") << ql(c->parts[i]);
  } else if (const auto* c = std::get_if<CmdExpand>(&cmd)) {
    o << "expand " << c->classId << ' ' << ql(c->target);
    if (c->replaceWith) o << " -> " << ql(*c->replaceWith);
  } else if (const auto* c = std::get_if<CmdPromote>(&cmd)) {
    o << "promote " << c->classId << ' ' << ql(c->column);
  } else if (const auto* c = std::get_if<CmdDemote>(&cmd)) {
    o << "demote " << c->classId << ' ' << ql(c->target) << " codings ";
    for (std::size_t i = 0; i < c->codings.size(); ++i)
      o << (i ? " ; " : "") << q(c->codings[i].first) << '='
        << coding_char(c->codings[i].second);
  } else if (const auto* c = std::get_if<CmdDup>(&cmd)) {
    o << "dup " << c->classId << ' ' << ql(c->source) << " -> " << ql(c->newLabel);
  } else if (const auto* c = std::get_if<CmdRename>(&cmd)) {
    o << (c->definitional ? "rename-def " : "rename ") << c->classId << ' ' << ql(c->oldLabel)
      << " -> " << ql(c->newLabel);
  } else if (const auto* c = std::get_if<CmdDerive>(&cmd)) {
    o << "derive " << c->classId << ' ' << ql(c->source) << " -> " << ql(c->target);
  } else if (const auto* c = std::get_if<CmdAddDef>(&cmd)) {
    o << "adddef " << c->classId << ' ' << ql(c->label);
  } else if (const auto* c = std::get_if<CmdAddClass>(&cmd)) {
    o << "addclass " << c->classId << ' ' << category_name(c->category) << " defs ";
    for (std::size_t i = 0; i < c->defs.size(); ++i) o << (i ? " ; " : "") << ql(c->defs[i]);
    o << " entries ";
    for (std::size_t i = 0; i < c->entries.size(); ++i) o << (i ? " ; " : "") << q(c->entries[i]);
  } else if (const auto* c = std::get_if<CmdSplitLoc>(&cmd)) {
    o << "split-loc " << c->classId << " human=" << (c->human ? "yes" : "no") << " src="
      << ql(c->src) << " dst=" << ql(c->dst) << " dep=" << ql(c->dep) << " -> both="
      << c->targets.at(RouteKey::BothIndependent) << " srconly="
      << c->targets.at(RouteKey::SourceOnly) << " dstonly=" << c->targets.at(RouteKey::DestOnly);
    if (c->targets.count(RouteKey::Static)) o << " static=" << c->targets.at(RouteKey::Static);
    o << " residual=" << c->targets.at(RouteKey::Residual);
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Command execution, skip detection, apply_script

namespace detail {

inline SplitSpec split_spec_from(const CmdSplitLoc& c) {
  SplitSpec spec;
  spec.classId = c.classId;
  spec.humanCorrelate = c.human;
  spec.sourceColumn = parse_label(c.src);
  spec.destColumn = parse_label(c.dst);
  spec.dependentSourceColumn = parse_label(c.dep);
  spec.targets = c.targets;
  return spec;
}

// True when the command's effect is already in place (second run of a script).
inline bool already_applied(const TableSet& ts, const Command& cmd) {
  auto has_class = [&](const std::string& id) { return ts.tables.count(id) > 0; };
  auto col = [&](const std::string& id, const std::string& label) -> std::optional<std::size_t> {
    auto it = ts.tables.find(id);
    if (it == ts.tables.end()) return std::nullopt;
    return column_index(it->second, canon_label(label));
  };
  auto defl = [&](const std::string& id, const std::string& label) {
    if (!ts.definitions.count(id)) return false;
    return is_definitional(ts, id, canon_label(label));
  };
  if (const auto* c = std::get_if<CmdSplit>(&cmd)) {
    if (defl(c->classId, c->target)) return false;
    for (const auto& p : c->parts)
      if (!defl(c->classId, p)) return false;
    return true;
  }
  if (const auto* c = std::get_if<CmdExpand>(&cmd)) {
    if (defl(c->classId, c->target)) return false;
    if (c->replaceWith) return defl(c->classId, *c->replaceWith);
    auto label = parse_label(c->target);
    const auto* con = std::get_if<Construction>(&label.value);
    if (!con) return false;
    for (const auto& e : expand_alternations(*con))
      if (!defl(c->classId, print_canonical(e))) return false;
    return true;
  }
  if (const auto* c = std::get_if<CmdPromote>(&cmd))
    return !col(c->classId, c->column) && defl(c->classId, c->column);
  if (const auto* c = std::get_if<CmdDemote>(&cmd))
    return !defl(c->classId, c->target) && col(c->classId, c->target).has_value();
  if (const auto* c = std::get_if<CmdDup>(&cmd)) {
    auto s = col(c->classId, c->source);
    auto n = col(c->classId, c->newLabel);
    if (!s || !n) return false;
    for (const auto& e : ts.tables.at(c->classId).entries)
      if (e.codings[*s] != e.codings[*n]) return false;
    return true;
  }
  if (const auto* c = std::get_if<CmdRename>(&cmd)) {
    if (canon_label(c->oldLabel) == canon_label(c->newLabel)) return false;  // recorded no-op
    if (c->definitional) return !defl(c->classId, c->oldLabel) && defl(c->classId, c->newLabel);
    return !col(c->classId, c->oldLabel) && col(c->classId, c->newLabel).has_value();
  }
  if (const auto* c = std::get_if<CmdDerive>(&cmd)) {
    auto s = col(c->classId, c->source);
    auto t = col(c->classId, c->target);
    if (!s || !t) return false;
    for (const auto& e : ts.tables.at(c->classId).entries)
      if (e.codings[*s] != e.codings[*t]) return false;
    return true;
  }
  if (const auto* c = std::get_if<CmdAddDef>(&cmd)) return defl(c->classId, c->label);
  if (const auto* c = std::get_if<CmdAddClass>(&cmd)) {
    if (!has_class(c->classId)) return false;
    const Table& t = ts.tables.at(c->classId);
    const ClassDefinition& d = ts.definitions.at(c->classId);
    if (t.category != c->category || !t.columns.empty()) return false;
    if (d.definitional.size() != c->defs.size() || t.entries.size() != c->entries.size())
      return false;
    for (std::size_t i = 0; i < c->defs.size(); ++i)
      if (print_canonical(d.definitional[i]) != canon_label(c->defs[i])) return false;
    for (std::size_t i = 0; i < c->entries.size(); ++i)
      if (t.entries[i].lemma != c->entries[i]) return false;
    return true;
  }
  if (const auto* c = std::get_if<CmdSplitLoc>(&cmd)) {
    // After a split the source class is gone or re-created without the full
    // consulted column triple (a both-target keeps recoded source/destination
    // columns but never the dependency column), and every named target exists.
    bool consumed = !has_class(c->classId) ||
                    !col(c->classId, c->src) || !col(c->classId, c->dst) ||
                    !col(c->classId, c->dep);
    if (!consumed) return false;
    for (const auto& [k, id] : c->targets) {
      (void)k;
      if (!has_class(id)) return false;
    }
    return true;
  }
  return false;
}

}  // namespace detail

// Executes one command. Returns the new TableSet plus the report step
// describing what happened (details = canonical replayable script line).
inline std::pair<TableSet, TransformationStep> execute_command(const TableSet& ts,
                                                               const Command& cmd) {
  TransformationStep step;
  step.details = render_command(cmd);
  auto pl = [](const std::string& s) { return parse_label(s); };
  auto canon = [](const std::string& s) { return detail::canon_label(s); };

  if (const auto* c = std::get_if<CmdSplit>(&cmd)) {
    step.kind = StepKind::SplitConjoinedDefinition;
    step.classId = c->classId;
    step.before = {canon(c->target)};
    for (const auto& p : c->parts) step.after.push_back(canon(p));
    std::vector<PropertyLabel> parts;
    for (const auto& p : c->parts) parts.push_back(pl(p));
    return {split_conjoined_definition(ts, c->classId, pl(c->target), parts), std::move(step)};
  }
  if (const auto* c = std::get_if<CmdExpand>(&cmd)) {
    step.kind = StepKind::ExpandDefinitionalAlternation;
    step.classId = c->classId;
    step.before = {canon(c->target)};
    std::optional<PropertyLabel> repl;
    if (c->replaceWith) {
      repl = pl(*c->replaceWith);
      step.after = {canon(*c->replaceWith)};
    } else {
      auto label = pl(c->target);
      if (const auto* con = std::get_if<Construction>(&label.value))
        for (const auto& e : expand_alternations(*con)) step.after.push_back(print_canonical(e));
    }
    return {expand_definitional_alternation(ts, c->classId, pl(c->target), repl), std::move(step)};
  }
  if (const auto* c = std::get_if<CmdPromote>(&cmd)) {
    step.kind = StepKind::PromoteConstantColumn;
    step.classId = c->classId;
    step.before = {canon(c->column)};
    step.after = {canon(c->column)};
    return {promote_constant_column(ts, c->classId, pl(c->column)), std::move(step)};
  }
  if (const auto* c = std::get_if<CmdDemote>(&cmd)) {
    step.kind = StepKind::DemoteDefinitionalToColumn;
    step.classId = c->classId;
    step.before = {canon(c->target)};
    step.after = {canon(c->target)};
    std::map<std::string, Coding> codings;
    for (const auto& [lemma, cd] : c->codings) {
      if (codings.count(lemma))
        fail(Errc::IncompleteCodings, "duplicate coding for lemma '" + lemma + "'");
      codings[lemma] = cd;
    }
    return {demote_definitional_to_column(ts, c->classId, pl(c->target), codings),
            std::move(step)};
  }
  if (const auto* c = std::get_if<CmdDup>(&cmd)) {
    step.kind = StepKind::DuplicateColumnCoding;
    step.classId = c->classId;
    step.before = {canon(c->source)};
    step.after = {canon(c->newLabel)};
    return {duplicate_column_coding(ts, c->classId, pl(c->source), pl(c->newLabel)),
            std::move(step)};
  }
  if (const auto* c = std::get_if<CmdRename>(&cmd)) {
    step.kind = StepKind::RenameColumn;
    step.classId = c->classId;
    step.before = {canon(c->oldLabel)};
    step.after = {canon(c->newLabel)};
    if (c->definitional)
      return {rename_definitional(ts, c->classId, pl(c->oldLabel), pl(c->newLabel)),
              std::move(step)};
    return {rename_column(ts, c->classId, pl(c->oldLabel), pl(c->newLabel)), std::move(step)};
  }
  if (const auto* c = std::get_if<CmdDerive>(&cmd)) {
    step.kind = StepKind::DeriveComplementColumn;
    step.classId = c->classId;
    step.before = {canon(c->source)};
    step.after = {canon(c->target)};
    return {derive_complement_column(ts, c->classId, pl(c->source), pl(c->target)),
            std::move(step)};
  }
  if (const auto* c = std::get_if<CmdAddDef>(&cmd)) {
    step.kind = StepKind::AddDefinitional;
    step.classId = c->classId;
    step.after = {canon(c->label)};
    return {add_definitional(ts, c->classId, pl(c->label)), std::move(step)};
  }
  if (const auto* c = std::get_if<CmdAddClass>(&cmd)) {
    step.kind = StepKind::AddClass;
    step.classId = c->classId;
    ClassDefinition def;
    def.classId = c->classId;
    def.category = c->category;
    for (const auto& d : c->defs) {
      def.definitional.push_back(pl(d));
      step.after.push_back(canon(d));
    }
    Table table;
    table.classId = c->classId;
    table.category = c->category;
    for (const auto& lemma : c->entries) {
      Entry e;
      e.lemma = lemma;
      table.entries.push_back(std::move(e));
    }
    return {add_class(ts, def, table), std::move(step)};
  }
  const auto& c = std::get<CmdSplitLoc>(cmd);
  step.kind = StepKind::SplitClass;
  step.classId = c.classId;
  step.before = {detail::canon_label(c.src), detail::canon_label(c.dst),
                 detail::canon_label(c.dep)};
  for (const auto& [k, id] : c.targets) {
    (void)k;
    if (std::find(step.after.begin(), step.after.end(), id) == step.after.end())
      step.after.push_back(id);
  }
  SplitSpec spec = detail::split_spec_from(c);
  auto [result, decisions] = split_class(ts, spec);
  (void)decisions;
  // Make the renumbering visible in the report; the comment is ignored on replay.
  {
    detail::RoleConstruction srcRc =
        detail::role_construction(spec.sourceColumn, Annotation::Source, "source construction");
    detail::RoleConstruction dstRc = detail::role_construction(
        spec.destColumn, Annotation::Destination, "destination construction");
    if (srcRc.argIndex != dstRc.argIndex)
      step.details += " # renumber N" + std::to_string(dstRc.argIndex) + "->N" +
                      std::to_string(srcRc.argIndex) + " in " +
                      spec.targets.at(RouteKey::DestOnly);
  }
  return {std::move(result), std::move(step)};
}

// Applies a parsed script atomically: on any error the original TableSet is
// untouched and the failure names the offending step. Steps whose effect is
// already present are recorded as skipped, so re-running a script is a no-op.
inline StepKind command_kind(const Command& cmd) {
  if (std::holds_alternative<CmdSplit>(cmd)) return StepKind::SplitConjoinedDefinition;
  if (std::holds_alternative<CmdExpand>(cmd)) return StepKind::ExpandDefinitionalAlternation;
  if (std::holds_alternative<CmdPromote>(cmd)) return StepKind::PromoteConstantColumn;
  if (std::holds_alternative<CmdDemote>(cmd)) return StepKind::DemoteDefinitionalToColumn;
  if (std::holds_alternative<CmdDup>(cmd)) return StepKind::DuplicateColumnCoding;
  if (std::holds_alternative<CmdRename>(cmd)) return StepKind::RenameColumn;
  if (std::holds_alternative<CmdDerive>(cmd)) return StepKind::DeriveComplementColumn;
  if (std::holds_alternative<CmdAddDef>(cmd)) return StepKind::AddDefinitional;
  if (std::holds_alternative<CmdAddClass>(cmd)) return StepKind::AddClass;
  return StepKind::SplitClass;
}

inline std::pair<TableSet, TransformationReport> apply_script(const TableSet& ts,
                                                              const std::vector<ScriptLine>& script) {
  TableSet current = ts;
  TransformationReport report;
  for (std::size_t i = 0; i < script.size(); ++i) {
    const ScriptLine& line = script[i];
    try {
      if (detail::already_applied(current, line.cmd)) {
        TransformationStep step;
        step.kind = command_kind(line.cmd);
        step.details = render_command(line.cmd);
        step.skipped = true;
        std::visit([&](const auto& c) { step.classId = c.classId; }, line.cmd);
        report.steps.push_back(std::move(step));
        continue;
      }
      auto [next, step] = execute_command(current, line.cmd);
      current = std::move(next);
      report.steps.push_back(std::move(step));
    } catch (const Error& e) {
      if (e.code() == Errc::Script) throw;  // already carries its position
      fail(Errc::Script, "step " + std::to_string(i + 1) + " (line " +
                             std::to_string(line.lineno) + "): " + e.what());
    }
  }
  validate_tableset(current);
  return {std::move(current), std::move(report)};
}

inline std::pair<TableSet, TransformationReport> apply_script_text(const TableSet& ts,
                                                                   const std::string& text) {
  return apply_script(ts, parse_script(text));
}

// Replays the non-skipped steps of a report over a TableSet; by construction
// each step's details line is a script command.
inline TableSet replay_report(const TableSet& ts, const TransformationReport& report) {
  TableSet current = ts;
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& step = report.steps[i];
    if (step.skipped) continue;
    Command cmd = parse_script_command(step.details, i + 1);
    auto [next, ignored] = execute_command(current, cmd);
    (void)ignored;
    current = std::move(next);
  }
  return current;
}

}  // namespace lgt
