#pragma once

// Flattening: each (class, entry) pair becomes a self-contained lexicon record
// carrying every property judgment plus paraphrase links; licensing validation
// checks that coded properties only reference arguments some accepted base
// construction provides.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lgt/errors.hpp"
#include "lgt/formula.hpp"
#include "lgt/split.hpp"
#include "lgt/tableset.hpp"

namespace lgt {

struct LexiconRecord {
  std::string lemma;
  std::string classId;
  Category category = Category::Verb;
  std::vector<PropertyLabel> accepted;  // sorted by canonical string
  std::vector<PropertyLabel> rejected;
  std::vector<PropertyLabel> uncoded;
  std::vector<EntryRef> links;  // sorted
};

enum class Severity { Error, Warning };

struct LicensingIssue {
  std::string classId;
  std::string lemma;
  std::string offendingLabel;    // canonical
  std::string unlicensedSymbol;  // canonical
  Severity severity = Severity::Error;
};

// ---------------------------------------------------------------------------
// Flatten

namespace detail {

inline void sort_labels(std::vector<PropertyLabel>& labels) {
  std::sort(labels.begin(), labels.end(), [](const PropertyLabel& a, const PropertyLabel& b) {
    return print_canonical(a) < print_canonical(b);
  });
}

inline void insert_label(std::vector<PropertyLabel>& into, std::set<std::string>& seen,
                         const PropertyLabel& label) {
  if (seen.insert(print_canonical(label)).second) into.push_back(label);
}

// Constructions contribute their full alternation expansion; other labels pass
// through unchanged.
inline void insert_expanded(std::vector<PropertyLabel>& into, std::set<std::string>& seen,
                            const PropertyLabel& label) {
  if (const auto* c = std::get_if<Construction>(&label.value)) {
    for (auto& e : expand_alternations(*c)) {
      PropertyLabel l;
      l.rawText = print_canonical(e);
      l.value = std::move(e);
      insert_label(into, seen, l);
    }
    return;
  }
  insert_label(into, seen, label);
}

}  // namespace detail

inline std::vector<LexiconRecord> flatten_class(const TableSet& ts, const std::string& classId) {
  const Table& t = table_at(ts, classId);
  auto dit = ts.definitions.find(classId);
  if (dit == ts.definitions.end()) fail(Errc::UnknownClass, "no definition for '" + classId + "'");
  const ClassDefinition& def = dit->second;

  std::vector<PropertyLabel> base;
  std::set<std::string> base_seen;
  for (const auto& label : def.definitional) detail::insert_expanded(base, base_seen, label);

  std::vector<LexiconRecord> out;
  out.reserve(t.entries.size());
  for (const auto& e : t.entries) {
    LexiconRecord r;
    r.lemma = e.lemma;
    r.classId = classId;
    r.category = t.category;
    std::set<std::string> seen = base_seen;
    r.accepted = base;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (e.codings[i] == Coding::Plus) detail::insert_expanded(r.accepted, seen, t.columns[i]);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (e.codings[i] == Coding::Minus) detail::insert_label(r.rejected, seen, t.columns[i]);
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (e.codings[i] == Coding::Uncoded) detail::insert_label(r.uncoded, seen, t.columns[i]);
    detail::sort_labels(r.accepted);
    detail::sort_labels(r.rejected);
    detail::sort_labels(r.uncoded);
    EntryRef self{classId, e.lemma};
    for (const auto& [a, b] : ts.paraphraseLinks) {
      if (a == self) r.links.push_back(b);
      if (b == self && !(a == self)) r.links.push_back(a);
    }
    std::sort(r.links.begin(), r.links.end());
    r.links.erase(std::unique(r.links.begin(), r.links.end()), r.links.end());
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const LexiconRecord& a, const LexiconRecord& b) { return a.lemma < b.lemma; });
  return out;
}

inline std::vector<LexiconRecord> flatten(const TableSet& ts) {
  std::vector<LexiconRecord> out;
  for (const auto& [classId, table] : ts.tables) {
    (void)table;
    auto part = flatten_class(ts, classId);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Licensing

namespace detail {

struct LicenseSet {
  std::set<int> freeArgs;
  std::set<int> frozenArgs;
  std::set<int> preps;  // literally indexed Prép_k occurrences
  std::set<int> dets;

  bool arg(int k) const { return freeArgs.count(k) || frozenArgs.count(k); }
};

inline LicenseSet collect_licenses(const std::vector<PropertyLabel>& accepted) {
  LicenseSet ls;
  for (const auto& label : accepted) {
    const auto* c = std::get_if<Construction>(&label.value);
    if (!c) continue;
    int max_arg = -1;
    bool bare_deverbal = false;
    for_each_symbol(*c, [&](const SlotSymbol& s) {
      switch (s.kind) {
        case SymbolKind::FreeArg:
          ls.freeArgs.insert(s.index);
          max_arg = std::max(max_arg, s.index);
          break;
        case SymbolKind::FrozenArg:
          ls.frozenArgs.insert(s.index);
          max_arg = std::max(max_arg, s.index);
          break;
        case SymbolKind::Preposition:
          if (s.index >= 0) ls.preps.insert(s.index);
          break;
        case SymbolKind::Determiner:
          if (s.index >= 0) ls.dets.insert(s.index);
          break;
        case SymbolKind::DeverbalNoun:
          if (s.index >= 0)
            ls.freeArgs.insert(s.index);
          else
            bare_deverbal = true;
          break;
        default:
          break;
      }
    });
    // A bare deverbal noun names the next argument: in "N0 V N1 en V-n" the
    // V-n nominal is the appearing N2.
    if (bare_deverbal && max_arg + 1 <= 3) ls.freeArgs.insert(max_arg + 1);
  }
  return ls;
}

// Indexed argument symbols a non-construction label mentions on its checkable
// side (constraint/feature subject, equivalence context).
inline std::vector<SlotSymbol> checkable_symbols(const PropertyLabel& label) {
  std::vector<SlotSymbol> out;
  auto want = [&](const SlotSymbol& s) {
    switch (s.kind) {
      case SymbolKind::FreeArg:
      case SymbolKind::FrozenArg:
        if (s.index >= 0) out.push_back(s);
        break;
      case SymbolKind::Preposition:
      case SymbolKind::Determiner:
        if (s.index >= 0) out.push_back(s);
        break;
      default:
        break;
    }
  };
  if (const auto* k = std::get_if<Constraint>(&label.value)) {
    want(k->subject);
  } else if (const auto* f = std::get_if<Feature>(&label.value)) {
    want(f->subject);
  } else if (const auto* e = std::get_if<Equivalence>(&label.value)) {
    for (const auto& s : e->context) want(s);
  }
  return out;
}

inline bool symbol_licensed(const LicenseSet& ls, const SlotSymbol& s) {
  switch (s.kind) {
    case SymbolKind::FreeArg: return ls.freeArgs.count(s.index) > 0;
    case SymbolKind::FrozenArg: return ls.frozenArgs.count(s.index) > 0;
    case SymbolKind::Preposition: return ls.preps.count(s.index) || ls.arg(s.index);
    case SymbolKind::Determiner: return ls.dets.count(s.index) || ls.arg(s.index);
    default: return true;
  }
}

}  // namespace detail

inline std::vector<LicensingIssue> validate_licensing(const std::vector<LexiconRecord>& records) {
  std::vector<LicensingIssue> issues;
  for (const auto& r : records) {
    detail::LicenseSet ls = detail::collect_licenses(r.accepted);
    auto scan = [&](const std::vector<PropertyLabel>& labels, Severity severity) {
      for (const auto& label : labels) {
        for (const auto& sym : detail::checkable_symbols(label)) {
          if (!detail::symbol_licensed(ls, sym)) {
            LicensingIssue issue;
            issue.classId = r.classId;
            issue.lemma = r.lemma;
            issue.offendingLabel = print_canonical(label);
            issue.unlicensedSymbol = print_canonical(sym);
            issue.severity = severity;
            issues.push_back(std::move(issue));
          }
        }
      }
    };
    scan(r.accepted, Severity::Error);
    scan(r.uncoded, Severity::Warning);
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Paraphrase links

inline TableSet link_paraphrases(const TableSet& ts,
                                 const std::vector<std::pair<EntryRef, EntryRef>>& pairs) {
  TableSet out = ts;
  for (const auto& [a, b] : pairs) {
    for (const auto& end : {a, b}) {
      const Table& t = table_at(out, end.classId);
      entry_at(t, end.lemma);  // throws UnknownEntry
    }
    out.paraphraseLinks.insert(make_link(a, b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

enum class ExportFormat { Text, Structured };

namespace detail {

inline std::string escape_export(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\' || c == '|' || c == ';' || c == ',') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline std::string export_text(const std::vector<LexiconRecord>& records) {
  std::ostringstream o;
  bool first = true;
  for (const auto& r : records) {
    if (!first) o << '\n';
    first = false;
    o << r.lemma << " (" << r.classId << ", " << category_name(r.category) << ")\n";
    auto section = [&](const char* name, const std::vector<PropertyLabel>& labels) {
      if (labels.empty()) return;
      o << "  " << name << ":\n";
      for (const auto& l : labels) o << "    " << print_canonical(l) << '\n';
    };
    section("accepted", r.accepted);
    section("rejected", r.rejected);
    section("uncoded", r.uncoded);
    if (!r.links.empty()) {
      o << "  links:\n";
      for (const auto& ref : r.links) o << "    " << ref.classId << ":" << ref.lemma << '\n';
    }
  }
  return o.str();
}

inline std::string export_structured(const std::vector<LexiconRecord>& records) {
  std::ostringstream o;
  o << "LGLEX/1 lemma|class|category|accepted|rejected|uncoded|links\n";
  for (const auto& r : records) {
    o << detail::escape_export(r.lemma) << '|' << r.classId << '|' << category_name(r.category)
      << '|';
    auto labels = [&](const std::vector<PropertyLabel>& ls) {
      for (std::size_t i = 0; i < ls.size(); ++i)
        o << (i ? ";" : "") << detail::escape_export(print_canonical(ls[i]));
    };
    labels(r.accepted);
    o << '|';
    labels(r.rejected);
    o << '|';
    labels(r.uncoded);
    o << '|';
    for (std::size_t i = 0; i < r.links.size(); ++i)
      o << (i ? "," : "") << r.links[i].classId << ':' << detail::escape_export(r.links[i].lemma);
    o << '\n';
  }
  return o.str();
}

inline std::string export_lexicon(const std::vector<LexiconRecord>& records, ExportFormat format) {
  return format == ExportFormat::Text ? export_text(records) : export_structured(records);
}

// ---------------------------------------------------------------------------
// Table statistics (read-only; feeds the stats command)

struct ClassStats {
  std::string classId;
  std::size_t entries = 0;
  std::size_t columns = 0;
  std::vector<std::string> allPlusColumns;   // promotion candidates
  std::vector<std::string> allMinusColumns;
  double uncodedDensity = 0.0;  // share of ~ cells
};

inline ClassStats compute_class_stats(const Table& t) {
  ClassStats s;
  s.classId = t.classId;
  s.entries = t.entries.size();
  s.columns = t.columns.size();
  std::size_t uncoded_cells = 0;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    bool all_plus = !t.entries.empty();
    bool all_minus = !t.entries.empty();
    for (const auto& e : t.entries) {
      if (e.codings[i] != Coding::Plus) all_plus = false;
      if (e.codings[i] != Coding::Minus) all_minus = false;
      if (e.codings[i] == Coding::Uncoded) ++uncoded_cells;
    }
    if (all_plus) s.allPlusColumns.push_back(print_canonical(t.columns[i]));
    if (all_minus) s.allMinusColumns.push_back(print_canonical(t.columns[i]));
  }
  std::size_t cells = t.entries.size() * t.columns.size();
  s.uncodedDensity = cells ? static_cast<double>(uncoded_cells) / static_cast<double>(cells) : 0.0;
  return s;
}

inline std::vector<EntryRef> self_links(const TableSet& ts) {
  std::vector<EntryRef> out;
  for (const auto& [a, b] : ts.paraphraseLinks)
    if (a == b) out.push_back(a);
  return out;
}

}  // namespace lgt
