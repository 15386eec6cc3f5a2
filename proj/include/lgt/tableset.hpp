#pragma once

// Table-set model and file formats.
//
// A table file is UTF-8, tab-separated: line 1 is "<ENT>" followed by column
// labels (plus an optional reserved "<FLAGS>" column), each further line one
// entry: lemma, then one +/-/~ cell per column. The class id is the file stem.
//
// The definitions file holds one stanza per class:
//   class 35L verb
//   def: N0 V Loc N1
//   note: optional free text
// plus top-level paraphrase-link lines:
//   link: ADVPS "pratiquement" = PC "en pratique"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lgt/errors.hpp"
#include "lgt/formula.hpp"

namespace lgt {

enum class Coding { Plus, Minus, Uncoded };

inline char coding_char(Coding c) {
  switch (c) {
    case Coding::Plus: return '+';
    case Coding::Minus: return '-';
    case Coding::Uncoded: return '~';
  }
  return '?';
}

enum class Category { Verb, PredicativeNoun, FrozenExpression, Adverb };

inline const char* category_name(Category c) {
  switch (c) {
    case Category::Verb: return "verb";
    case Category::PredicativeNoun: return "predicative-noun";
    case Category::FrozenExpression: return "frozen-expression";
    case Category::Adverb: return "adverb";
  }
  return "?";
}

inline std::optional<Category> category_from(const std::string& s) {
  if (s == "verb") return Category::Verb;
  if (s == "predicative-noun") return Category::PredicativeNoun;
  if (s == "frozen-expression") return Category::FrozenExpression;
  if (s == "adverb") return Category::Adverb;
  return std::nullopt;
}

struct Entry {
  std::string lemma;
  std::vector<Coding> codings;         // parallel to Table::columns
  std::vector<std::string> flags;      // sorted, unique
  bool operator==(const Entry&) const = default;
};

struct Table {
  std::string classId;
  Category category = Category::Verb;
  std::vector<PropertyLabel> columns;
  std::vector<Entry> entries;
  bool operator==(const Table&) const = default;
};

struct ClassDefinition {
  std::string classId;
  Category category = Category::Verb;
  std::vector<PropertyLabel> definitional;
  std::string notes;
  bool operator==(const ClassDefinition&) const = default;
};

struct EntryRef {
  std::string classId;
  std::string lemma;
  auto operator<=>(const EntryRef&) const = default;
};

using ParaphraseLink = std::pair<EntryRef, EntryRef>;

inline ParaphraseLink make_link(EntryRef a, EntryRef b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

struct TableSet {
  std::map<std::string, Table> tables;
  std::map<std::string, ClassDefinition> definitions;
  std::set<ParaphraseLink> paraphraseLinks;
  bool operator==(const TableSet&) const = default;
};

// ---------------------------------------------------------------------------
// Lookups

inline std::optional<std::size_t> column_index(const Table& t, const std::string& canonical) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (print_canonical(t.columns[i]) == canonical) return i;
  return std::nullopt;
}

inline const Table& table_at(const TableSet& ts, const std::string& classId) {
  auto it = ts.tables.find(classId);
  if (it == ts.tables.end()) fail(Errc::UnknownClass, "no class '" + classId + "'");
  return it->second;
}

inline const Entry& entry_at(const Table& t, const std::string& lemma) {
  for (const auto& e : t.entries)
    if (e.lemma == lemma) return e;
  fail(Errc::UnknownEntry, "no entry '" + lemma + "' in class " + t.classId);
}

inline bool is_definitional(const TableSet& ts, const std::string& classId,
                            const std::string& canonical) {
  auto it = ts.definitions.find(classId);
  if (it == ts.definitions.end()) return false;
  for (const auto& label : it->second.definitional)
    if (print_canonical(label) == canonical) return true;
  return false;
}

// Definitional properties hold for every entry; coded properties come from cells.
inline Coding coding_of(const TableSet& ts, const std::string& classId,
                        const std::string& lemma, const PropertyLabel& label) {
  const Table& t = table_at(ts, classId);
  const Entry& e = entry_at(t, lemma);
  std::string canon = print_canonical(label);
  if (is_definitional(ts, classId, canon)) return Coding::Plus;
  if (auto idx = column_index(t, canon)) return e.codings[*idx];
  fail(Errc::UnknownProperty, "class " + classId + " has no property '" + canon + "'");
}

inline Coding coding_of(const TableSet& ts, const std::string& classId,
                        const std::string& lemma, const std::string& label) {
  return coding_of(ts, classId, lemma, parse_label(label));
}

// ---------------------------------------------------------------------------
// Invariants

namespace detail {

inline bool construction_mentions_frozen_material(const Construction& c) {
  for (const auto& el : c.slots) {
    if (const auto* s = std::get_if<SlotSymbol>(&el)) {
      if (s->kind == SymbolKind::FrozenArg || s->kind == SymbolKind::LexicalItem) return true;
    } else {
      for (const auto& arm : std::get<Alternation>(el).alternatives) {
        if (const auto* seq = std::get_if<std::vector<SlotSymbol>>(&arm))
          for (const auto& s : *seq)
            if (s.kind == SymbolKind::FrozenArg || s.kind == SymbolKind::LexicalItem) return true;
      }
    }
  }
  return false;
}

}  // namespace detail

inline void validate_definition(const ClassDefinition& def) {
  if (def.definitional.empty())
    fail(Errc::Definition, "class " + def.classId + " has an empty definitional list");
  std::set<std::string> seen;
  bool has_construction = false;
  bool has_frozen_construction = false;
  for (const auto& label : def.definitional) {
    std::string canon = print_canonical(label);
    if (!seen.insert(canon).second)
      fail(Errc::DuplicateLabel, "definitional '" + canon + "' repeated in " + def.classId);
    if (const auto* c = std::get_if<Construction>(&label.value)) {
      has_construction = true;
      if (detail::construction_mentions_frozen_material(*c)) has_frozen_construction = true;
    }
  }
  switch (def.category) {
    case Category::Verb:
    case Category::PredicativeNoun:
    case Category::Adverb:
      if (!has_construction)
        fail(Errc::Definition,
             "class " + def.classId + " needs at least one definitional construction");
      break;
    case Category::FrozenExpression:
      if (!has_frozen_construction)
        fail(Errc::Definition, "class " + def.classId +
                                   " needs a definitional construction with frozen material");
      break;
  }
}

inline void validate_table(const Table& t) {
  std::set<std::string> cols;
  for (const auto& label : t.columns) {
    std::string canon = print_canonical(label);
    if (!cols.insert(canon).second)
      fail(Errc::DuplicateLabel, "column '" + canon + "' repeated in " + t.classId);
  }
  std::set<std::string> lemmas;
  for (const auto& e : t.entries) {
    if (e.lemma.empty()) fail(Errc::Format, "empty lemma in class " + t.classId);
    if (!lemmas.insert(e.lemma).second)
      fail(Errc::DuplicateLemma, "lemma '" + e.lemma + "' repeated in class " + t.classId);
    if (e.codings.size() != t.columns.size())
      fail(Errc::Arity, "entry '" + e.lemma + "' in class " + t.classId + " has " +
                            std::to_string(e.codings.size()) + " cells for " +
                            std::to_string(t.columns.size()) + " columns");
  }
}

inline void validate_tableset(const TableSet& ts) {
  for (const auto& [id, t] : ts.tables) {
    if (t.classId != id) fail(Errc::Format, "table keyed '" + id + "' names '" + t.classId + "'");
    validate_table(t);
    auto it = ts.definitions.find(id);
    if (it == ts.definitions.end())
      fail(Errc::Definition, "class " + id + " has a table but no definition");
    if (it->second.category != t.category)
      fail(Errc::Definition, "class " + id + " categories disagree");
  }
  for (const auto& [id, def] : ts.definitions) {
    if (def.classId != id)
      fail(Errc::Format, "definition keyed '" + id + "' names '" + def.classId + "'");
    validate_definition(def);
    auto it = ts.tables.find(id);
    if (it == ts.tables.end())
      fail(Errc::Definition, "class " + id + " has a definition but no table");
    // Definitional and coded properties are disjoint.
    for (const auto& label : def.definitional) {
      std::string canon = print_canonical(label);
      if (column_index(it->second, canon))
        fail(Errc::Definition,
             "'" + canon + "' is both definitional and a column in class " + id);
    }
  }
  for (const auto& link : ts.paraphraseLinks) {
    for (const EntryRef* ref : {&link.first, &link.second}) {
      auto it = ts.tables.find(ref->classId);
      if (it == ts.tables.end())
        fail(Errc::UnknownClass, "paraphrase link references class '" + ref->classId + "'");
      entry_at(it->second, ref->lemma);
    }
  }
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  // CRLF accepted on load; everything internal is LF.
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    if (text[i] == '\r') {
      out += '\n';
      continue;
    }
    out += text[i];
  }
  return normalize_text(out);
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

inline bool valid_class_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

inline std::vector<std::string> parse_flags(const std::string& cell) {
  std::vector<std::string> flags;
  std::string cur;
  auto push = [&] {
    std::string f = trim(cur);
    if (!f.empty()) flags.push_back(f);
    cur.clear();
  };
  for (char c : cell) {
    if (c == ',')
      push();
    else
      cur += c;
  }
  push();
  std::sort(flags.begin(), flags.end());
  flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
  return flags;
}

}  // namespace detail

inline Table load_table_file(const std::filesystem::path& path) {
  std::string stem = path.stem().string();
  if (!detail::valid_class_id(stem))
    fail(Errc::Format, "table file name '" + path.filename().string() +
                           "' is not a usable class id");
  std::string text = detail::read_file(path);
  std::vector<std::string> lines = detail::split_lines(text);
  if (lines.empty()) fail(Errc::Format, path.string() + " is empty");

  Table t;
  t.classId = stem;

  std::vector<std::string> header = detail::split_tabs(lines[0]);
  if (header.empty() || header[0] != "<ENT>")
    fail(Errc::Format, path.string() + ": line 1 must start with <ENT>");
  std::optional<std::size_t> flags_col;
  std::vector<std::size_t> label_cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "<FLAGS>") {
      if (flags_col) fail(Errc::Format, path.string() + ": <FLAGS> column repeated");
      flags_col = i;
      continue;
    }
    try {
      t.columns.push_back(parse_label(header[i]));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ": column " + std::to_string(i) + ": " + e.message(),
           e.offset(), e.expected());
    }
    label_cols.push_back(i);
  }

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    std::vector<std::string> cells = detail::split_tabs(lines[li]);
    if (cells.size() != header.size())
      fail(Errc::Arity, path.string() + ": line " + std::to_string(li + 1) + " has " +
                            std::to_string(cells.size()) + " cells for " +
                            std::to_string(header.size()) + " header columns");
    Entry e;
    e.lemma = detail::trim(cells[0]);
    if (e.lemma.empty())
      fail(Errc::Format, path.string() + ": line " + std::to_string(li + 1) + ": empty lemma");
    // "lemma#usage" keeps its discriminator as part of the key and as a flag.
    if (std::size_t hash = e.lemma.find('#'); hash != std::string::npos && hash > 0) {
      std::string usage = e.lemma.substr(hash + 1);
      if (usage.empty())
        fail(Errc::Format,
             path.string() + ": line " + std::to_string(li + 1) + ": empty usage suffix");
      e.flags.push_back("usage:" + usage);
    }
    for (std::size_t ci : label_cols) {
      const std::string& cell = cells[ci];
      if (cell == "+")
        e.codings.push_back(Coding::Plus);
      else if (cell == "-")
        e.codings.push_back(Coding::Minus);
      else if (cell == "~")
        e.codings.push_back(Coding::Uncoded);
      else
        fail(Errc::Format, path.string() + ": line " + std::to_string(li + 1) + ": cell '" +
                               cell + "' is not +, - or ~ (lexical cell content is not supported)");
    }
    if (flags_col && *flags_col < cells.size()) {
      for (auto& f : detail::parse_flags(cells[*flags_col])) e.flags.push_back(f);
    }
    std::sort(e.flags.begin(), e.flags.end());
    e.flags.erase(std::unique(e.flags.begin(), e.flags.end()), e.flags.end());
    t.entries.push_back(std::move(e));
  }
  validate_table(t);
  return t;
}

// Definitions file: class stanzas plus top-level link lines; '#' starts a comment line.
inline void load_definitions_file(const std::filesystem::path& path, TableSet& ts) {
  std::string text = detail::read_file(path);
  std::vector<std::string> lines = detail::split_lines(text);
  ClassDefinition* current = nullptr;

  auto parse_quoted = [&](const std::string& s, std::size_t& i, std::size_t lineno) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size() || s[i] != '"')
      fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                             ": expected a quoted lemma");
    ++i;
    std::string out;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      out += s[i++];
    }
    if (i >= s.size())
      fail(Errc::Format,
           path.string() + ": line " + std::to_string(lineno) + ": unterminated quote");
    ++i;
    return out;
  };

  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string line = detail::trim(lines[li]);
    std::size_t lineno = li + 1;
    if (line.empty()) {
      current = nullptr;
      continue;
    }
    if (line[0] == '#') continue;
    if (line.rfind("class ", 0) == 0) {
      std::istringstream ss(line.substr(6));
      std::string id, cat, extra;
      ss >> id >> cat;
      if (ss >> extra)
        fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                               ": trailing content after category");
      if (!detail::valid_class_id(id))
        fail(Errc::Format,
             path.string() + ": line " + std::to_string(lineno) + ": bad class id '" + id + "'");
      auto category = category_from(cat);
      if (!category)
        fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                               ": unknown category '" + cat + "'");
      if (ts.definitions.count(id))
        fail(Errc::DuplicateClass, path.string() + ": class " + id + " defined twice");
      ClassDefinition def;
      def.classId = id;
      def.category = *category;
      current = &ts.definitions.emplace(id, std::move(def)).first->second;
      continue;
    }
    if (line.rfind("def:", 0) == 0) {
      if (!current)
        fail(Errc::Format,
             path.string() + ": line " + std::to_string(lineno) + ": def: outside a class stanza");
      std::string spec = detail::trim(line.substr(4));
      try {
        current->definitional.push_back(parse_label(spec));
      } catch (const Error& e) {
        fail(e.code(), path.string() + ": line " + std::to_string(lineno) + ": " + e.message(),
             e.offset(), e.expected());
      }
      continue;
    }
    if (line.rfind("note:", 0) == 0) {
      if (!current)
        fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                               ": note: outside a class stanza");
      std::string note = detail::trim(line.substr(5));
      if (!current->notes.empty()) current->notes += '\n';
      current->notes += note;
      continue;
    }
    if (line.rfind("link:", 0) == 0) {
      std::string rest = line.substr(5);
      std::size_t i = 0;
      auto read_side = [&]() {
        while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < rest.size() && rest[i] != ' ' && rest[i] != '\t' && rest[i] != '"') ++i;
        EntryRef ref;
        ref.classId = rest.substr(start, i - start);
        if (!detail::valid_class_id(ref.classId))
          fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                                 ": bad class id in link");
        ref.lemma = parse_quoted(rest, i, lineno);
        return ref;
      };
      EntryRef a = read_side();
      while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
      if (i >= rest.size() || rest[i] != '=')
        fail(Errc::Format,
             path.string() + ": line " + std::to_string(lineno) + ": expected '=' in link");
      ++i;
      EntryRef b = read_side();
      ts.paraphraseLinks.insert(make_link(std::move(a), std::move(b)));
      continue;
    }
    fail(Errc::Format, path.string() + ": line " + std::to_string(lineno) +
                           ": unrecognized line '" + line + "'");
  }
}

inline TableSet load_tableset(const std::filesystem::path& tablesDir,
                              const std::filesystem::path& defsPath) {
  TableSet ts;
  if (!std::filesystem::is_directory(tablesDir))
    fail(Errc::Io, tablesDir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(tablesDir))
    if (de.is_regular_file() && de.path().extension() == ".tsv") files.push_back(de.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Table t = load_table_file(f);
    std::string id = t.classId;
    if (!ts.tables.emplace(id, std::move(t)).second)
      fail(Errc::DuplicateClass, "class " + id + " loaded twice");
  }
  load_definitions_file(defsPath, ts);
  // Tables carry their class's category.
  for (auto& [id, t] : ts.tables) {
    auto it = ts.definitions.find(id);
    if (it != ts.definitions.end()) t.category = it->second.category;
  }
  validate_tableset(ts);
  return ts;
}

// ---------------------------------------------------------------------------
// Saving (deterministic: classId file order, input row/column order, LF, NFC text)

namespace detail {

inline std::string quote_lemma(const std::string& lemma) {
  std::string out = "\"";
  for (char c : lemma) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline std::string render_table(const Table& t) {
  bool any_flags = false;
  for (const auto& e : t.entries)
    if (!e.flags.empty()) any_flags = true;
  std::string out = "<ENT>";
  for (const auto& label : t.columns) {
    out += '\t';
    out += print_canonical(label);
  }
  if (any_flags) out += "\t<FLAGS>";
  out += '\n';
  for (const auto& e : t.entries) {
    out += e.lemma;
    for (Coding c : e.codings) {
      out += '\t';
      out += coding_char(c);
    }
    if (any_flags) {
      out += '\t';
      for (std::size_t i = 0; i < e.flags.size(); ++i) {
        if (i) out += ',';
        out += e.flags[i];
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string render_definitions(const TableSet& ts) {
  std::string out;
  bool first = true;
  for (const auto& [id, def] : ts.definitions) {
    if (!first) out += '\n';
    first = false;
    out += "class " + id + " " + category_name(def.category) + "\n";
    for (const auto& label : def.definitional) out += "def: " + print_canonical(label) + "\n";
    if (!def.notes.empty()) {
      std::istringstream ss(def.notes);
      std::string line;
      while (std::getline(ss, line)) out += "note: " + line + "\n";
    }
  }
  if (!ts.paraphraseLinks.empty()) {
    out += '\n';
    for (const auto& link : ts.paraphraseLinks) {
      out += "link: " + link.first.classId + " " + detail::quote_lemma(link.first.lemma) +
             " = " + link.second.classId + " " + detail::quote_lemma(link.second.lemma) + "\n";
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::Io, "cannot write " + path.string());
  out << content;
  if (!out) fail(Errc::Io, "write failed for " + path.string());
}

inline void save_tableset(const TableSet& ts, const std::filesystem::path& outDir) {
  std::filesystem::create_directories(outDir);
  for (const auto& [id, t] : ts.tables) write_file(outDir / (id + ".tsv"), render_table(t));
  write_file(outDir / "definitions.txt", render_definitions(ts));
}

}  // namespace lgt
