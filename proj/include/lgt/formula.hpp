#pragma once

// Property-label notation: AST, parser, canonical printer, alternation expansion.
//
// A label is one of
//   Construction  "N0 V Loc N1 source Loc N2 destination", "N0 V N1 (E+en V-n)"
//   Constraint    "Prép =: d'avec", "N0 =: il+ça"
//   Equivalence   "Prép N2hum = Ppv =: lui", "V = convertir en V-n"
//   Feature       "N1 apparition"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lgt/errors.hpp"

namespace lgt {

enum class SymbolKind {
  FreeArg,        // N0..N3
  FrozenArg,      // C0..C3
  Verb,           // V
  SupportVerb,    // Vsup
  DeverbalNoun,   // V-n, V-n2
  Preposition,    // Prép, Prép1..Prép3
  Locative,       // Loc
  Determiner,     // Det, Det1..Det3
  CliticPronoun,  // Ppv
  Adverb,         // Adv
  Remainder,      // W
  Modifier,       // Modif
  NounHead,       // N, Nhum, N-hum
  Phrase,         // P1..P3
  LexicalItem,    // avoir, être, en, y, il, ça, ...
  CommaBoundary,  // ,
  NegationNe,     // ne
  NegationPas,    // pas
};

enum class Annotation { None, Source, Destination, Apparition, Disparition };
enum class HumanMark { None, Hum, NonHum };

struct SlotSymbol {
  SymbolKind kind = SymbolKind::LexicalItem;
  int index = -1;  // -1 when the symbol carries no subscript
  std::string lexeme;
  Annotation annotation = Annotation::None;
  HumanMark human = HumanMark::None;

  bool operator==(const SlotSymbol&) const = default;
};

inline SlotSymbol make_symbol(SymbolKind kind, int index = -1) {
  SlotSymbol s;
  s.kind = kind;
  s.index = index;
  return s;
}

inline SlotSymbol make_lexical(std::string lexeme) {
  SlotSymbol s;
  s.kind = SymbolKind::LexicalItem;
  s.lexeme = std::move(lexeme);
  return s;
}

struct EmptyArm {
  bool operator==(const EmptyArm&) const = default;
};
struct StarredEmptyArm {  // "*E": the bare variant is recorded as ungrammatical
  bool operator==(const StarredEmptyArm&) const = default;
};
using Alternative = std::variant<EmptyArm, StarredEmptyArm, std::vector<SlotSymbol>>;

struct Alternation {
  std::vector<Alternative> alternatives;
  bool operator==(const Alternation&) const = default;
};

using SlotElement = std::variant<SlotSymbol, Alternation>;

struct Construction {
  std::vector<SlotElement> slots;
  bool operator==(const Construction&) const = default;
};

enum class DistKind { Hum, NonHum, Lexical };

struct DistributionValue {
  DistKind kind = DistKind::Lexical;
  std::vector<std::string> words;  // all words for Lexical; qualifiers after Nhum/N-hum
  bool operator==(const DistributionValue&) const = default;
};

struct Constraint {
  SlotSymbol subject;
  std::vector<DistributionValue> values;
  bool operator==(const Constraint&) const = default;
};

struct Equivalence {
  std::vector<SlotSymbol> context;
  std::variant<Constraint, std::vector<SlotSymbol>> realization;
  bool operator==(const Equivalence&) const = default;
};

struct Feature {
  SlotSymbol subject;               // FreeArg or FrozenArg
  Annotation tag = Annotation::Apparition;  // Apparition or Disparition
  bool operator==(const Feature&) const = default;
};

struct PropertyLabel {
  std::variant<Construction, Constraint, Equivalence, Feature> value;
  std::string rawText;

  // rawText is provenance, not identity
  bool operator==(const PropertyLabel& o) const { return value == o.value; }
};

// ---------------------------------------------------------------------------
// Text normalization: compose French combining accents, unify apostrophes.

inline std::string normalize_text(const std::string& in) {
  static const struct {
    const char* seq;
    const char* composed;
  } marks[] = {
      {"a\xcc\x80", "à"}, {"a\xcc\x82", "â"}, {"e\xcc\x81", "é"}, {"e\xcc\x80", "è"},
      {"e\xcc\x82", "ê"}, {"e\xcc\x88", "ë"}, {"i\xcc\x82", "î"}, {"i\xcc\x88", "ï"},
      {"o\xcc\x82", "ô"}, {"u\xcc\x80", "ù"}, {"u\xcc\x82", "û"}, {"u\xcc\x88", "ü"},
      {"c\xcc\xa7", "ç"}, {"A\xcc\x80", "À"}, {"E\xcc\x81", "É"}, {"E\xcc\x80", "È"},
      {"E\xcc\x82", "Ê"}, {"C\xcc\xa7", "Ç"},
  };
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size();) {
    if (in.compare(i, 3, "\xe2\x80\x99") == 0) {  // U+2019 right single quote
      out += '\'';
      i += 3;
      continue;
    }
    bool composed = false;
    for (const auto& m : marks) {
      std::size_t n = std::char_traits<char>::length(m.seq);
      if (in.compare(i, n, m.seq) == 0) {
        out += m.composed;
        i += n;
        composed = true;
        break;
      }
    }
    if (!composed) {
      out += in[i];
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical printing

namespace detail {

inline void append_index(std::string& s, int index) {
  if (index >= 0) s += static_cast<char>('0' + index);
}

}  // namespace detail

inline std::string print_canonical(const SlotSymbol& s) {
  std::string out;
  switch (s.kind) {
    case SymbolKind::FreeArg:
      out = "N";
      detail::append_index(out, s.index);
      if (s.human == HumanMark::Hum) out += "hum";
      if (s.human == HumanMark::NonHum) out += "-hum";
      break;
    case SymbolKind::FrozenArg:
      out = "C";
      detail::append_index(out, s.index);
      break;
    case SymbolKind::Verb: out = "V"; break;
    case SymbolKind::SupportVerb: out = "Vsup"; break;
    case SymbolKind::DeverbalNoun:
      out = "V-n";
      detail::append_index(out, s.index);
      break;
    case SymbolKind::Preposition:
      out = "Prép";
      detail::append_index(out, s.index);
      break;
    case SymbolKind::Locative: out = "Loc"; break;
    case SymbolKind::Determiner:
      out = "Det";
      detail::append_index(out, s.index);
      break;
    case SymbolKind::CliticPronoun: out = "Ppv"; break;
    case SymbolKind::Adverb: out = "Adv"; break;
    case SymbolKind::Remainder: out = "W"; break;
    case SymbolKind::Modifier: out = "Modif"; break;
    case SymbolKind::NounHead:
      out = "N";
      if (s.human == HumanMark::Hum) out += "hum";
      if (s.human == HumanMark::NonHum) out += "-hum";
      break;
    case SymbolKind::Phrase:
      out = "P";
      detail::append_index(out, s.index);
      break;
    case SymbolKind::LexicalItem: out = s.lexeme; break;
    case SymbolKind::CommaBoundary: out = ","; break;
    case SymbolKind::NegationNe: out = "ne"; break;
    case SymbolKind::NegationPas: out = "pas"; break;
  }
  switch (s.annotation) {
    case Annotation::None: break;
    case Annotation::Source: out += " source"; break;
    case Annotation::Destination: out += " destination"; break;
    case Annotation::Apparition: out += " apparition"; break;
    case Annotation::Disparition: out += " disparition"; break;
  }
  return out;
}

namespace detail {

// Space-joins printed tokens; a comma boundary glues to the token before it.
inline std::string join_tokens(const std::vector<std::string>& toks,
                               const std::vector<bool>& glue) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!out.empty() && !glue[i]) out += ' ';
    out += toks[i];
  }
  return out;
}

inline void push_symbol_token(const SlotSymbol& s, std::vector<std::string>& toks,
                              std::vector<bool>& glue) {
  toks.push_back(print_canonical(s));
  glue.push_back(s.kind == SymbolKind::CommaBoundary);
}

}  // namespace detail

inline std::string print_canonical(const std::vector<SlotSymbol>& seq) {
  std::vector<std::string> toks;
  std::vector<bool> glue;
  for (const auto& s : seq) detail::push_symbol_token(s, toks, glue);
  return detail::join_tokens(toks, glue);
}

inline std::string print_canonical(const Alternation& alt) {
  std::string out = "(";
  for (std::size_t i = 0; i < alt.alternatives.size(); ++i) {
    if (i) out += '+';
    const Alternative& a = alt.alternatives[i];
    if (std::holds_alternative<EmptyArm>(a)) {
      out += 'E';
    } else if (std::holds_alternative<StarredEmptyArm>(a)) {
      out += "*E";
    } else {
      out += print_canonical(std::get<std::vector<SlotSymbol>>(a));
    }
  }
  out += ')';
  return out;
}

inline std::string print_canonical(const Construction& c) {
  std::vector<std::string> toks;
  std::vector<bool> glue;
  for (const auto& el : c.slots) {
    if (std::holds_alternative<SlotSymbol>(el)) {
      detail::push_symbol_token(std::get<SlotSymbol>(el), toks, glue);
    } else {
      toks.push_back(print_canonical(std::get<Alternation>(el)));
      glue.push_back(false);
    }
  }
  return detail::join_tokens(toks, glue);
}

inline std::string print_canonical(const DistributionValue& v) {
  std::string out;
  if (v.kind == DistKind::Hum)
    out = "Nhum";
  else if (v.kind == DistKind::NonHum)
    out = "N-hum";
  for (const auto& w : v.words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

inline std::string print_canonical(const Constraint& c) {
  std::string out = print_canonical(c.subject);
  out += " =: ";
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    if (i) out += '+';
    out += print_canonical(c.values[i]);
  }
  return out;
}

inline std::string print_canonical(const Equivalence& e) {
  std::string out = print_canonical(e.context);
  out += " = ";
  if (std::holds_alternative<Constraint>(e.realization)) {
    out += print_canonical(std::get<Constraint>(e.realization));
  } else {
    out += print_canonical(std::get<std::vector<SlotSymbol>>(e.realization));
  }
  return out;
}

inline std::string print_canonical(const Feature& f) {
  std::string out = print_canonical(f.subject);
  out += f.tag == Annotation::Apparition ? " apparition" : " disparition";
  return out;
}

inline std::string print_canonical(const PropertyLabel& label) {
  return std::visit([](const auto& v) { return print_canonical(v); }, label.value);
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace detail {

enum class TokType { Word, LParen, RParen, Plus, Comma, Equals, ConstraintOp, Star, End };

struct Token {
  TokType type = TokType::End;
  std::string text;
  std::size_t offset = 0;
};

inline bool word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '\'' || c == '-' || c >= 0x80;
}

inline std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    std::size_t at = i;
    if (c == '(') {
      toks.push_back({TokType::LParen, "(", at});
      ++i;
    } else if (c == ')') {
      toks.push_back({TokType::RParen, ")", at});
      ++i;
    } else if (c == '+') {
      toks.push_back({TokType::Plus, "+", at});
      ++i;
    } else if (c == ',') {
      toks.push_back({TokType::Comma, ",", at});
      ++i;
    } else if (c == '*') {
      toks.push_back({TokType::Star, "*", at});
      ++i;
    } else if (c == '=') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] == ' ') ++j;
      if (j < s.size() && s[j] == ':') {
        toks.push_back({TokType::ConstraintOp, "=:", at});
        i = j + 1;
      } else {
        toks.push_back({TokType::Equals, "=", at});
        ++i;
      }
    } else if (word_char(c)) {
      std::size_t j = i;
      while (j < s.size() && word_char(static_cast<unsigned char>(s[j]))) ++j;
      toks.push_back({TokType::Word, s.substr(i, j - i), at});
      i = j;
    } else {
      fail(Errc::Syntax, "unexpected character '" + std::string(1, s[i]) + "'", at);
    }
  }
  toks.push_back({TokType::End, "", s.size()});
  return toks;
}

// ---------------------------------------------------------------------------
// Word classification

inline bool parse_index_char(char c, int& out) {
  if (c >= '0' && c <= '9') {
    out = c - '0';
    return true;
  }
  if (c == 'l' || c == 'I') {  // OCR-grade sources subscript with l/I for 1
    out = 1;
    return true;
  }
  if (c == 'O' || c == 'o') {  // and with the letter O for 0
    out = 0;
    return true;
  }
  return false;
}

// Splits word into symbol stem + subscript + human mark. Returns false when the
// word is not a schema symbol (it is then a lexical item).
inline bool classify_word(const std::string& w, std::size_t offset, SlotSymbol& out) {
  auto indexed = [&](const char* stem, SymbolKind kind, bool index_required,
                     bool allow_human) -> std::optional<SlotSymbol> {
    std::size_t n = std::char_traits<char>::length(stem);
    if (w.compare(0, n, stem) != 0) return std::nullopt;
    std::string rest = w.substr(n);
    SlotSymbol s = make_symbol(kind);
    // A stray l/I/O in front of a real digit is scanner noise: "Prépl2" is Prép2.
    if (rest.size() >= 2 && !std::isdigit(static_cast<unsigned char>(rest[0])) &&
        std::isdigit(static_cast<unsigned char>(rest[1]))) {
      int noise;
      if (parse_index_char(rest[0], noise)) rest = rest.substr(1);
    }
    if (!rest.empty()) {
      int idx;
      if (parse_index_char(rest[0], idx)) {
        if (idx > 3)
          fail(Errc::Syntax, "argument index out of range in '" + w + "'", offset,
               {"index 0..3"});
        s.index = idx;
        rest = rest.substr(1);
      }
    }
    if (index_required && s.index < 0) return std::nullopt;
    if (allow_human && !rest.empty()) {
      if (rest == "hum") {
        s.human = HumanMark::Hum;
        rest.clear();
      } else if (rest == "-hum") {
        s.human = HumanMark::NonHum;
        rest.clear();
      }
    }
    if (!rest.empty()) return std::nullopt;
    return s;
  };

  if (w == "V") {
    out = make_symbol(SymbolKind::Verb);
    return true;
  }
  if (w == "Vsup") {
    out = make_symbol(SymbolKind::SupportVerb);
    return true;
  }
  if (w == "Loc") {
    out = make_symbol(SymbolKind::Locative);
    return true;
  }
  if (w == "Ppv") {
    out = make_symbol(SymbolKind::CliticPronoun);
    return true;
  }
  if (w == "Adv") {
    out = make_symbol(SymbolKind::Adverb);
    return true;
  }
  if (w == "W") {
    out = make_symbol(SymbolKind::Remainder);
    return true;
  }
  if (w == "Modif") {
    out = make_symbol(SymbolKind::Modifier);
    return true;
  }
  if (w == "ne") {
    out = make_symbol(SymbolKind::NegationNe);
    return true;
  }
  if (w == "pas") {
    out = make_symbol(SymbolKind::NegationPas);
    return true;
  }
  if (w == "N" || w == "Nhum" || w == "N-hum") {
    out = make_symbol(SymbolKind::NounHead);
    if (w == "Nhum") out.human = HumanMark::Hum;
    if (w == "N-hum") out.human = HumanMark::NonHum;
    return true;
  }
  if (auto s = indexed("V-n", SymbolKind::DeverbalNoun, false, false)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("N", SymbolKind::FreeArg, true, true)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("C", SymbolKind::FrozenArg, true, false)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("Prép", SymbolKind::Preposition, false, false)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("Prep", SymbolKind::Preposition, false, false)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("Det", SymbolKind::Determiner, false, false)) {
    out = *s;
    return true;
  }
  if (auto s = indexed("P", SymbolKind::Phrase, true, false)) {
    out = *s;
    return true;
  }
  return false;
}

inline std::optional<Annotation> annotation_word(const std::string& w) {
  if (w == "source") return Annotation::Source;
  if (w == "destination") return Annotation::Destination;
  if (w == "apparition") return Annotation::Apparition;
  if (w == "disparition") return Annotation::Disparition;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;

  const Token& peek() const { return toks[pos]; }
  const Token& next() { return toks[pos++]; }

  [[noreturn]] void unexpected(const Token& t, std::vector<std::string> expected) {
    std::string what = t.type == TokType::End ? "end of label" : "'" + t.text + "'";
    fail(Errc::Syntax, "unexpected " + what, t.offset, std::move(expected));
  }

  void bind_annotation(std::vector<SlotSymbol>& seq, Annotation ann, const Token& t) {
    if (seq.empty()) unexpected(t, {"argument symbol before annotation"});
    SlotSymbol& prev = seq.back();
    bool arg_ok = (ann == Annotation::Source || ann == Annotation::Destination)
                      ? prev.kind == SymbolKind::FreeArg
                      : prev.kind == SymbolKind::FreeArg || prev.kind == SymbolKind::FrozenArg;
    if (!arg_ok || prev.annotation != Annotation::None)
      unexpected(t, {"free argument (N0..N3) before '" + t.text + "'"});
    prev.annotation = ann;
  }

  // A run of plain symbols; annotations bind to the preceding argument slot.
  std::vector<SlotSymbol> symbol_run(bool stop_at_plus, bool stop_at_rparen) {
    std::vector<SlotSymbol> seq;
    for (;;) {
      const Token& t = peek();
      if (t.type == TokType::End || t.type == TokType::Equals ||
          t.type == TokType::ConstraintOp)
        break;
      if (t.type == TokType::Plus && stop_at_plus) break;
      if (t.type == TokType::RParen && stop_at_rparen) break;
      if (t.type == TokType::Comma) {
        next();
        seq.push_back(make_symbol(SymbolKind::CommaBoundary));
        continue;
      }
      if (t.type == TokType::Word) {
        next();
        if (auto ann = annotation_word(t.text)) {
          bind_annotation(seq, *ann, t);
          continue;
        }
        SlotSymbol s;
        if (classify_word(t.text, t.offset, s)) {
          seq.push_back(s);
        } else {
          seq.push_back(make_lexical(t.text));
        }
        continue;
      }
      unexpected(t, {"symbol"});
    }
    return seq;
  }

  Alternative alternation_arm() {
    const Token& t = peek();
    if (t.type == TokType::Star) {
      next();
      const Token& e = next();
      if (e.type != TokType::Word || e.text != "E") unexpected(e, {"'E' after '*'"});
      return StarredEmptyArm{};
    }
    if (t.type == TokType::Word && t.text == "E") {
      next();
      return EmptyArm{};
    }
    std::vector<SlotSymbol> seq = symbol_run(/*stop_at_plus=*/true, /*stop_at_rparen=*/true);
    if (seq.empty()) unexpected(peek(), {"alternation arm"});
    for (const auto& s : seq)
      if (s.kind == SymbolKind::LexicalItem && s.lexeme == "E")
        fail(Errc::Syntax, "'E' must be a whole alternation arm", t.offset);
    return seq;
  }

  Alternation alternation() {
    const Token& open = next();  // consumes '('
    Alternation alt;
    alt.alternatives.push_back(alternation_arm());
    while (peek().type == TokType::Plus) {
      next();
      alt.alternatives.push_back(alternation_arm());
    }
    const Token& close = next();
    if (close.type != TokType::RParen) unexpected(close, {"')'", "'+'"});
    if (alt.alternatives.size() < 2)
      fail(Errc::Syntax, "alternation needs at least two alternatives", open.offset);
    int empties = 0, starred = 0;
    for (const auto& a : alt.alternatives) {
      empties += std::holds_alternative<EmptyArm>(a);
      starred += std::holds_alternative<StarredEmptyArm>(a);
    }
    if (empties > 1 || starred > 1)
      fail(Errc::Syntax, "at most one empty alternative per alternation", open.offset);
    return alt;
  }

  Construction construction() {
    Construction c;
    std::vector<SlotSymbol> run;
    auto flush = [&] {
      for (auto& s : run) c.slots.emplace_back(std::move(s));
      run.clear();
    };
    for (;;) {
      const Token& t = peek();
      if (t.type == TokType::End) break;
      if (t.type == TokType::LParen) {
        flush();
        c.slots.emplace_back(alternation());
        continue;
      }
      if (t.type == TokType::Comma) {
        next();
        run.push_back(make_symbol(SymbolKind::CommaBoundary));
        continue;
      }
      if (t.type == TokType::Word) {
        next();
        if (auto ann = annotation_word(t.text)) {
          bind_annotation(run, *ann, t);
          continue;
        }
        SlotSymbol s;
        if (t.text == "E") fail(Errc::Syntax, "'E' is only valid inside an alternation", t.offset);
        if (classify_word(t.text, t.offset, s))
          run.push_back(s);
        else
          run.push_back(make_lexical(t.text));
        continue;
      }
      unexpected(t, {"symbol", "'('"});
    }
    flush();
    if (c.slots.empty()) fail(Errc::Syntax, "empty construction", 0);
    return c;
  }

  std::vector<DistributionValue> values() {
    std::vector<DistributionValue> vals;
    for (;;) {
      const Token& t = next();
      if (t.type != TokType::Word) unexpected(t, {"distribution value"});
      DistributionValue v;
      if (t.text == "Nhum")
        v.kind = DistKind::Hum;
      else if (t.text == "N-hum")
        v.kind = DistKind::NonHum;
      else {
        v.kind = DistKind::Lexical;
        v.words.push_back(t.text);
      }
      // A value may run over several words: "Nhum obligatoire", "le fait que P1".
      while (peek().type == TokType::Word) v.words.push_back(next().text);
      vals.push_back(v);
      if (peek().type != TokType::Plus) break;
      next();
    }
    const Token& t = peek();
    if (t.type != TokType::End) unexpected(t, {"'+'", "end of label"});
    return vals;
  }

  SlotSymbol constraint_subject() {
    const Token& t = next();
    if (t.type != TokType::Word) unexpected(t, {"constraint subject symbol"});
    SlotSymbol s;
    if (!classify_word(t.text, t.offset, s) || s.kind == SymbolKind::CommaBoundary ||
        s.kind == SymbolKind::NegationNe || s.kind == SymbolKind::NegationPas)
      fail(Errc::Syntax, "'" + t.text + "' cannot be constrained", t.offset,
           {"N0..N3", "C0..C3", "Prép", "Det", "Ppv", "Vsup", "V"});
    return s;
  }

  Constraint constraint() {
    Constraint c;
    c.subject = constraint_subject();
    const Token& op = next();
    if (op.type != TokType::ConstraintOp) unexpected(op, {"'=:'"});
    c.values = values();
    if (c.values.empty()) fail(Errc::Syntax, "constraint needs at least one value", op.offset);
    return c;
  }
};

inline bool contains_type(const std::vector<Token>& toks, TokType type) {
  for (const auto& t : toks)
    if (t.type == type) return true;
  return false;
}

}  // namespace detail

inline PropertyLabel parse_label(const std::string& raw) {
  std::string text = normalize_text(raw);
  std::vector<detail::Token> toks = detail::tokenize(text);
  if (toks.size() == 1) fail(Errc::Syntax, "empty label", 0);

  PropertyLabel label;
  label.rawText = raw;

  bool has_equals = detail::contains_type(toks, detail::TokType::Equals);
  bool has_constraint_op = detail::contains_type(toks, detail::TokType::ConstraintOp);

  if (has_equals) {
    // context = realization
    Equivalence eq;
    detail::Parser p{toks};
    eq.context = p.symbol_run(false, false);
    if (eq.context.empty()) p.unexpected(p.peek(), {"equivalence context"});
    const detail::Token& t = p.next();
    if (t.type != detail::TokType::Equals) p.unexpected(t, {"'='"});
    if (has_constraint_op) {
      eq.realization = p.constraint();
    } else {
      std::vector<SlotSymbol> seq = p.symbol_run(false, false);
      if (seq.empty()) p.unexpected(p.peek(), {"equivalence realization"});
      const detail::Token& end = p.peek();
      if (end.type != detail::TokType::End) p.unexpected(end, {"end of label"});
      eq.realization = std::move(seq);
    }
    label.value = std::move(eq);
    return label;
  }

  if (has_constraint_op) {
    detail::Parser p{toks};
    label.value = p.constraint();
    return label;
  }

  // Bare "Nk apparition" / "Ck disparition" is a feature; anything else a construction.
  if (toks.size() == 3 && toks[0].type == detail::TokType::Word &&
      toks[1].type == detail::TokType::Word) {
    auto ann = detail::annotation_word(toks[1].text);
    if (ann && (*ann == Annotation::Apparition || *ann == Annotation::Disparition)) {
      SlotSymbol s;
      if (!detail::classify_word(toks[0].text, toks[0].offset, s) ||
          (s.kind != SymbolKind::FreeArg && s.kind != SymbolKind::FrozenArg))
        fail(Errc::Syntax, "feature subject must be an argument slot", toks[0].offset,
             {"N0..N3", "C0..C3"});
      Feature f;
      f.subject = s;
      f.tag = *ann;
      label.value = f;
      return label;
    }
  }

  detail::Parser p{toks};
  label.value = p.construction();
  return label;
}

// ---------------------------------------------------------------------------
// Alternation expansion

inline bool is_plain(const Construction& c) {
  for (const auto& el : c.slots)
    if (std::holds_alternative<Alternation>(el)) return false;
  return true;
}

inline std::vector<Construction> expand_alternations(const Construction& c) {
  std::vector<Construction> results;
  std::vector<SlotSymbol> prefix;

  auto emit = [&] {
    Construction plain;
    for (const auto& s : prefix) plain.slots.emplace_back(s);
    results.push_back(std::move(plain));
  };

  auto walk = [&](auto&& self, std::size_t at) -> void {
    if (at == c.slots.size()) {
      emit();
      return;
    }
    const SlotElement& el = c.slots[at];
    if (std::holds_alternative<SlotSymbol>(el)) {
      prefix.push_back(std::get<SlotSymbol>(el));
      self(self, at + 1);
      prefix.pop_back();
      return;
    }
    const Alternation& alt = std::get<Alternation>(el);
    for (const Alternative& arm : alt.alternatives) {
      if (std::holds_alternative<StarredEmptyArm>(arm)) continue;  // recorded as bad
      if (std::holds_alternative<EmptyArm>(arm)) {
        self(self, at + 1);
        continue;
      }
      const auto& seq = std::get<std::vector<SlotSymbol>>(arm);
      prefix.insert(prefix.end(), seq.begin(), seq.end());
      self(self, at + 1);
      prefix.resize(prefix.size() - seq.size());
    }
  };
  walk(walk, 0);

  std::sort(results.begin(), results.end(), [](const Construction& a, const Construction& b) {
    return print_canonical(a) < print_canonical(b);
  });
  results.erase(std::unique(results.begin(), results.end()), results.end());
  return results;
}

// Expands a label when it is a construction; other label kinds pass through.
inline std::vector<PropertyLabel> expand_label(const PropertyLabel& label) {
  std::vector<PropertyLabel> out;
  if (const auto* c = std::get_if<Construction>(&label.value)) {
    for (auto& plain : expand_alternations(*c)) {
      PropertyLabel l;
      l.rawText = print_canonical(plain);
      l.value = std::move(plain);
      out.push_back(std::move(l));
    }
  } else {
    out.push_back(label);
  }
  return out;
}

}  // namespace lgt
