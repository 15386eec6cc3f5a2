#pragma once

// Locative class splitting: entries of a class whose table codes a source
// construction, a destination construction and a dependent-source column are
// routed into both/source-only/dest-only/static/residual target classes, with
// argument renumbering and column pruning so every target stays self-licensed.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lgt/errors.hpp"
#include "lgt/formula.hpp"
#include "lgt/tableset.hpp"

namespace lgt {

enum class RouteKey {
  BothIndependent,
  BothDependentSource,
  SourceOnly,
  DestOnly,
  Static,
  Residual,
};

inline const char* route_name(RouteKey k) {
  switch (k) {
    case RouteKey::BothIndependent: return "both-independent";
    case RouteKey::BothDependentSource: return "both-dependent-source";
    case RouteKey::SourceOnly: return "source-only";
    case RouteKey::DestOnly: return "dest-only";
    case RouteKey::Static: return "static";
    case RouteKey::Residual: return "residual";
  }
  return "?";
}

struct SplitSpec {
  std::string classId;
  bool humanCorrelate = false;  // verify + drop "Nh =: N-hum", add "Nh =: Nhum" definitional
  PropertyLabel sourceColumn;
  PropertyLabel destColumn;
  PropertyLabel dependentSourceColumn;
  std::map<RouteKey, std::string> targets;  // both keys share one id; Static may be absent
};

struct RouteEvidence {
  Coding source = Coding::Uncoded;
  Coding dest = Coding::Uncoded;
  Coding dependent = Coding::Uncoded;
  std::vector<std::string> flags;
};

struct RoutingDecision {
  std::string lemma;
  RouteKey route = RouteKey::Residual;
  RouteEvidence evidence;
};

// ---------------------------------------------------------------------------
// Label utilities shared by the splitter

namespace detail {

template <typename Fn>
inline void for_each_symbol(const std::vector<SlotSymbol>& seq, Fn&& fn) {
  for (const auto& s : seq) fn(s);
}

template <typename Fn>
inline void for_each_symbol(const Construction& c, Fn&& fn) {
  for (const auto& el : c.slots) {
    if (const auto* s = std::get_if<SlotSymbol>(&el)) {
      fn(*s);
    } else {
      for (const auto& arm : std::get<Alternation>(el).alternatives)
        if (const auto* seq = std::get_if<std::vector<SlotSymbol>>(&arm))
          for (const auto& s : *seq) fn(s);
    }
  }
}

template <typename Fn>
inline void for_each_symbol(const PropertyLabel& label, Fn&& fn) {
  if (const auto* c = std::get_if<Construction>(&label.value)) {
    for_each_symbol(*c, fn);
  } else if (const auto* k = std::get_if<Constraint>(&label.value)) {
    fn(k->subject);
  } else if (const auto* e = std::get_if<Equivalence>(&label.value)) {
    for_each_symbol(e->context, fn);
    if (const auto* rk = std::get_if<Constraint>(&e->realization))
      fn(rk->subject);
    else
      for_each_symbol(std::get<std::vector<SlotSymbol>>(e->realization), fn);
  } else if (const auto* f = std::get_if<Feature>(&label.value)) {
    fn(f->subject);
  }
}

template <typename Fn>
inline void mutate_symbols(std::vector<SlotSymbol>& seq, Fn&& fn) {
  for (auto& s : seq) fn(s);
}

template <typename Fn>
inline void mutate_symbols(PropertyLabel& label, Fn&& fn) {
  if (auto* c = std::get_if<Construction>(&label.value)) {
    for (auto& el : c->slots) {
      if (auto* s = std::get_if<SlotSymbol>(&el)) {
        fn(*s);
      } else {
        for (auto& arm : std::get<Alternation>(el).alternatives)
          if (auto* sq = std::get_if<std::vector<SlotSymbol>>(&arm)) mutate_symbols(*sq, fn);
      }
    }
  } else if (auto* k = std::get_if<Constraint>(&label.value)) {
    fn(k->subject);
  } else if (auto* e = std::get_if<Equivalence>(&label.value)) {
    mutate_symbols(e->context, fn);
    if (auto* rk = std::get_if<Constraint>(&e->realization))
      fn(rk->subject);
    else
      mutate_symbols(std::get<std::vector<SlotSymbol>>(e->realization), fn);
  } else if (auto* f = std::get_if<Feature>(&label.value)) {
    fn(f->subject);
  }
}

inline bool symbol_is_arg_index(const SlotSymbol& s) {
  switch (s.kind) {
    case SymbolKind::FreeArg:
    case SymbolKind::FrozenArg:
    case SymbolKind::Preposition:
    case SymbolKind::Determiner:
      return s.index >= 0;
    default:
      return false;
  }
}

inline std::set<int> mentioned_arg_indices(const PropertyLabel& label) {
  std::set<int> out;
  for_each_symbol(label, [&](const SlotSymbol& s) {
    if (symbol_is_arg_index(s)) out.insert(s.index);
  });
  return out;
}

inline PropertyLabel renumber_label(const PropertyLabel& label, const std::map<int, int>& map) {
  PropertyLabel out = label;
  mutate_symbols(out, [&](SlotSymbol& s) {
    if (symbol_is_arg_index(s)) {
      auto it = map.find(s.index);
      if (it != map.end()) s.index = it->second;
    }
  });
  out.rawText = print_canonical(out);
  return out;
}

// FreeArg indices licensed by the constructions of a definitional list.
inline std::set<int> licensed_indices(const std::vector<PropertyLabel>& definitional) {
  std::set<int> out;
  for (const auto& label : definitional) {
    if (const auto* c = std::get_if<Construction>(&label.value)) {
      for_each_symbol(*c, [&](const SlotSymbol& s) {
        if ((s.kind == SymbolKind::FreeArg || s.kind == SymbolKind::FrozenArg) && s.index >= 0)
          out.insert(s.index);
      });
    }
  }
  return out;
}

struct RoleConstruction {
  Construction slots;   // the whole plain construction
  std::size_t roleAt;   // index of the annotated slot
  int argIndex;         // FreeArg index of the annotated slot
};

inline RoleConstruction role_construction(const PropertyLabel& label, Annotation role,
                                          const std::string& what) {
  const auto* c = std::get_if<Construction>(&label.value);
  if (!c || !is_plain(*c))
    fail(Errc::Definition, what + " '" + print_canonical(label) + "' must be a plain construction");
  std::optional<std::size_t> at;
  for (std::size_t i = 0; i < c->slots.size(); ++i) {
    const auto& s = std::get<SlotSymbol>(c->slots[i]);
    if (s.annotation == role) {
      if (at) fail(Errc::Definition, what + " has more than one role-annotated slot");
      at = i;
    }
  }
  if (!at)
    fail(Errc::Definition, what + " '" + print_canonical(label) + "' lacks its role annotation");
  const auto& s = std::get<SlotSymbol>(c->slots[*at]);
  if (s.kind != SymbolKind::FreeArg)
    fail(Errc::Definition, what + ": role annotation must sit on a free argument");
  return {*c, *at, s.index};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Routing

inline RouteKey route_from_evidence(const RouteEvidence& ev, const std::string& lemma) {
  auto uncoded = [&](const char* which) {
    fail(Errc::UnroutableEntry,
         "entry '" + lemma + "': consulted " + std::string(which) + " cell is uncoded (~)");
  };
  if (ev.source == Coding::Uncoded) uncoded("source");
  if (ev.dest == Coding::Uncoded) uncoded("destination");
  if (ev.dependent == Coding::Uncoded) uncoded("dependent-source");

  bool s = ev.source == Coding::Plus;
  bool d = ev.dest == Coding::Plus;
  bool dep = ev.dependent == Coding::Plus;
  if (s && d) return dep ? RouteKey::BothDependentSource : RouteKey::BothIndependent;
  if (s) return RouteKey::SourceOnly;
  if (d) return RouteKey::DestOnly;

  bool is_static = std::count(ev.flags.begin(), ev.flags.end(), "static") > 0;
  bool is_residual = std::count(ev.flags.begin(), ev.flags.end(), "residual") > 0;
  if (is_static && is_residual)
    fail(Errc::UnroutableEntry, "entry '" + lemma + "' is flagged both static and residual");
  if (is_static) return RouteKey::Static;
  if (is_residual) return RouteKey::Residual;
  fail(Errc::UnroutableEntry,
       "entry '" + lemma + "' rejects both locative arguments and carries no static/residual flag");
}

inline RoutingDecision route_entry(const Table& table, const SplitSpec& spec, const Entry& e) {
  auto need = [&](const PropertyLabel& label, const char* what) {
    auto idx = column_index(table, print_canonical(label));
    if (!idx)
      fail(Errc::UnknownColumn, "class " + table.classId + " has no " + std::string(what) +
                                    " column '" + print_canonical(label) + "'");
    return *idx;
  };
  RoutingDecision d;
  d.lemma = e.lemma;
  d.evidence.source = e.codings[need(spec.sourceColumn, "source")];
  d.evidence.dest = e.codings[need(spec.destColumn, "destination")];
  d.evidence.dependent = e.codings[need(spec.dependentSourceColumn, "dependent-source")];
  d.evidence.flags = e.flags;
  d.route = route_from_evidence(d.evidence, e.lemma);
  return d;
}

// ---------------------------------------------------------------------------
// Split

namespace detail {

struct TargetPlan {
  std::string classId;
  std::vector<PropertyLabel> definitional;
  std::set<int> vacated;        // argument indices with no construction in this target
  std::map<int, int> renumber;  // applied after the vacated check
  bool keepSingleArgColumns = false;  // the both-class retains recoded source/dest columns
};

inline PropertyLabel label_of(Construction c) {
  PropertyLabel l;
  l.rawText = print_canonical(c);
  l.value = std::move(c);
  return l;
}

inline PropertyLabel strip_role(const RoleConstruction& rc) {
  Construction c = rc.slots;
  std::get<SlotSymbol>(c.slots[rc.roleAt]).annotation = Annotation::None;
  return label_of(std::move(c));
}

inline PropertyLabel merge_both(const RoleConstruction& src, const RoleConstruction& dst) {
  Construction c = src.slots;
  std::size_t start = dst.roleAt;
  if (start > 0) {
    const auto& before = std::get<SlotSymbol>(dst.slots.slots[start - 1]);
    if (before.kind == SymbolKind::Locative || before.kind == SymbolKind::Preposition)
      --start;
  }
  for (std::size_t i = start; i < dst.slots.slots.size(); ++i) c.slots.push_back(dst.slots.slots[i]);
  return label_of(std::move(c));
}

}  // namespace detail

// Routes every entry of spec.classId and rebuilds the target classes. The
// source class disappears; targets are created, or appended to when a class of
// that id already exists with matching definitional list and columns.
inline std::pair<TableSet, std::vector<RoutingDecision>> split_class(const TableSet& ts,
                                                                     const SplitSpec& spec) {
  const Table& source = table_at(ts, spec.classId);
  auto def_it = ts.definitions.find(spec.classId);
  if (def_it == ts.definitions.end())
    fail(Errc::Definition, "class " + spec.classId + " has no definition");
  const ClassDefinition& source_def = def_it->second;

  // Required route targets; Static is the one allowed to be absent.
  for (RouteKey k : {RouteKey::BothIndependent, RouteKey::BothDependentSource,
                     RouteKey::SourceOnly, RouteKey::DestOnly, RouteKey::Residual})
    if (!spec.targets.count(k))
      fail(Errc::Definition,
           std::string("split spec for ") + spec.classId + " lacks a " + route_name(k) + " target");
  if (spec.targets.at(RouteKey::BothIndependent) != spec.targets.at(RouteKey::BothDependentSource))
    fail(Errc::Definition, "both-independent and both-dependent targets must share one class");

  detail::RoleConstruction src =
      detail::role_construction(spec.sourceColumn, Annotation::Source, "source construction");
  detail::RoleConstruction dst =
      detail::role_construction(spec.destColumn, Annotation::Destination, "destination construction");

  // Human correlate: the free argument of the shared prefix that is neither the
  // subject nor the source argument (38LH: N1).
  std::optional<int> human_idx;
  std::optional<std::size_t> human_col;
  if (spec.humanCorrelate) {
    std::set<int> candidates;
    detail::for_each_symbol(src.slots, [&](const SlotSymbol& s) {
      if (s.kind == SymbolKind::FreeArg && s.index > 0 && s.index != src.argIndex)
        candidates.insert(s.index);
    });
    if (candidates.size() != 1)
      fail(Errc::Definition, "cannot determine the human correlate argument for " + spec.classId);
    human_idx = *candidates.begin();
    Constraint human;
    human.subject = make_symbol(SymbolKind::FreeArg, *human_idx);
    human.values = {DistributionValue{DistKind::NonHum, {}}};
    PropertyLabel l;
    l.value = human;
    l.rawText = print_canonical(l);
    human_col = column_index(source, print_canonical(l));
    if (!human_col)
      fail(Errc::HumanConstraintViolated,
           "class " + spec.classId + " lacks the column '" + print_canonical(l) + "'");
    for (const auto& e : source.entries)
      if (e.codings[*human_col] != Coding::Minus)
        fail(Errc::HumanConstraintViolated, "entry '" + e.lemma + "' does not reject '" +
                                                print_canonical(l) + "'; cannot drop it");
  }

  // Dry run: every entry must route before anything is rebuilt.
  std::vector<RoutingDecision> decisions;
  decisions.reserve(source.entries.size());
  for (const auto& e : source.entries) {
    RoutingDecision d = route_entry(source, spec, e);
    if (d.route == RouteKey::Static && !spec.targets.count(RouteKey::Static))
      fail(Errc::UnroutableEntry,
           "entry '" + e.lemma + "' routes static but the split has no static target");
    decisions.push_back(std::move(d));
  }

  // Target plans.
  std::map<RouteKey, detail::TargetPlan> plans;
  auto carried = [&](const detail::TargetPlan& plan) {
    // Non-construction definitional labels of the source class survive in each
    // target; constructions mentioning the split arguments are superseded.
    std::vector<PropertyLabel> out;
    for (const auto& label : source_def.definitional) {
      if (const auto* c = std::get_if<Construction>(&label.value)) {
        bool locative = false;
        detail::for_each_symbol(*c, [&](const SlotSymbol& s) {
          if (s.kind == SymbolKind::Locative) locative = true;
          if (s.kind == SymbolKind::FreeArg && (s.index == src.argIndex || s.index == dst.argIndex))
            locative = true;
        });
        if (locative) continue;
      }
      auto mentioned = detail::mentioned_arg_indices(label);
      bool drop = false;
      for (int i : mentioned)
        if (plan.vacated.count(i)) drop = true;
      if (drop) continue;
      out.push_back(detail::renumber_label(label, plan.renumber));
    }
    return out;
  };

  auto add_plan = [&](RouteKey key, PropertyLabel base, std::set<int> vacated,
                      std::map<int, int> renumber, bool keepSingle) {
    if (!spec.targets.count(key)) return;
    detail::TargetPlan plan;
    plan.classId = spec.targets.at(key);
    plan.vacated = std::move(vacated);
    plan.renumber = std::move(renumber);
    plan.keepSingleArgColumns = keepSingle;
    plan.definitional.push_back(std::move(base));
    for (auto& l : carried(plan)) plan.definitional.push_back(std::move(l));
    if (human_idx) {
      Constraint human;
      human.subject = make_symbol(SymbolKind::FreeArg, *human_idx);
      human.values = {DistributionValue{DistKind::Hum, {}}};
      PropertyLabel l;
      l.value = human;
      l.rawText = print_canonical(l);
      bool present = false;
      for (const auto& d : plan.definitional)
        if (print_canonical(d) == print_canonical(l)) present = true;
      if (!present) plan.definitional.push_back(std::move(l));
    }
    plans.emplace(key, std::move(plan));
  };

  add_plan(RouteKey::BothIndependent, detail::merge_both(src, dst), {}, {}, true);
  plans.emplace(RouteKey::BothDependentSource, plans.at(RouteKey::BothIndependent));
  add_plan(RouteKey::SourceOnly, spec.sourceColumn, {dst.argIndex}, {}, false);
  add_plan(RouteKey::DestOnly,
           detail::renumber_label(spec.destColumn, {{dst.argIndex, src.argIndex}}),
           {src.argIndex}, {{dst.argIndex, src.argIndex}}, false);
  add_plan(RouteKey::Static, detail::strip_role(src), {dst.argIndex}, {}, false);
  add_plan(RouteKey::Residual, detail::strip_role(src), {dst.argIndex}, {}, false);

  // Column layout per plan, walking source columns in order.
  std::string src_canon = print_canonical(spec.sourceColumn);
  std::string dst_canon = print_canonical(spec.destColumn);
  std::string dep_canon = print_canonical(spec.dependentSourceColumn);
  std::size_t src_col = *column_index(source, src_canon);
  std::size_t dst_col = *column_index(source, dst_canon);
  std::size_t dep_col = *column_index(source, dep_canon);

  struct ColumnPick {
    enum class From { SourceAlone, DestAlone, Copy } from;
    std::size_t sourceIndex = 0;
    PropertyLabel label;
  };
  std::map<RouteKey, std::vector<ColumnPick>> columns;
  for (auto& [key, plan] : plans) {
    std::set<int> licensed = detail::licensed_indices(plan.definitional);
    std::vector<ColumnPick> picks;
    for (std::size_t i = 0; i < source.columns.size(); ++i) {
      if (i == dep_col) continue;
      if (human_col && i == *human_col) continue;
      if (i == src_col || i == dst_col) {
        if (plan.keepSingleArgColumns)
          picks.push_back({i == src_col ? ColumnPick::From::SourceAlone : ColumnPick::From::DestAlone,
                           i, source.columns[i]});
        continue;
      }
      const PropertyLabel& label = source.columns[i];
      auto mentioned = detail::mentioned_arg_indices(label);
      bool drop = false;
      for (int m : mentioned)
        if (plan.vacated.count(m)) drop = true;
      if (drop) continue;
      PropertyLabel renumbered = detail::renumber_label(label, plan.renumber);
      for (int m : detail::mentioned_arg_indices(renumbered))
        if (m > 0 && !licensed.count(m)) drop = true;  // no construction licenses it here
      if (drop) continue;
      picks.push_back({ColumnPick::From::Copy, i, std::move(renumbered)});
    }
    columns.emplace(key, std::move(picks));
  }

  // Rebuild.
  TableSet out = ts;
  out.tables.erase(spec.classId);
  out.definitions.erase(spec.classId);

  auto ensure_target = [&](RouteKey key) -> Table& {
    const detail::TargetPlan& plan = plans.at(key);
    const std::vector<ColumnPick>& picks = columns.at(key);
    auto it = out.tables.find(plan.classId);
    if (it == out.tables.end()) {
      Table t;
      t.classId = plan.classId;
      t.category = source.category;
      for (const auto& p : picks) t.columns.push_back(p.label);
      out.tables.emplace(plan.classId, std::move(t));
      ClassDefinition def;
      def.classId = plan.classId;
      def.category = source.category;
      def.definitional = plan.definitional;
      out.definitions.emplace(plan.classId, std::move(def));
      return out.tables.at(plan.classId);
    }
    // Appending to an existing class: definitional list and columns must align.
    Table& t = it->second;
    const ClassDefinition& def = out.definitions.at(plan.classId);
    auto canon_set = [](const std::vector<PropertyLabel>& labels) {
      std::set<std::string> s;
      for (const auto& l : labels) s.insert(print_canonical(l));
      return s;
    };
    if (canon_set(def.definitional) != canon_set(plan.definitional))
      fail(Errc::Definition, "cannot merge into class " + plan.classId +
                                 ": definitional lists disagree");
    if (t.columns.size() != picks.size())
      fail(Errc::Definition,
           "cannot merge into class " + plan.classId + ": column lists disagree");
    for (std::size_t i = 0; i < picks.size(); ++i)
      if (print_canonical(t.columns[i]) != print_canonical(picks[i].label))
        fail(Errc::Definition,
             "cannot merge into class " + plan.classId + ": column lists disagree");
    if (t.category != source.category)
      fail(Errc::Definition, "cannot merge into class " + plan.classId + ": categories disagree");
    return t;
  };

  for (std::size_t ei = 0; ei < source.entries.size(); ++ei) {
    const Entry& e = source.entries[ei];
    const RoutingDecision& d = decisions[ei];
    Table& t = ensure_target(d.route);
    for (const auto& existing : t.entries)
      if (existing.lemma == e.lemma)
        fail(Errc::DuplicateLemma,
             "lemma '" + e.lemma + "' already present in target class " + t.classId);
    Entry ne;
    ne.lemma = e.lemma;
    ne.flags = e.flags;
    for (const auto& p : columns.at(d.route)) {
      switch (p.from) {
        case ColumnPick::From::SourceAlone:
          // In the both-class the source construction codes "source alone":
          // dependent sources keep the destination requirement, so Minus.
          ne.codings.push_back(d.route == RouteKey::BothDependentSource ? Coding::Minus
                                                                        : Coding::Plus);
          break;
        case ColumnPick::From::DestAlone:
          ne.codings.push_back(Coding::Plus);
          break;
        case ColumnPick::From::Copy:
          ne.codings.push_back(e.codings[p.sourceIndex]);
          break;
      }
    }
    t.entries.push_back(std::move(ne));
  }

  validate_tableset(out);
  return {std::move(out), std::move(decisions)};
}

}  // namespace lgt
