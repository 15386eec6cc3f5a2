// Acceptance gate: one line per criterion, nonzero exit when any fails.
//
//   1 notation round-trip        fixture inventory + 10,000 randomized ASTs
//   2 alternation oracle         expand_alternations vs brute-force enumeration
//   3 reference replay           script output byte-identical to expected files
//   4 split reconstruction      routing of every named entry + routing table
//   5 promotion invariance       flatten unchanged by promoting all-plus columns
//   6 licensing detection        pristine witnesses flagged, normalized set clean
//   7 determinism                repeated and parallel builds byte-identical

#include <lgt/lexicon.hpp>
#include <lgt/normalize.hpp>
#include <lgt/split.hpp>
#include <lgt/tableset.hpp>

#include "support/gen.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << ": " << name << " — " << detail << "\n";
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& de : fs::recursive_directory_iterator(dir))
    if (de.is_regular_file())
      out[fs::relative(de.path(), dir).generic_string()] = slurp(de.path());
  return out;
}

std::vector<std::string> read_labels_file(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    lines.push_back(line.substr(start));
  }
  return lines;
}

std::set<std::string> definitional_set(const lgt::TableSet& ts, const std::string& id) {
  std::set<std::string> out;
  for (const auto& l : ts.definitions.at(id).definitional) out.insert(lgt::print_canonical(l));
  return out;
}

bool has_column(const lgt::Table& t, const std::string& canon) {
  return lgt::column_index(t, canon).has_value();
}

// ---------------------------------------------------------------------------

void criterion_roundtrip(const fs::path& fixtures) {
  auto t0 = Clock::now();
  std::vector<std::string> labels = read_labels_file(fixtures / "labels.txt");
  std::set<std::string> distinct;
  std::size_t bad = 0;
  std::string first_bad;
  for (const auto& raw : labels) {
    try {
      lgt::PropertyLabel l1 = lgt::parse_label(raw);
      std::string p1 = lgt::print_canonical(l1);
      lgt::PropertyLabel l2 = lgt::parse_label(p1);
      std::string p2 = lgt::print_canonical(l2);
      if (p1 != p2 || !(l1 == l2)) {
        ++bad;
        if (first_bad.empty()) first_bad = raw;
      }
      distinct.insert(p1);
    } catch (const lgt::Error& e) {
      ++bad;
      if (first_bad.empty()) first_bad = raw + " (" + e.what() + ")";
    }
  }

  gen::Rng rng(20260821);
  std::size_t random_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    lgt::PropertyLabel l = gen::random_label(rng);
    std::string p1 = lgt::print_canonical(l);
    try {
      lgt::PropertyLabel back = lgt::parse_label(p1);
      if (!(back == l) || lgt::print_canonical(back) != p1) {
        ++random_bad;
        if (first_bad.empty()) first_bad = p1;
      }
    } catch (const lgt::Error& e) {
      ++random_bad;
      if (first_bad.empty()) first_bad = p1 + " (" + e.what() + ")";
    }
  }
  double dt = seconds_since(t0);

  std::ostringstream detail;
  detail << labels.size() << " inventory labels (" << distinct.size() << " distinct), 10000 randomized ASTs, "
         << bad + random_bad << " mismatches, " << dt << "s";
  if (!first_bad.empty()) detail << "; first: " << first_bad;
  report("notation round-trip", bad == 0 && random_bad == 0 && distinct.size() >= 60 && dt < 5.0,
         detail.str());
}

void criterion_expansion_oracle() {
  auto t0 = Clock::now();
  gen::Rng rng(97);
  std::size_t mismatches = 0;
  std::string first_bad;
  for (int i = 0; i < 10000; ++i) {
    lgt::Construction c = gen::random_construction(rng, 3, 4);
    std::vector<std::string> expect = gen::oracle_expand(c);
    std::vector<std::string> got;
    for (const auto& plain : lgt::expand_alternations(c)) got.push_back(lgt::print_canonical(plain));
    if (got != expect) {
      ++mismatches;
      if (first_bad.empty()) first_bad = lgt::print_canonical(c);
    }
  }
  double dt = seconds_since(t0);
  std::ostringstream detail;
  detail << "10000 constructions (≤3 alternations × ≤4 alternatives), " << mismatches
         << " oracle mismatches, " << dt << "s";
  if (!first_bad.empty()) detail << "; first: " << first_bad;
  report("alternation expansion oracle", mismatches == 0 && dt < 10.0, detail.str());
}

void criterion_replay(const fs::path& fixtures, const lgt::TableSet& pristine,
                      const lgt::TableSet& replayed, const lgt::TransformationReport& rep) {
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };

  // Byte-identical output against the committed expected files.
  fs::path outDir = fs::temp_directory_path() / "lgt-acceptance-replay";
  fs::remove_all(outDir);
  lgt::save_tableset(replayed, outDir);
  lgt::write_file(outDir / "report.txt", lgt::serialize_report(rep));
  std::map<std::string, std::string> got = dir_bytes(outDir);
  std::map<std::string, std::string> want = dir_bytes(fixtures / "expected" / "tables");
  want["report.txt"] = slurp(fixtures / "expected" / "report.txt");
  got["report.txt"] = slurp(outDir / "report.txt");
  for (const auto& [rel, bytes] : want) {
    auto it = got.find(rel);
    if (it == got.end())
      problems.push_back("missing output " + rel);
    else if (it->second != bytes)
      problems.push_back("byte mismatch in " + rel);
  }
  for (const auto& [rel, bytes] : got)
    if (!want.count(rel)) problems.push_back("unexpected output " + rel);

  // The named reconstructions, asserted structurally as well.
  expect(definitional_set(replayed, "32A") ==
             std::set<std::string>{"N0 V N1", "N1 apparition"},
         "32A split");
  expect(definitional_set(replayed, "32CV") ==
             std::set<std::string>{"N0 V N1", "N0 V N1 en V-n", "N2 apparition"},
         "32CV expansion and feature");
  expect(definitional_set(replayed, "35S").count("Prép =: avec") == 1 &&
             has_column(replayed.tables.at("35S"), "Prép =: d'avec") &&
             !has_column(replayed.tables.at("35S"), "Prép =: avec"),
         "35S promotion");
  {
    const lgt::Table& t = replayed.tables.at("36DT");
    auto renamed = lgt::column_index(t, "Prép N2-hum = Ppv =: lui");
    auto src = lgt::column_index(t, "N2 =: N-hum");
    auto dup = lgt::column_index(t, "N0 =: N-hum");
    bool ok = renamed && src && dup;
    if (ok)
      for (const auto& e : t.entries)
        ok = ok && e.codings[*renamed] == e.codings[*src] && e.codings[*dup] == e.codings[*src];
    expect(ok && definitional_set(replayed, "36DT").count("Prép N2hum = Ppv =: lui") == 1,
           "36DT duplication/renaming");
  }
  {
    const lgt::Table& an09 = replayed.tables.at("AN09");
    expect(has_column(an09, "Det =: un") && has_column(an09, "Det =: un-certain") &&
               has_column(an09, "Det =: des") && !has_column(an09, "N0 avoir un N"),
           "AN09 renames");
  }
  expect(definitional_set(replayed, "AN07") ==
             std::set<std::string>{"N0 avoir Det N", "Det =: un-Modif", "Det =: un-certain"},
         "AN07 definitional set");
  expect(definitional_set(replayed, "AN08") ==
             std::set<std::string>{"N0 avoir Det N", "Vsup =: comporter", "Vsup =: comprendre"} &&
             has_column(replayed.tables.at("AN08"), "il y avoir Det N Loc N0"),
         "AN08 demotion");
  expect(definitional_set(replayed, "31I") == std::set<std::string>{"C0 V", "C0 =: ça"},
         "31I definitional set");
  {
    // Adverb promotions per class list: the named placement constructions are
    // definitional after replay and no longer coded columns.
    auto promoted = [&](const std::string& id, const std::string& label) {
      return definitional_set(replayed, id).count(label) == 1 &&
             !has_column(replayed.tables.at(id), label);
    };
    expect(promoted("ADVMP", "Adv, N0 V W") && promoted("ADVMP", "Adv, N0 ne V pas W") &&
               promoted("ADVMS", "Adv, N0 V W") && promoted("ADVMTF", "Adv, N0 V W") &&
               promoted("ADVPS", "Adv, N0 ne V pas W") && promoted("ADVPC", "Adv, N0 ne V pas W") &&
               promoted("ADVPAE", "Adv, N0 ne V pas W") &&
               definitional_set(replayed, "ADVMF") == std::set<std::string>{"N0 V Adv W"},
           "adverb-class promotions");
  }
  {
    auto it = replayed.tables.find("32D");
    std::vector<std::string> lemmas;
    if (it != replayed.tables.end())
      for (const auto& e : it->second.entries) lemmas.push_back(e.lemma);
    expect(lemmas == std::vector<std::string>{"anéantir", "démolir", "détruire", "fusiller",
                                              "sacrifier", "souffler", "supprimer", "volatiliser"},
           "32D creation");
  }
  (void)pristine;

  std::ostringstream detail;
  if (problems.empty())
    detail << want.size() << " expected files byte-identical; all named reconstructions hold";
  else {
    detail << problems.size() << " problems:";
    for (const auto& p : problems) detail << " [" << p << "]";
  }
  report("reference replay", problems.empty(), detail.str());
}

void criterion_split(const lgt::TableSet& pristine, const lgt::TableSet& replayed) {
  std::vector<std::string> problems;
  auto locate = [&](const std::string& lemma) -> std::string {
    std::string found;
    for (const auto& [id, t] : replayed.tables)
      for (const auto& e : t.entries)
        if (e.lemma == lemma) found = id;
    return found;
  };
  auto expect_route = [&](const std::string& lemma, const std::string& cls) {
    std::string got = locate(lemma);
    if (got != cls) problems.push_back(lemma + " landed in " + (got.empty() ? "nowhere" : got));
  };
  expect_route("bondir", "35L");
  expect_route("cheminer", "35L");
  expect_route("dérailler", "35LS");
  expect_route("s'enfoncer", "35LD");
  expect_route("sortir", "35ST");
  expect_route("patauger", "35LR");
  expect_route("replier", "38LH");
  expect_route("conduire", "38LH");
  expect_route("virer", "38LHS");
  expect_route("engager", "38LHD");
  expect_route("semer", "38LHR");

  // Dependent sources keep the destination but lose stand-alone source use.
  auto source_cell = [&](const std::string& id, const std::string& col, const std::string& lemma) {
    const lgt::Table& t = replayed.tables.at(id);
    return lgt::entry_at(t, lemma).codings[*lgt::column_index(t, col)];
  };
  if (source_cell("35L", "N0 V Loc N1 source", "cheminer") != lgt::Coding::Minus ||
      source_cell("35L", "N0 V Loc N1 source", "bondir") != lgt::Coding::Plus)
    problems.push_back("35L dependent-source recoding wrong");
  if (source_cell("38LH", "N0 V N1 Loc N2 source", "conduire") != lgt::Coding::Minus ||
      source_cell("38LH", "N0 V N1 Loc N2 source", "replier") != lgt::Coding::Plus)
    problems.push_back("38LH dependent-source recoding wrong");

  // Entry counts conserved across each split family.
  auto count = [](const lgt::TableSet& ts, std::initializer_list<const char*> ids) {
    std::size_t n = 0;
    for (const char* id : ids) {
      auto it = ts.tables.find(id);
      if (it != ts.tables.end()) n += it->second.entries.size();
    }
    return n;
  };
  std::size_t before35 = count(pristine, {"35L", "35ST"});
  std::size_t after35 = count(replayed, {"35L", "35LS", "35LD", "35ST", "35LR"});
  if (before35 != after35) problems.push_back("35 family entry count changed");
  std::size_t before38 = count(pristine, {"38LH"});
  std::size_t after38 = count(replayed, {"38LH", "38LHS", "38LHD", "38LHR"});
  if (before38 != after38) problems.push_back("38 family entry count changed");

  // Routing table over every coding combination and flag state.
  lgt::SplitSpec spec;
  spec.classId = "X";
  spec.sourceColumn = lgt::parse_label("N0 V Loc N1 source");
  spec.destColumn = lgt::parse_label("N0 V Loc N2 destination");
  spec.dependentSourceColumn = lgt::parse_label("N1 source dépendante");
  spec.targets = {{lgt::RouteKey::BothIndependent, "B"}, {lgt::RouteKey::BothDependentSource, "B"},
                  {lgt::RouteKey::SourceOnly, "S"},      {lgt::RouteKey::DestOnly, "D"},
                  {lgt::RouteKey::Static, "T"},          {lgt::RouteKey::Residual, "R"}};
  lgt::Table t;
  t.classId = "X";
  t.columns = {spec.sourceColumn, spec.destColumn, spec.dependentSourceColumn};
  std::size_t checked = 0;
  for (int src = 0; src < 2; ++src)
    for (int dst = 0; dst < 2; ++dst)
      for (int dep = 0; dep < 2; ++dep)
        for (int flag = 0; flag < 3; ++flag) {
          lgt::Entry e;
          e.lemma = "probe";
          auto coding = [](int b) { return b ? lgt::Coding::Plus : lgt::Coding::Minus; };
          e.codings = {coding(src), coding(dst), coding(dep)};
          if (flag == 1) e.flags = {"static"};
          if (flag == 2) e.flags = {"residual"};

          std::optional<lgt::RouteKey> want;
          if (src && dst)
            want = dep ? lgt::RouteKey::BothDependentSource : lgt::RouteKey::BothIndependent;
          else if (src)
            want = lgt::RouteKey::SourceOnly;
          else if (dst)
            want = lgt::RouteKey::DestOnly;
          else if (flag == 1)
            want = lgt::RouteKey::Static;
          else if (flag == 2)
            want = lgt::RouteKey::Residual;

          ++checked;
          try {
            lgt::RoutingDecision d = lgt::route_entry(t, spec, e);
            if (!want) {
              problems.push_back("combination should be unroutable");
            } else if (d.route != *want) {
              problems.push_back(std::string("route mismatch at src=") + std::to_string(src) +
                                 " dst=" + std::to_string(dst) + " dep=" + std::to_string(dep) +
                                 " flag=" + std::to_string(flag));
            }
          } catch (const lgt::Error& e2) {
            if (want || e2.code() != lgt::Errc::UnroutableEntry)
              problems.push_back(std::string("unexpected error: ") + e2.what());
          }
        }

  std::ostringstream detail;
  if (problems.empty())
    detail << "all 11 named entries routed, counts conserved, " << checked
           << " routing-table combinations verified";
  else {
    detail << problems.size() << " problems:";
    for (const auto& p : problems) detail << " [" << p << "]";
  }
  report("split reconstruction", problems.empty(), detail.str());
}

std::string record_key(const lgt::LexiconRecord& r) {
  std::ostringstream ss;
  ss << r.classId << "\x1f" << r.lemma << "\x1f" << lgt::category_name(r.category) << "\x1f";
  for (const auto& l : r.accepted) ss << lgt::print_canonical(l) << ";";
  ss << "\x1f";
  for (const auto& l : r.rejected) ss << lgt::print_canonical(l) << ";";
  ss << "\x1f";
  for (const auto& l : r.uncoded) ss << lgt::print_canonical(l) << ";";
  return ss.str();
}

void criterion_promotion_invariance() {
  gen::Rng rng(4242);
  std::size_t mismatches = 0, tables = 0;
  std::string first_bad;
  const std::vector<std::string> subjects = {"Det", "Prép", "Prép1", "Prép2", "Ppv", "Vsup"};
  const auto& words = gen::value_pool();

  while (tables < 1000) {
    lgt::TableSet ts;
    lgt::ClassDefinition def;
    def.classId = "RND";
    def.category = lgt::Category::Verb;
    def.definitional.push_back(lgt::parse_label("N0 V N1"));
    lgt::Table t;
    t.classId = "RND";
    t.category = lgt::Category::Verb;

    int ncols = gen::pick(rng, 1, 10);
    std::set<std::string> used = {"N0 V N1"};
    for (int c = 0; c < ncols; ++c) {
      for (;;) {
        std::string label = subjects[gen::pick(rng, 0, (int)subjects.size() - 1)] + " =: " +
                            words[gen::pick(rng, 0, (int)words.size() - 1)];
        if (used.insert(lgt::print_canonical(lgt::parse_label(label))).second) {
          t.columns.push_back(lgt::parse_label(label));
          break;
        }
      }
    }
    int promoteCol = gen::pick(rng, 0, (int)t.columns.size() - 1);
    int nrows = gen::pick(rng, 1, 20);
    for (int r = 0; r < nrows; ++r) {
      lgt::Entry e;
      e.lemma = "lemme" + std::to_string(r);
      for (int c = 0; c < (int)t.columns.size(); ++c) {
        if (c == promoteCol) {
          e.codings.push_back(lgt::Coding::Plus);  // forced all-plus column
        } else {
          int k = gen::pick(rng, 0, 3);
          e.codings.push_back(k == 0 ? lgt::Coding::Uncoded
                                     : (k <= 2 ? lgt::Coding::Plus : lgt::Coding::Minus));
        }
      }
      t.entries.push_back(std::move(e));
    }
    ts.definitions["RND"] = def;
    ts.tables["RND"] = t;
    ++tables;

    lgt::PropertyLabel target = t.columns[promoteCol];
    std::set<std::string> before, after;
    for (const auto& r : lgt::flatten_class(ts, "RND")) before.insert(record_key(r));
    lgt::TableSet promoted = lgt::promote_constant_column(ts, "RND", target);
    for (const auto& r : lgt::flatten_class(promoted, "RND")) after.insert(record_key(r));
    if (before != after) {
      ++mismatches;
      if (first_bad.empty()) first_bad = lgt::print_canonical(target);
    }
  }
  std::ostringstream detail;
  detail << tables << " randomized tables, " << mismatches << " flatten differences";
  if (!first_bad.empty()) detail << "; first: " << first_bad;
  report("promotion invariance", mismatches == 0, detail.str());
}

void criterion_licensing(const lgt::TableSet& pristine, const lgt::TableSet& replayed) {
  std::vector<lgt::LicensingIssue> pre = lgt::validate_licensing(lgt::flatten(pristine));
  std::size_t errors35L = 0;
  for (const auto& i : pre)
    if (i.classId == "35L" && i.severity == lgt::Severity::Error) ++errors35L;
  std::vector<lgt::LicensingIssue> post = lgt::validate_licensing(lgt::flatten(replayed));
  std::size_t postErrors = 0;
  std::string sample;
  for (const auto& i : post)
    if (i.severity == lgt::Severity::Error) {
      ++postErrors;
      if (sample.empty()) sample = i.classId + "/" + i.lemma + " " + i.offendingLabel;
    }
  std::ostringstream detail;
  detail << errors35L << " errors on pristine 35L, " << postErrors
         << " errors after normalization";
  if (!sample.empty()) detail << "; first: " << sample;
  report("licensing detection", errors35L >= 1 && postErrors == 0, detail.str());
}

void criterion_determinism(const fs::path& fixtures) {
  auto t0 = Clock::now();
  fs::path base = fs::temp_directory_path() / "lgt-acceptance-cli";
  fs::remove_all(base);
  fs::create_directories(base);
  auto run = [&](const std::string& out, const std::string& extra) {
    std::ostringstream cmd;
    cmd << LGTOOL_BIN << " build --tables " << (fixtures / "tables") << " --defs "
        << (fixtures / "definitions.txt") << " --script " << (fixtures / "paper.lgt")
        << " --out " << (base / out) << extra << " > " << (base / (out + ".log")) << " 2>&1";
    return std::system(cmd.str().c_str());
  };
  int r1 = run("a", "");
  int r2 = run("b", "");
  int r3 = run("j1", " --jobs 1");
  int r4 = run("j8", " --jobs 8");
  double dt = seconds_since(t0);

  std::vector<std::string> problems;
  if (r1 != 0 || r2 != 0 || r3 != 0 || r4 != 0) problems.push_back("nonzero exit status");
  if (problems.empty()) {
    if (dir_bytes(base / "a") != dir_bytes(base / "b"))
      problems.push_back("consecutive runs differ");
    if (dir_bytes(base / "j1") != dir_bytes(base / "j8"))
      problems.push_back("--jobs 1 and --jobs 8 differ");
  }
  if (dt >= 10.0) problems.push_back("pipeline too slow");
  std::ostringstream detail;
  if (problems.empty())
    detail << "two runs and --jobs 1/8 byte-identical, 4 full pipelines in " << dt << "s";
  else {
    detail << problems.size() << " problems:";
    for (const auto& p : problems) detail << " [" << p << "]";
  }
  report("determinism", problems.empty(), detail.str());
}

}  // namespace

int main() {
  fs::path fixtures = FIXTURES_DIR;
  try {
    criterion_roundtrip(fixtures);
    criterion_expansion_oracle();

    lgt::TableSet pristine =
        lgt::load_tableset(fixtures / "tables", fixtures / "definitions.txt");
    auto [replayed, rep] = lgt::apply_script_text(pristine, slurp(fixtures / "paper.lgt"));

    criterion_replay(fixtures, pristine, replayed, rep);
    criterion_split(pristine, replayed);
    criterion_promotion_invariance();
    criterion_licensing(pristine, replayed);
    criterion_determinism(fixtures);
  } catch (const std::exception& e) {
    std::cout << "FAIL: acceptance harness — " << e.what() << "\n";
    ++failures;
  }
  std::cout << (failures == 0 ? "all criteria hold" : "criteria failing") << "\n";
  return failures == 0 ? 0 : 1;
}
