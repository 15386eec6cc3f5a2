// Command-line front end: parse property labels, validate table sets, apply
// normalization scripts, run locative splits, build the flattened lexicon, and
// report per-class statistics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgt/lexicon.hpp"
#include "lgt/normalize.hpp"
#include "lgt/parallel.hpp"
#include "lgt/split.hpp"
#include "lgt/tableset.hpp"

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string tables;
  std::string defs;
  std::string script;
  std::string out;
  std::string format = "text";
  bool strict = false;
  unsigned jobs = 1;
};

void add_input_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--tables", cfg.tables, "directory of .tsv class tables")->required();
  cmd->add_option("--defs", cfg.defs, "class definitions file")->required();
  cmd->add_option("--jobs", cfg.jobs, "parallel workers for per-class stages")
      ->check(CLI::PositiveNumber);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) lgt::fail(lgt::Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fills a temp sibling of outDir, then swaps it in; a failed run never leaves
// partial state behind.
template <typename Fill>
void atomic_write_dir(const std::string& outDir, Fill fill) {
  fs::path out(outDir);
  fs::path tmp = out;
  tmp += ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  try {
    fill(tmp);
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  fs::remove_all(out);
  fs::rename(tmp, out);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) lgt::fail(lgt::Errc::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) lgt::fail(lgt::Errc::Io, "short write to '" + path.string() + "'");
}

lgt::TableSet load_inputs(const RunConfig& cfg) {
  return lgt::load_tableset(cfg.tables, cfg.defs);
}

std::vector<std::string> sorted_class_ids(const lgt::TableSet& ts) {
  std::vector<std::string> ids;
  ids.reserve(ts.tables.size());
  for (const auto& [id, t] : ts.tables) {
    (void)t;
    ids.push_back(id);
  }
  return ids;  // map order: already sorted
}

std::vector<lgt::LexiconRecord> flatten_parallel(const lgt::TableSet& ts, unsigned jobs) {
  auto ids = sorted_class_ids(ts);
  auto parts = lgt::map_indexed(
      ids, jobs, [&](const std::string& id) { return lgt::flatten_class(ts, id); });
  std::vector<lgt::LexiconRecord> records;
  for (auto& p : parts)
    records.insert(records.end(), std::make_move_iterator(p.begin()),
                   std::make_move_iterator(p.end()));
  return records;
}

void print_issues(const std::vector<lgt::LicensingIssue>& issues) {
  for (const auto& i : issues)
    std::cout << (i.severity == lgt::Severity::Error ? "Error" : "Warning") << '\t' << i.classId
              << '\t' << i.lemma << '\t' << i.offendingLabel << '\t' << i.unlicensedSymbol
              << '\n';
}

int issues_exit_code(const std::vector<lgt::LicensingIssue>& issues, bool strict) {
  std::size_t errors = 0, warnings = 0;
  for (const auto& i : issues)
    (i.severity == lgt::Severity::Error ? errors : warnings)++;
  if (errors) return 1;
  if (strict && warnings) return 1;
  return 0;
}

int cmd_parse(const std::string& file) {
  std::istream* in = &std::cin;
  std::ifstream f;
  if (!file.empty()) {
    f.open(file, std::ios::binary);
    if (!f) lgt::fail(lgt::Errc::Io, "cannot open '" + file + "'");
    in = &f;
  }
  bool failed = false;
  std::string line;
  while (std::getline(*in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // '#' never occurs in the notation; everything from it on is a comment.
    if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string trimmed = lgt::detail::trim(line);
    if (trimmed.empty()) continue;
    try {
      lgt::PropertyLabel label = lgt::parse_label(trimmed);
      std::cout << lgt::print_canonical(label) << '\n';
      if (const auto* c = std::get_if<lgt::Construction>(&label.value)) {
        auto expanded = lgt::expand_alternations(*c);
        std::cout << "  construction; slots: " << c->slots.size()
                  << "; expansions: " << expanded.size() << '\n';
        if (expanded.size() > 1)
          for (const auto& e : expanded) std::cout << "    " << lgt::print_canonical(e) << '\n';
      } else if (const auto* k = std::get_if<lgt::Constraint>(&label.value)) {
        std::cout << "  constraint on " << lgt::print_canonical(k->subject) << "; values: "
                  << k->values.size() << '\n';
      } else if (std::get_if<lgt::Equivalence>(&label.value)) {
        std::cout << "  equivalence\n";
      } else if (const auto* ft = std::get_if<lgt::Feature>(&label.value)) {
        std::cout << "  feature " << (ft->tag == lgt::Annotation::Apparition ? "apparition"
                                                                             : "disparition")
                  << " on " << lgt::print_canonical(ft->subject) << '\n';
      }
    } catch (const lgt::Error& e) {
      std::cerr << trimmed << ": " << e.what() << '\n';
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int cmd_validate(const RunConfig& cfg) {
  lgt::TableSet ts = load_inputs(cfg);
  auto records = flatten_parallel(ts, cfg.jobs);
  auto issues = lgt::validate_licensing(records);
  print_issues(issues);
  std::cout << records.size() << " records, " << issues.size() << " issues\n";
  return issues_exit_code(issues, cfg.strict);
}

int run_script_command(const RunConfig& cfg, bool splitOnly) {
  lgt::TableSet ts = load_inputs(cfg);
  std::vector<lgt::ScriptLine> script;
  if (!cfg.script.empty()) script = lgt::parse_script(read_text_file(cfg.script));
  if (splitOnly) {
    std::vector<lgt::ScriptLine> filtered;
    for (auto& line : script)
      if (std::holds_alternative<lgt::CmdSplitLoc>(line.cmd)) filtered.push_back(std::move(line));
    script = std::move(filtered);
  }
  auto [result, report] = lgt::apply_script(ts, script);
  atomic_write_dir(cfg.out, [&](const fs::path& tmp) {
    fs::create_directories(tmp / "tables");
    lgt::save_tableset(result, (tmp / "tables").string());
    write_file(tmp / "report.txt", lgt::serialize_report(report));
  });
  std::size_t applied = 0, skipped = 0;
  for (const auto& s : report.steps) (s.skipped ? skipped : applied)++;
  std::cout << applied << " steps applied, " << skipped << " skipped; " << result.tables.size()
            << " classes written to " << cfg.out << '\n';
  return 0;
}

int cmd_build(const RunConfig& cfg) {
  lgt::TableSet ts = load_inputs(cfg);
  lgt::TransformationReport report;
  if (!cfg.script.empty()) {
    auto [result, rep] = lgt::apply_script(ts, lgt::parse_script(read_text_file(cfg.script)));
    ts = std::move(result);
    report = std::move(rep);
  }
  auto records = flatten_parallel(ts, cfg.jobs);
  auto issues = lgt::validate_licensing(records);
  lgt::ExportFormat format =
      cfg.format == "structured" ? lgt::ExportFormat::Structured : lgt::ExportFormat::Text;
  atomic_write_dir(cfg.out, [&](const fs::path& tmp) {
    fs::create_directories(tmp / "tables");
    lgt::save_tableset(ts, (tmp / "tables").string());
    write_file(tmp / "report.txt", lgt::serialize_report(report));
    write_file(tmp / (format == lgt::ExportFormat::Text ? "lexicon.txt" : "lexicon.lgl"),
               lgt::export_lexicon(records, format));
  });
  std::size_t errors = 0, warnings = 0;
  for (const auto& i : issues)
    (i.severity == lgt::Severity::Error ? errors : warnings)++;
  std::cout << records.size() << " records; " << errors << " errors, " << warnings
            << " warnings\n";
  return issues_exit_code(issues, cfg.strict);
}

int cmd_stats(const RunConfig& cfg) {
  lgt::TableSet ts = load_inputs(cfg);
  for (const auto& [id, table] : ts.tables) {
    (void)id;
    lgt::ClassStats s = lgt::compute_class_stats(table);
    std::cout << s.classId << ": " << s.entries << " entries, " << s.columns << " columns";
    std::ostringstream density;
    density.setf(std::ios::fixed);
    density.precision(2);
    density << s.uncodedDensity * 100.0;
    std::cout << ", ~ density " << density.str() << "%\n";
    for (const auto& c : s.allPlusColumns)
      std::cout << "  promotion candidate (all +): " << c << '\n';
    for (const auto& c : s.allMinusColumns) std::cout << "  all -: " << c << '\n';
  }
  for (const auto& ref : lgt::self_links(ts))
    std::cout << "Warning: self paraphrase link " << ref.classId << ":" << ref.lemma << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexicon-grammar table compiler"};
  app.require_subcommand(1);

  std::string parse_file;
  CLI::App* parse = app.add_subcommand("parse", "parse property labels from a file or stdin");
  parse->add_option("file", parse_file, "label file (one per line; default stdin)");

  RunConfig validate_cfg;
  CLI::App* validate = app.add_subcommand("validate", "check invariants and symbol licensing");
  add_input_flags(validate, validate_cfg);
  validate->add_flag("--strict", validate_cfg.strict, "treat warnings as failures");

  RunConfig normalize_cfg;
  CLI::App* normalize = app.add_subcommand("normalize", "apply a transformation script");
  add_input_flags(normalize, normalize_cfg);
  normalize->add_option("--script", normalize_cfg.script, "transformation script");
  normalize->add_option("--out", normalize_cfg.out, "output directory")->required();

  RunConfig split_cfg;
  CLI::App* split = app.add_subcommand("split", "apply only the split-loc steps of a script");
  add_input_flags(split, split_cfg);
  split->add_option("--script", split_cfg.script, "transformation script");
  split->add_option("--out", split_cfg.out, "output directory")->required();

  RunConfig build_cfg;
  CLI::App* build = app.add_subcommand("build", "full pipeline: load, script, flatten, export");
  add_input_flags(build, build_cfg);
  build->add_option("--script", build_cfg.script, "transformation script");
  build->add_option("--out", build_cfg.out, "output directory")->required();
  build->add_option("--format", build_cfg.format, "lexicon format")
      ->check(CLI::IsMember({"text", "structured"}));
  build->add_flag("--strict", build_cfg.strict, "treat warnings as failures");

  RunConfig stats_cfg;
  CLI::App* stats = app.add_subcommand("stats", "per-class statistics (read-only)");
  add_input_flags(stats, stats_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (parse->parsed()) return cmd_parse(parse_file);
    if (validate->parsed()) return cmd_validate(validate_cfg);
    if (normalize->parsed()) return run_script_command(normalize_cfg, false);
    if (split->parsed()) return run_script_command(split_cfg, true);
    if (build->parsed()) return cmd_build(build_cfg);
    if (stats->parsed()) return cmd_stats(stats_cfg);
  } catch (const lgt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == lgt::Errc::Io ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
