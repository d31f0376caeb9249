#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tgadv/pipeline/run.hpp"

namespace tgadv::pipeline {

/// One (attack, p) x defense cell: test MRR over the seeds that reported.
struct TableCell {
  Summary mrr;
  std::size_t expected = 0;
  std::vector<std::uint64_t> missing;
};

/// Rows are (attack, p), columns are defense variants. A.P.G. is the mean
/// percentage gain of each defended cell over the undefended cell of its row.
struct ComparisonTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, TableCell> cells;
  std::map<std::string, double> apg;  // rows with an undefended cell and a defended one
  std::vector<std::string> flagged;   // runs left out, with the reason

  [[nodiscard]] auto cell(const std::string& row, const std::string& col) const -> const TableCell* {
    auto it = cells.find({row, col});
    return it == cells.end() ? nullptr : &it->second;
  }

  [[nodiscard]] auto to_text() const -> std::string;
  [[nodiscard]] auto to_csv() const -> std::string;
};

inline auto row_label(const KeyValues& kv) -> std::string {
  const auto& kind = kv.at("attack.kind");
  if (kind == "none") return "clean";
  return kind + " p=" + format_number(parse_double(kv.at("attack.p")));
}

/// Settings that must agree for runs to share a table.
inline auto comparability_key(const KeyValues& kv) -> std::string {
  std::string key;
  for (const auto& [k, v] : kv) {
    if (k.rfind("attack.", 0) == 0 || k.rfind("defense.", 0) == 0 || k.rfind("output.", 0) == 0 ||
        k == "eval.seeds") {
      continue;
    }
    key += k + "=" + v + "\n";
  }
  return key;
}

inline auto format_cell(const TableCell& c) -> std::string {
  if (c.mrr.n == 0) return "missing";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", c.mrr.mean, c.mrr.stddev);
  std::string s = buf;
  if (!c.missing.empty()) s += " [" + std::to_string(c.mrr.n) + "/" + std::to_string(c.expected) + " seeds]";
  return s;
}

inline auto ComparisonTable::to_text() const -> std::string {
  std::vector<std::string> header = {"attack"};
  header.insert(header.end(), columns.begin(), columns.end());
  header.emplace_back("A.P.G. (%)");
  std::vector<std::vector<std::string>> grid = {header};
  for (const auto& r : rows) {
    std::vector<std::string> line = {r};
    for (const auto& c : columns) {
      const auto* cl = cell(r, c);
      line.push_back(cl ? format_cell(*cl) : "-");
    }
    if (auto it = apg.find(r); it != apg.end()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%+.2f", it->second);
      line.emplace_back(buf);
    } else {
      line.emplace_back("-");
    }
    grid.push_back(std::move(line));
  }
  // Width in code points so the ± sign does not skew alignment.
  const auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80 ? 1 : 0;
    return n;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], width(line[i]));
  }
  std::ostringstream out;
  for (const auto& line : grid) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << line[i] << std::string(widths[i] - width(line[i]) + (i + 1 < line.size() ? 2 : 0), ' ');
    }
    out << '\n';
  }
  for (const auto& f : flagged) out << "flagged: " << f << '\n';
  return out.str();
}

inline auto ComparisonTable::to_csv() const -> std::string {
  std::ostringstream out;
  out.precision(17);
  out << "attack,defense,mrr_mean,mrr_std,seeds,expected_seeds\n";
  for (const auto& r : rows) {
    for (const auto& c : columns) {
      const auto* cl = cell(r, c);
      if (!cl) continue;
      out << r << ',' << c << ',' << cl->mrr.mean << ',' << cl->mrr.stddev << ',' << cl->mrr.n << ','
          << cl->expected << '\n';
    }
    if (auto it = apg.find(r); it != apg.end()) out << r << ",apg," << it->second << ",,,\n";
  }
  return out.str();
}

/// Aggregates completed run directories. Runs whose settings differ from the
/// first loaded run, or that repeat an occupied cell, are flagged and left out.
inline auto report_table(const std::vector<std::filesystem::path>& run_dirs) -> ComparisonTable {
  ComparisonTable t;
  std::optional<std::string> reference;
  for (const auto& dir : run_dirs) {
    KeyValues kv;
    try {
      kv = read_key_values(dir / "config.kv");
      ExperimentConfig::from_key_values(kv);
    } catch (const InputError& e) {
      t.flagged.push_back(dir.string() + ": unreadable config (" + e.what() + ")");
      continue;
    }
    const auto key = comparability_key(kv);
    if (!reference) reference = key;
    if (key != *reference) {
      t.flagged.push_back(dir.string() + ": settings differ from the first run; not merged");
      continue;
    }
    const auto row = row_label(kv);
    const auto col = kv.at("defense.variant");
    if (t.cells.contains({row, col})) {
      t.flagged.push_back(dir.string() + ": duplicate cell (" + row + ", " + col + "); not merged");
      continue;
    }
    TableCell cell;
    std::vector<double> mrr;
    const auto seeds = parse_seeds(kv.at("eval.seeds"));
    cell.expected = seeds.size();
    for (const auto s : seeds) {
      const auto p = dir / seed_dir_name(s) / "report.json";
      if (!std::filesystem::exists(p)) {
        cell.missing.push_back(s);
        continue;
      }
      mrr.push_back(SeedReport::from_json(read_json(p)).metrics.test.mrr);
    }
    cell.mrr = summarize(mrr);
    if (std::find(t.rows.begin(), t.rows.end(), row) == t.rows.end()) t.rows.push_back(row);
    if (std::find(t.columns.begin(), t.columns.end(), col) == t.columns.end()) t.columns.push_back(col);
    t.cells[{row, col}] = std::move(cell);
  }
  if (t.cells.empty()) throw InputError("report needs at least one completed run");
  // Undefended column first, the rest in order of appearance.
  std::stable_partition(t.columns.begin(), t.columns.end(), [](const std::string& c) { return c == "none"; });
  for (const auto& r : t.rows) {
    const auto* base = t.cell(r, "none");
    if (!base || base->mrr.n == 0 || base->mrr.mean == 0.0) continue;
    std::vector<double> gains;
    for (const auto& c : t.columns) {
      if (c == "none") continue;
      if (const auto* cl = t.cell(r, c); cl && cl->mrr.n > 0) {
        gains.push_back(100.0 * (cl->mrr.mean - base->mrr.mean) / base->mrr.mean);
      }
    }
    if (!gains.empty()) t.apg[r] = stats::mean(gains);
  }
  return t;
}

}  // namespace tgadv::pipeline
