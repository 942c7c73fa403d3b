// SPDX-License-Identifier: Apache-2.0
#include "grupack/experiment/report.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "grupack/evaluation/ztest.hpp"

namespace grupack::exp {

using enc::BoundarySource;

double ConditionResult::r1() const {
  if (hits.empty()) return 0.0;
  std::size_t n = 0;
  for (auto h : hits) n += h;
  return static_cast<double>(n) / static_cast<double>(hits.size());
}

std::vector<ConditionResult> pool_conditions(const std::vector<CellResult>& cells) {
  std::vector<ConditionResult> out;
  for (const auto& c : cells) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ConditionResult& r) {
      return r.placement == c.cell.placement && r.source == c.cell.source;
    });
    if (it == out.end()) {
      out.push_back({c.cell.placement, c.cell.source, {}, false});
      it = out.end() - 1;
    }
    if (!c.ok) {
      it->failed = true;
      continue;
    }
    const auto& h = c.test.hits_at.at(1);
    it->hits.insert(it->hits.end(), h.begin(), h.end());
  }
  return out;
}

namespace {

eval::ZTestResult compare(const ConditionResult& a, const ConditionResult& b) {
  std::size_t xa = 0, xb = 0;
  for (auto h : a.hits) xa += h;
  for (auto h : b.hits) xb += h;
  return eval::z_test(xa, a.hits.size(), xb, b.hits.size());
}

bool usable(const ConditionResult* c) { return c && !c->failed && !c->hits.empty(); }

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  // cells[row][col]; null when the grid has no such condition
  std::vector<std::vector<const ConditionResult*>> cells;
  // markers per cell beyond +/-
  std::vector<std::vector<std::string>> extra;
};

std::string render(const Table& t, const ConditionResult* baseline) {
  // Value text and markers per cell.
  const std::size_t rows = t.row_labels.size(), cols = t.columns.size();
  std::vector<std::vector<std::string>> text(rows, std::vector<std::string>(cols));
  std::size_t filled = 0;
  double best = -1.0;
  std::pair<std::size_t, std::size_t> best_at{rows, cols};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto* cell = t.cells[r][c];
      if (!cell) continue;
      ++filled;
      if (!usable(cell)) {
        text[r][c] = "fail";
        continue;
      }
      std::string s = fmt::format("{:.1f}", 100.0 * cell->r1());
      if (cell != baseline && usable(baseline)) {
        const auto z = compare(*cell, *baseline);
        if (eval::significant(z)) s += z.z > 0 ? "+" : "-";
      }
      s += t.extra[r][c];
      text[r][c] = s;
      if (cell->r1() > best) {
        best = cell->r1();
        best_at = {r, c};
      }
    }
  }
  if (filled >= 2 && best_at.first < rows) text[best_at.first][best_at.second] += "^";

  std::size_t label_w = 9;
  for (const auto& l : t.row_labels) label_w = std::max(label_w, l.size());
  std::vector<std::size_t> col_w(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    col_w[c] = std::max<std::size_t>(8, t.columns[c].size());
    for (std::size_t r = 0; r < rows; ++r) col_w[c] = std::max(col_w[c], text[r][c].size());
  }
  auto line = [&](const std::string& label, const std::vector<std::string>& vals) {
    std::string s = fmt::format("{:<{}}", label, label_w);
    for (std::size_t c = 0; c < cols; ++c) s += fmt::format("  {:<{}}", vals[c], col_w[c]);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = t.title + "\n";
  out += line("placement", t.columns);
  for (std::size_t r = 0; r < rows; ++r) out += line(t.row_labels[r], text[r]);
  return out;
}

const char* kLegend =
    "markers: +/- differs from baseline, * TRUE vs RANDOM differ (two-sided z-test, p < 0.01); "
    "^ best in table\n";

}  // namespace

std::string report_table(const std::vector<ConditionResult>& results) {
  const ConditionResult* baseline = nullptr;
  for (const auto& r : results)
    if (!r.placement) baseline = &r;

  auto find = [&](const Placement& p, BoundarySource s) -> const ConditionResult* {
    for (const auto& r : results)
      if (r.placement == p && r.source == s) return &r;
    return nullptr;
  };
  auto true_random_marker = [&](const ConditionResult* t, const ConditionResult* r) {
    if (!usable(t) || !usable(r)) return false;
    return eval::significant(compare(*t, *r));
  };

  std::vector<BoundarySource> sources;
  for (auto s : {BoundarySource::true_tiers, BoundarySource::random_tiers}) {
    for (const auto& r : results)
      if (r.placement && r.source == s) {
        sources.push_back(s);
        break;
      }
  }
  auto source_tag = [](BoundarySource s) { return s == BoundarySource::true_tiers ? "T" : "R"; };

  std::string out;
  auto add_baseline_row = [&](Table& t) {
    if (!baseline) return;
    t.row_labels.push_back("baseline");
    std::vector<const ConditionResult*> row(t.columns.size(), nullptr);
    if (!row.empty()) row[0] = baseline;
    t.cells.push_back(row);
    t.extra.emplace_back(t.columns.size());
  };

  // Single-packager tables, one per mode.
  bool any_single = false;
  for (auto mode : {enc::PackMode::all, enc::PackMode::keep}) {
    std::vector<std::size_t> positions;
    std::vector<seg::Level> levels;
    for (const auto& r : results) {
      if (!r.placement || r.placement->hierarchical() || r.placement->mode != mode) continue;
      positions.push_back(r.placement->positions[0]);
      levels.push_back(r.placement->levels[0]);
    }
    if (positions.empty()) continue;
    any_single = true;
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    Table t;
    t.title = "R@1 (%) on the test split, single packager, mode " + enc::to_string(mode);
    for (auto l : levels)
      for (auto s : sources) t.columns.push_back(seg::to_string(l) + ":" + source_tag(s));
    add_baseline_row(t);
    for (auto pos : positions) {
      t.row_labels.push_back("layer " + std::to_string(pos));
      std::vector<const ConditionResult*> row;
      std::vector<std::string> extra;
      for (auto l : levels) {
        const Placement p{{pos}, {l}, mode};
        const auto* tr = find(p, BoundarySource::true_tiers);
        const auto* rn = find(p, BoundarySource::random_tiers);
        const bool star = true_random_marker(tr, rn);
        for (auto s : sources) {
          row.push_back(find(p, s));
          extra.push_back(star ? "*" : "");
        }
      }
      t.cells.push_back(row);
      t.extra.push_back(extra);
    }
    out += render(t, baseline) + kLegend + "\n";
  }

  // Hierarchical placements.
  std::vector<Placement> hier;
  for (const auto& r : results)
    if (r.placement && r.placement->hierarchical() &&
        std::find(hier.begin(), hier.end(), *r.placement) == hier.end())
      hier.push_back(*r.placement);
  if (!hier.empty()) {
    Table t;
    t.title = "R@1 (%) on the test split, hierarchical packagers";
    for (auto s : sources) t.columns.push_back(s == BoundarySource::true_tiers ? "TRUE" : "RANDOM");
    add_baseline_row(t);
    for (const auto& p : hier) {
      t.row_labels.push_back(p.label() + " " + enc::to_string(p.mode));
      const auto* tr = find(p, BoundarySource::true_tiers);
      const auto* rn = find(p, BoundarySource::random_tiers);
      const bool star = true_random_marker(tr, rn);
      std::vector<const ConditionResult*> row;
      for (auto s : sources) row.push_back(find(p, s));
      t.cells.push_back(row);
      t.extra.emplace_back(sources.size(), star ? "*" : "");
    }
    out += render(t, baseline) + kLegend + "\n";
  }

  if (!any_single && hier.empty()) {
    Table t;
    t.title = "R@1 (%) on the test split";
    t.columns = {"R@1"};
    add_baseline_row(t);
    out += render(t, baseline) + "\n";
  }
  return out;
}

std::string compression_table(const std::map<seg::Level, TierCompression>& compression) {
  std::string out = "compression by tier (frames discarded by a KEEP layer)\n";
  out += fmt::format("{:<20}  {:>10}  {:>10}  {:>8}\n", "tier", "segments", "frames", "rate %");
  for (const auto& [level, c] : compression) {
    out += fmt::format("{:<20}  {:>10}  {:>10}  {:>8.2f}\n", seg::to_string(level), c.segments,
                       c.frames, c.rate);
  }
  return out;
}

std::string render_report(const GridResult& result) {
  std::string out = report_table(pool_conditions(result.cells));
  std::size_t failed = 0;
  for (const auto& c : result.cells) failed += c.ok ? 0 : 1;
  out += fmt::format("cells: {} trained, {} failed\n\n", result.cells.size() - failed, failed);
  return out + compression_table(result.compression);
}

}  // namespace grupack::exp
