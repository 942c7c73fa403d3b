// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grupack/experiment/grid.hpp"

namespace grupack::exp {

/// One table entry: R@1 hit indicators pooled over repeats.
struct ConditionResult {
  std::optional<Placement> placement;  // none: baseline
  enc::BoundarySource source = enc::BoundarySource::true_tiers;
  std::vector<std::uint8_t> hits;
  bool failed = false;

  double r1() const;
};

/// Groups cells by (placement, source), concatenating hits in repeat order.
/// A condition fails when any of its repeats failed.
std::vector<ConditionResult> pool_conditions(const std::vector<CellResult>& cells);

/// Fixed-width R@1 tables: one per pack mode for single placements (rows
/// are layers, columns level x boundary source) and one for hierarchical
/// placements. Markers follow the z_test at p < 0.01:
///   + / -  better / worse than the baseline
///   *      TRUE and RANDOM differ for that placement and level
///   ^      best value in the table (tables with two or more values)
std::string report_table(const std::vector<ConditionResult>& results);

/// Per-tier compression lines.
std::string compression_table(const std::map<seg::Level, TierCompression>& compression);

/// report_table plus compression_table, as written to report.txt.
std::string render_report(const GridResult& result);

}  // namespace grupack::exp
