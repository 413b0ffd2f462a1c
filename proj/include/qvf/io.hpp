#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qvf/dag.hpp"
#include "qvf/pipeline.hpp"
#include "qvf/types.hpp"

namespace qvf {

// Count CSV: header "x0,...,x{p-1}", one sample per row. Integral values are
// written without a decimal point and doubles round-trip exactly, so write
// then read is bitwise-identical. Readers throw CsvParseError naming the
// 1-based file line on any malformed row.
void write_count_csv(const std::string& path, const CountMatrix& data);
CountMatrix read_count_csv(const std::string& path);

// Directed edge list: one "a b" line per edge (a -> b), ascending.
void write_directed_edges(const std::string& path, const std::set<std::pair<Index, Index>>& edges);
std::set<std::pair<Index, Index>> read_directed_edges(const std::string& path, Index p);

// Undirected edge list: one "a -- b" line per edge, a < b, ascending.
void write_undirected_edges(const std::string& path, const UndirectedGraph& g);
UndirectedGraph read_undirected_edges(const std::string& path, Index p);

// Ordering file: a single line of whitespace-separated node indices; readers
// validate a permutation of 0..p-1.
void write_ordering(const std::string& path, const Ordering& ordering);
Ordering read_ordering(const std::string& path, Index p);

// JSON configs mirror OdsConfig field names (family as an object with "name"
// and its shape parameter; theta_range as [lo, hi]; rule as "or"/"and";
// fallback as "widen"/"fail"; glm as a nested object). Unknown keys are
// errors. A benchmark grid file is either one config object or {"grid": [...]}
// where later entries inherit nothing (each entry stands alone).
// seed_present, when given, reports whether the file set a seed explicitly
// (callers fall back to a fresh random seed when it did not).
OdsConfig load_ods_config(const std::string& path, bool* seed_present = nullptr);
std::vector<OdsConfig> load_benchmark_grid(const std::string& path);

// Per-trial benchmark rows. Failed trials keep the identity columns and leave
// metric/timing fields empty; rows flagged stable_timings write 0 for the
// step timings so seeded reruns are byte-identical.
void write_benchmark_csv(const std::string& path, const std::vector<TrialRecord>& rows);

// Shortest round-trip decimal form; integral values print without a decimal
// point. Shared by every writer so artifacts are byte-stable.
std::string format_value(double v);

}  // namespace qvf
