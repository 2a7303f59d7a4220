#pragma once

#include <filesystem>
#include <string>

#include "dimafx/data/synthetic.hpp"

namespace dimafx::data {

namespace fs = std::filesystem;

/// "%.17g": the textual form used for every float written by this project.
std::string format_double(double v);

/// Headerless CSV, one row per line.
void write_matrix_csv(const fs::path& path, const Matrix& m);
/// Parse errors name the file, 1-based row and column.
Matrix read_matrix_csv(const fs::path& path);

void save_catalog(const PathwayCatalog& catalog, const fs::path& path);
PathwayCatalog load_catalog(const fs::path& path);

/**
 * Writes `dir/manifest.json`, `dir/catalog.json`, one `patches/<id>.csv` and
 * one `pathways/<id>.json` per sample. Returns the manifest path.
 */
fs::path save_cohort(const Cohort& cohort, const fs::path& dir);

/// Loads and validates a cohort; relative paths resolve against the manifest's directory.
Cohort load_cohort(const fs::path& manifest_path);

void save_ground_truth(const SyntheticGroundTruth& truth, const Cohort& cohort, const fs::path& path);

} // namespace dimafx::data
