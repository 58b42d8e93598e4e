#pragma once

#include <filesystem>
#include <string>

#include "qpdrive/dynamics.hpp"

namespace qpdrive {

inline constexpr int kModelFormatVersion = 1;

struct SaveOptions {
  bool portable = false;   // CSV sidecars instead of the binary blob
};

/// Writes `<path>` (JSON metadata and small matrices) plus the large
/// matrices (training states, targets, phis, gammas, d) to a sidecar:
///   binary:   `<path>.bin`, see write_matrix_blob for the layout
///   portable: `<path>.<name>.csv` per matrix, 17 significant digits
void save_model(const std::filesystem::path& path, const DecompositionModel& model,
                const SaveOptions& options = {});

/// Reads a model written by save_model; the evaluator table is rebuilt from
/// the stored basis and coefficients.
DecompositionModel load_model(const std::filesystem::path& path);

/// Binary sidecar layout, all integers and doubles little-endian:
///   "QPDRIVE\0" (8 bytes), u32 format version, u32 matrix count, then per
///   matrix: u32 name length, name bytes, u64 rows, u64 cols, rows*cols
///   f64 values in row-major order.
void write_matrix_blob(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, Matrix>>& matrices);
std::vector<std::pair<std::string, Matrix>> read_matrix_blob(const std::filesystem::path& path);

} // namespace qpdrive
