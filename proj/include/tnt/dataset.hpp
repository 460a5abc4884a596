#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnt/errors.hpp"

namespace tnt {

/// Dense in-memory classification dataset. Features are row-major m x k,
/// labels are contiguous 0-based class indices, weights (when present) are
/// non-negative and sum to 1. Immutable by convention after construction;
/// safe to share across threads.
struct Dataset {
  int n_features = 0;
  int n_classes = 0;
  std::vector<double> values;             // row-major, size() == m * n_features
  std::vector<int> labels;                // size m
  std::vector<double> weights;            // empty, or size m
  std::vector<std::string> class_names;   // original label text per class index

  int n_rows() const { return static_cast<int>(labels.size()); }
  bool has_weights() const { return !weights.empty(); }

  double at(int row, int feature) const {
    return values[static_cast<std::size_t>(row) * n_features + feature];
  }
  std::span<const double> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * n_features,
            static_cast<std::size_t>(n_features)};
  }

  // Throws DataError on any invariant violation (non-finite feature, label
  // out of range, K < 2, bad weights).
  void validate() const;
};

// LIBSVM sparse text ("label idx:val ..."; 1-based strictly increasing
// indices; gzip input detected by magic bytes). Absent indices are 0.0 and
// labels are remapped to dense 0-based indices, original text kept in
// class_names. n_features = max observed index unless overridden.
Dataset load_libsvm(const std::string& path, int n_features = 0);

// CSV per RFC 4180 (quoted fields, "" escapes). label_column is a column
// name (requires header) or a 0-based index; -1 selects the last column.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool header);

void save_libsvm(const Dataset& ds, const std::string& path);

// Uniform unstratified partition; |test| = round(test_fraction * m).
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds,
                                             double test_fraction,
                                             std::uint64_t seed);

// m rows drawn uniformly with replacement (max_samples = 1.0, all features
// kept). Weights, when present, are carried over and renormalized.
Dataset bootstrap_sample(const Dataset& ds, std::uint64_t seed);

// The row multiset behind bootstrap_sample, exposed for ensembles.
std::vector<int> bootstrap_indices(int n_rows, std::uint64_t seed);

/// Two-class synthetic task on the unit square: label 1 on the four corner
/// regions cut out by thresholds (t1 < t2 on x1, t3 < t4 on x2), label 0 on
/// the center cross. Draws 9 * samples_per_cell uniform points, then keeps
/// drawing until each of the nine threshold-grid cells holds at least one.
Dataset make_corners_synthetic(int samples_per_cell,
                               const std::array<double, 4>& thresholds,
                               std::uint64_t seed);

// Subset copy (rows in the given order); weights renormalized if present.
Dataset take_rows(const Dataset& ds, std::span<const int> rows);

}  // namespace tnt
