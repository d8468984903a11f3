#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace mpgd {

struct Dataset {
  std::size_t n_features = 0;
  std::vector<std::vector<double>> rows;  // feature vectors, target removed
  std::vector<double> targets;

  std::size_t size() const { return rows.size(); }
};

// Reads a rectangular numeric table, one observation per line, fields split
// on commas when the line contains one and on whitespace otherwise.  The
// named column becomes the target.  Malformed input raises with a
// line/column diagnostic; blank lines are skipped.
Dataset ingest_csv(const std::string& path, std::size_t target_column);

// Same parser over an in-memory buffer (the file loader delegates here).
Dataset ingest_csv_text(const std::string& text, std::size_t target_column,
                        const std::string& origin = "<memory>");

struct StandardizedSplit {
  Dataset train, test;
  // train-set statistics used for both splits
  std::vector<double> feature_mean, feature_sd;
  double target_mean = 0.0, target_sd = 1.0;
};

// Shuffles row indices with the given seed, takes the first train_count rows
// for training and the next test_count for testing, and standardizes the
// features and the target with training-set mean/sd only.
StandardizedSplit split_standardize(const Dataset& data, std::size_t train_count,
                                    std::size_t test_count, std::uint64_t seed);

// Generated stand-in regression table with the shape of an airfoil
// self-noise measurement set: five features (log-spaced frequency, angle of
// attack, chord length from a fixed catalogue, free-stream velocity from a
// fixed catalogue, boundary-layer thickness tied to angle and chord) and a
// decibel-scaled response following a smooth Strouhal-style ridge with noise
// that grows with the angle.  Synthetic data, not measurements.
Dataset synthetic_airfoil_like(std::size_t n_rows, std::uint64_t seed);

}  // namespace mpgd
