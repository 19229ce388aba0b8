#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drc/dataset.hpp"

namespace drc {

inline constexpr int kJapaneseVowelsFeatures = 12;
inline constexpr int kJapaneseVowelsSpeakers = 9;

/// Utterances per speaker in the published train/test files.
std::vector<int> default_jv_train_counts();
std::vector<int> default_jv_test_counts();

/// Parses the UCI Japanese Vowels text format: blocks of 12-column
/// whitespace separated rows, one blank line after each block. Labels come
/// from the per-speaker counts, consumed in speaker order. The train blocks
/// come first; the split is recorded.
Dataset parse_jv(std::string_view train_text, std::string_view test_text,
                 const std::vector<int>& train_counts = default_jv_train_counts(),
                 const std::vector<int>& test_counts = default_jv_test_counts());

/// Inverse of parse_jv for a dataset that carries a split.
std::pair<std::string, std::string> serialize_jv(const Dataset& dataset);

struct CsvSchema {
  std::string id_column = "id";
  std::string label_column = "label";
  /// Optional column holding the timestep index; rows of one id are sorted by
  /// it when set, kept in file order otherwise.
  std::string timestep_column;
  /// When non-empty, label strings must be one of these (index = class).
  /// Otherwise labels must be nonnegative integers.
  std::vector<std::string> classes;
  char delimiter = ',';
};

/// Generic feature table: header row, one timestep per row, grouped by id
/// in order of first appearance.
Dataset parse_feature_csv(std::string_view table_text, const CsvSchema& schema = {});

/// Writes [id, label, f0 .. f{K-1}] with shortest round-trip formatting.
std::string write_feature_csv(const Dataset& dataset, char delimiter = ',');

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

}  // namespace drc
