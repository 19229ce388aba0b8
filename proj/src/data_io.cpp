#include "drc/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "drc/error.hpp"

namespace drc {

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse, source + " line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view token, double& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

std::vector<Matrix> parse_jv_blocks(std::string_view text, const std::string& source) {
  std::vector<Matrix> blocks;
  std::vector<std::vector<double>> rows;
  auto flush = [&] {
    if (rows.empty()) return;
    Matrix m(static_cast<Index>(rows.size()), kJapaneseVowelsFeatures);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < kJapaneseVowelsFeatures; ++c) m(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    blocks.push_back(std::move(m));
    rows.clear();
  };
  const auto lines = split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto line = trim(lines[ln]);
    if (line.empty()) {
      flush();
      continue;
    }
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto start = line.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      auto end = line.find_first_of(" \t", start);
      if (end == std::string_view::npos) end = line.size();
      double v = 0.0;
      if (!parse_number(line.substr(start, end - start), v))
        parse_fail(source, ln + 1, "not a number: '" + std::string(line.substr(start, end - start)) + "'");
      row.push_back(v);
      pos = end;
    }
    if (row.size() != static_cast<std::size_t>(kJapaneseVowelsFeatures))
      parse_fail(source, ln + 1, "expected " + std::to_string(kJapaneseVowelsFeatures) +
                                     " values, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  flush();
  return blocks;
}

void check_counts(const std::vector<int>& counts, std::size_t blocks, const std::string& which) {
  require(!counts.empty(), which + " counts must list at least one speaker");
  require(std::all_of(counts.begin(), counts.end(), [](int c) { return c >= 0; }),
          which + " counts must be nonnegative");
  const auto total = static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0));
  require(total == blocks, which + " counts sum to " + std::to_string(total) + " but " +
                               std::to_string(blocks) + " blocks were found");
}

}  // namespace

std::vector<int> default_jv_train_counts() { return std::vector<int>(9, 30); }
std::vector<int> default_jv_test_counts() { return {31, 35, 88, 44, 29, 24, 40, 50, 29}; }

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::internal, "could not format double");
  return std::string(buf, ptr);
}

Dataset parse_jv(std::string_view train_text, std::string_view test_text,
                 const std::vector<int>& train_counts, const std::vector<int>& test_counts) {
  const auto train_blocks = parse_jv_blocks(train_text, "train");
  const auto test_blocks = parse_jv_blocks(test_text, "test");
  check_counts(train_counts, train_blocks.size(), "train");
  check_counts(test_counts, test_blocks.size(), "test");
  require(train_counts.size() == test_counts.size(), "train and test counts must list the same speakers");
  const int speakers = static_cast<int>(train_counts.size());

  Dataset ds;
  ds.input_dim = kJapaneseVowelsFeatures;
  ds.n_classes = speakers;
  ds.provenance = "japanese_vowels";
  ds.split.emplace();
  auto append = [&](const std::vector<Matrix>& blocks, const std::vector<int>& counts,
                    const std::string& tag, std::vector<std::size_t>& indices) {
    std::size_t b = 0;
    for (int speaker = 0; speaker < speakers; ++speaker)
      for (int j = 0; j < counts[static_cast<std::size_t>(speaker)]; ++j, ++b) {
        indices.push_back(ds.sequences.size());
        ds.sequences.push_back({blocks[b], speaker, tag + "-" + std::to_string(b)});
      }
  };
  append(train_blocks, train_counts, "train", ds.split->train);
  append(test_blocks, test_counts, "test", ds.split->test);
  ds.validate();
  return ds;
}

std::pair<std::string, std::string> serialize_jv(const Dataset& dataset) {
  require(dataset.split.has_value(), "serialize_jv needs a train/test split");
  require(dataset.input_dim == kJapaneseVowelsFeatures, "Japanese Vowels rows have 12 features");
  auto render = [&](const std::vector<std::size_t>& indices) {
    std::string out;
    for (std::size_t idx : indices) {
      const Matrix& m = dataset.sequences[idx].values;
      for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
          out += format_double(m(r, c));
          out += ' ';
        }
        out += '\n';
      }
      out += '\n';
    }
    return out;
  };
  return {render(dataset.split->train), render(dataset.split->test)};
}

Dataset parse_feature_csv(std::string_view table_text, const CsvSchema& schema) {
  const auto lines = split_lines(table_text);
  std::size_t ln = 0;
  while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw Error(ErrorCode::parse, "feature table is empty");

  auto split_row = [&](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const auto end = line.find(schema.delimiter, start);
      cells.push_back(trim(line.substr(start, end == std::string_view::npos ? end : end - start)));
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
    return cells;
  };

  const auto header = split_row(lines[ln]);
  const std::size_t header_line = ln + 1;
  int id_col = -1, label_col = -1, step_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.id_column) id_col = static_cast<int>(c);
    else if (header[c] == schema.label_column) label_col = static_cast<int>(c);
    else if (!schema.timestep_column.empty() && header[c] == schema.timestep_column) step_col = static_cast<int>(c);
    else feature_cols.push_back(c);
  }
  if (id_col < 0) parse_fail("table", header_line, "missing id column '" + schema.id_column + "'");
  if (label_col < 0) parse_fail("table", header_line, "missing label column '" + schema.label_column + "'");
  if (!schema.timestep_column.empty() && step_col < 0)
    parse_fail("table", header_line, "missing timestep column '" + schema.timestep_column + "'");
  if (feature_cols.empty()) parse_fail("table", header_line, "no feature columns");

  struct Group {
    std::string id;
    int label;
    std::vector<std::pair<double, std::vector<double>>> rows;
  };
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> by_id;
  int max_label = -1;
  for (++ln; ln < lines.size(); ++ln) {
    if (trim(lines[ln]).empty()) continue;
    const auto cells = split_row(lines[ln]);
    if (cells.size() != header.size())
      parse_fail("table", ln + 1, "expected " + std::to_string(header.size()) + " columns, found " +
                                      std::to_string(cells.size()));
    const std::string id(cells[static_cast<std::size_t>(id_col)]);
    const std::string label_text(cells[static_cast<std::size_t>(label_col)]);
    int label = -1;
    if (!schema.classes.empty()) {
      const auto it = std::find(schema.classes.begin(), schema.classes.end(), label_text);
      if (it == schema.classes.end()) parse_fail("table", ln + 1, "unknown label '" + label_text + "'");
      label = static_cast<int>(it - schema.classes.begin());
    } else {
      const auto [ptr, ec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
      if (ec != std::errc() || ptr != label_text.data() + label_text.size() || label < 0)
        parse_fail("table", ln + 1, "label '" + label_text + "' is not a nonnegative integer");
    }
    max_label = std::max(max_label, label);
    double step = static_cast<double>(ln);
    if (step_col >= 0 && !parse_number(cells[static_cast<std::size_t>(step_col)], step))
      parse_fail("table", ln + 1, "timestep is not a number");
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      double v = 0.0;
      if (!parse_number(cells[c], v)) parse_fail("table", ln + 1, "not a number: '" + std::string(cells[c]) + "'");
      row.push_back(v);
    }
    auto [it, inserted] = by_id.emplace(id, groups.size());
    if (inserted) groups.push_back({id, label, {}});
    Group& g = groups[it->second];
    if (g.label != label) parse_fail("table", ln + 1, "id '" + id + "' changes label");
    g.rows.emplace_back(step, std::move(row));
  }
  if (groups.empty()) throw Error(ErrorCode::parse, "feature table has no data rows");

  Dataset ds;
  ds.input_dim = static_cast<Index>(feature_cols.size());
  ds.n_classes = schema.classes.empty() ? max_label + 1 : static_cast<int>(schema.classes.size());
  ds.provenance = "feature_csv";
  for (auto& g : groups) {
    if (step_col >= 0)
      std::stable_sort(g.rows.begin(), g.rows.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
    Matrix m(static_cast<Index>(g.rows.size()), ds.input_dim);
    for (std::size_t r = 0; r < g.rows.size(); ++r)
      for (Index c = 0; c < ds.input_dim; ++c) m(static_cast<Index>(r), c) = g.rows[r].second[static_cast<std::size_t>(c)];
    ds.sequences.push_back({std::move(m), g.label, g.id});
  }
  return ds;
}

std::string write_feature_csv(const Dataset& dataset, char delimiter) {
  std::string out = "id";
  out += delimiter;
  out += "label";
  for (Index k = 0; k < dataset.input_dim; ++k) {
    out += delimiter;
    out += "f" + std::to_string(k);
  }
  out += '\n';
  for (const auto& s : dataset.sequences)
    for (Index r = 0; r < s.values.rows(); ++r) {
      out += s.id;
      out += delimiter;
      out += std::to_string(s.label);
      for (Index c = 0; c < s.values.cols(); ++c) {
        out += delimiter;
        out += format_double(s.values(r, c));
      }
      out += '\n';
    }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::io, "write to '" + path + "' failed");
}

}  // namespace drc
