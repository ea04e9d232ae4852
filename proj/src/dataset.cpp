#include "policybounds/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace policybounds::dataset {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "nan";
}

[[noreturn]] void fail(int row, const std::string& col,
                       const std::string& what) {
  throw DatasetError("dataset: row " + std::to_string(row) + ", column '" +
                     col + "': " + what);
}

double parse_num(const std::string& cell, int row, const std::string& col) {
  try {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    if (used != cell.size()) fail(row, col, "trailing characters");
    return v;
  } catch (const DatasetError&) {
    throw;
  } catch (const std::exception&) {
    fail(row, col, "not a number ('" + cell + "')");
  }
}

long parse_count(const std::string& cell, int row, const std::string& col) {
  try {
    std::size_t used = 0;
    long v = std::stol(cell, &used);
    if (used != cell.size()) fail(row, col, "trailing characters");
    if (v < 1) fail(row, col, "must be a positive count");
    return v;
  } catch (const DatasetError&) {
    throw;
  } catch (const std::exception&) {
    fail(row, col, "not an integer ('" + cell + "')");
  }
}

double parse_prob(const std::string& cell, int row, const std::string& col) {
  double v = parse_num(cell, row, col);
  if (v < -kProbTol || v > 1.0 + kProbTol)
    fail(row, col, "probability outside [0, 1]");
  return std::clamp(v, 0.0, 1.0);
}

struct Columns {
  std::map<std::string, int> pos;

  int at(const std::string& name) const { return pos.at(name); }
  void require(const std::vector<std::string>& names,
               const std::string& path) const {
    for (const auto& n : names)
      if (!pos.count(n))
        throw DatasetError("dataset: missing column '" + n + "' in '" + path +
                           "'");
  }
};

Columns read_header(const std::string& header) {
  Columns c;
  auto cells = split_csv(header);
  for (std::size_t i = 0; i < cells.size(); ++i)
    c.pos.emplace(cells[i], static_cast<int>(i));
  return c;
}

DataDistribution parse_format_a(std::istream& in, const Columns& cols,
                                bool assume_known_y0,
                                const std::string& path) {
  cols.require({"judge_id", "group", "n_cases", "share", "release_rate",
                "mean_y_given_released", "mean_y_given_detained"},
               path);
  DataDistribution out;
  out.grid = OutcomeGrid::binary();

  std::string line;
  for (int row = 2; std::getline(in, line); ++row) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() < cols.pos.size())
      throw DatasetError("dataset: row " + std::to_string(row) +
                         " has too few columns");

    JudgeCell j;
    j.id = cells[cols.at("judge_id")];
    if (j.id.empty()) fail(row, "judge_id", "empty id");
    double group = parse_num(cells[cols.at("group")], row, "group");
    if (group != 0.0 && group != 1.0) fail(row, "group", "must be 0 or 1");
    j.group = static_cast<int>(group);
    j.n_cases = parse_count(cells[cols.at("n_cases")], row, "n_cases");
    j.share = parse_prob(cells[cols.at("share")], row, "share");

    double rate = parse_prob(cells[cols.at("release_rate")], row,
                             "release_rate");
    double mean_rel = parse_prob(cells[cols.at("mean_y_given_released")], row,
                                 "mean_y_given_released");
    const auto& det_cell = cells[cols.at("mean_y_given_detained")];
    double mean_det;
    if (is_missing(det_cell)) {
      if (!assume_known_y0)
        fail(row, "mean_y_given_detained",
             "missing; pass the known-Y0 flag to expand assuming Y(0) = 0");
      mean_det = 0.0;
    } else {
      mean_det = parse_prob(det_cell, row, "mean_y_given_detained");
      if (assume_known_y0 && mean_det > kProbTol)
        fail(row, "mean_y_given_detained",
             "nonzero value contradicts the known-Y0 flag");
    }

    j.pmf = {{(1.0 - rate) * (1.0 - mean_det), rate * (1.0 - mean_rel)},
             {(1.0 - rate) * mean_det, rate * mean_rel}};
    out.judges.push_back(std::move(j));
  }
  return out;
}

DataDistribution parse_format_b(std::istream& in, const Columns& cols,
                                const std::string& path) {
  cols.require({"judge_id", "group", "n_cases", "share", "y", "d", "prob"},
               path);

  struct RawRow {
    int row;
    std::string id;
    int group;
    long n_cases;
    double share, y, prob;
    int d;
  };
  std::vector<RawRow> raw;
  std::vector<double> ys;

  std::string line;
  for (int row = 2; std::getline(in, line); ++row) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() < cols.pos.size())
      throw DatasetError("dataset: row " + std::to_string(row) +
                         " has too few columns");
    RawRow r;
    r.row = row;
    r.id = cells[cols.at("judge_id")];
    if (r.id.empty()) fail(row, "judge_id", "empty id");
    r.group = static_cast<int>(parse_num(cells[cols.at("group")], row,
                                         "group"));
    if (r.group != 0 && r.group != 1) fail(row, "group", "must be 0 or 1");
    r.n_cases = parse_count(cells[cols.at("n_cases")], row, "n_cases");
    r.share = parse_prob(cells[cols.at("share")], row, "share");
    r.y = parse_num(cells[cols.at("y")], row, "y");
    double d = parse_num(cells[cols.at("d")], row, "d");
    if (d != 0.0 && d != 1.0) fail(row, "d", "must be 0 or 1");
    r.d = static_cast<int>(d);
    r.prob = parse_prob(cells[cols.at("prob")], row, "prob");
    raw.push_back(std::move(r));
    ys.push_back(raw.back().y);
  }
  if (raw.empty()) throw DatasetError("dataset: no data rows in '" + path + "'");

  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  OutcomeGrid grid{ys};

  DataDistribution out;
  out.grid = grid;
  std::map<std::string, std::size_t> index;
  for (const auto& r : raw) {
    auto it = index.find(r.id);
    if (it == index.end()) {
      JudgeCell j;
      j.id = r.id;
      j.group = r.group;
      j.n_cases = r.n_cases;
      j.share = r.share;
      j.pmf.assign(grid.size(), {0.0, 0.0});
      index.emplace(r.id, out.judges.size());
      out.judges.push_back(std::move(j));
      it = index.find(r.id);
    } else {
      const auto& j = out.judges[it->second];
      if (j.group != r.group) fail(r.row, "group", "inconsistent for judge");
      if (j.n_cases != r.n_cases)
        fail(r.row, "n_cases", "inconsistent for judge");
      if (j.share != r.share) fail(r.row, "share", "inconsistent for judge");
    }
    auto yi = grid.index_of(r.y);
    if (!yi) fail(r.row, "y", "not on the outcome grid");
    auto& slot = out.judges[it->second].pmf[*yi][r.d];
    if (slot != 0.0) fail(r.row, "prob", "duplicate (judge, y, d) cell");
    slot = r.prob;
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

Format detect_format(const std::string& header_line) {
  auto cols = read_header(strip_cr(header_line));
  if (cols.pos.count("release_rate")) return Format::A;
  if (cols.pos.count("prob")) return Format::B;
  throw DatasetError("dataset: header matches neither schema: '" +
                     header_line + "'");
}

DataDistribution parse_dataset(const std::string& path,
                               const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw DatasetError("dataset: empty file '" + path + "'");
  header = strip_cr(header);

  Format format = opts.format;
  if (format == Format::Auto) format = detect_format(header);
  Columns cols = read_header(header);

  DataDistribution data =
      (format == Format::A)
          ? parse_format_a(in, cols, opts.assume_known_y0, path)
          : parse_format_b(in, cols, path);
  if (data.judges.empty())
    throw DatasetError("dataset: no judges in '" + path + "'");

  auto report = validate_instance(data);
  if (report.has_fatal())
    throw DatasetError("dataset: validation failed for '" + path +
                       "': " + report.summary());
  return data;
}

std::string emit_dataset_b(const DataDistribution& data) {
  std::string out = "judge_id,group,n_cases,share,y,d,prob\n";
  for (const auto& j : data.judges) {
    for (std::size_t yi = 0; yi < data.grid.size(); ++yi) {
      for (int d = 0; d < 2; ++d) {
        out += j.id;
        out += ',';
        out += std::to_string(j.group);
        out += ',';
        out += std::to_string(j.n_cases);
        out += ',';
        out += format_double(j.share);
        out += ',';
        out += format_double(data.grid[yi]);
        out += ',';
        out += std::to_string(d);
        out += ',';
        out += format_double(j.pmf[yi][d]);
        out += '\n';
      }
    }
  }
  return out;
}

}  // namespace policybounds::dataset
