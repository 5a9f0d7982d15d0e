#include "redslds/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <sstream>

#include "redslds/errors.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {
namespace {

using json = nlohmann::json;

constexpr double kTurnRate = 0.05;  // rad per step
constexpr double kRadius = 5.0;
constexpr double kFocus = 10.0;
constexpr double kSpeed = kTurnRate * kRadius;
constexpr double kPull = 0.05;      // straights relax toward y = +-radius

struct Affine {
  Matrix a;
  Vector b;
};

std::vector<Affine> nascar_modes() {
  Matrix rot(2, 2);
  rot << std::cos(kTurnRate), std::sin(kTurnRate), -std::sin(kTurnRate), std::cos(kTurnRate);
  std::vector<Affine> modes;
  for (double focus : {kFocus, -kFocus}) {
    Vector c(2);
    c << focus, 0.0;
    modes.push_back({rot, c - rot * c});
  }
  Matrix straight = Matrix::Identity(2, 2);
  straight(1, 1) = 1.0 - kPull;
  Vector top(2), bottom(2);
  top << kSpeed, kPull * kRadius;
  bottom << -kSpeed, -kPull * kRadius;
  modes.push_back({straight, top});
  modes.push_back({straight, bottom});
  return modes;
}

int nascar_region(const Vector& x) {
  if (x(0) > kFocus) return 0;
  if (x(0) < -kFocus) return 1;
  return x(1) > 0.0 ? 2 : 3;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != end)
    throw DataError("row " + std::to_string(row) + ", column '" + column + "': non-numeric value '" +
                    cell + "'");
  return v;
}

int parse_label(const std::string& cell, std::size_t row) {
  int v = 0;
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != end)
    throw DataError("row " + std::to_string(row) + ": label '" + cell + "' is not an integer");
  return v;
}

// Raw table: header plus rows grouped by id in first-appearance order.
struct Table {
  std::vector<std::string> ids;
  std::vector<std::vector<std::vector<std::string>>> rows;  // per id, per row, cells
  std::vector<std::vector<std::size_t>> line_numbers;
  std::vector<std::string> header;
};

Table read_table(const std::string& path, const std::string& id_column, std::size_t& id_index) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty; a header row is required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_row(line);
  const auto it = std::find(table.header.begin(), table.header.end(), id_column);
  if (it == table.header.end()) throw DataError("missing sequence-id column '" + id_column + "'");
  id_index = static_cast<std::size_t>(it - table.header.begin());
  std::map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != table.header.size())
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(table.header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    const std::string& id = cells[id_index];
    auto [pos, inserted] = index.try_emplace(id, table.ids.size());
    if (inserted) {
      table.ids.push_back(id);
      table.rows.emplace_back();
      table.line_numbers.emplace_back();
    }
    table.rows[pos->second].push_back(std::move(cells));
    table.line_numbers[pos->second].push_back(row);
  }
  if (table.ids.empty()) throw DataError("'" + path + "' has no data rows");
  return table;
}

std::size_t column_index(const Table& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw DataError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

std::size_t Dataset::total_points() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += static_cast<std::size_t>(s.rows());
  return n;
}

void Dataset::validate() const {
  if (ids.size() != sequences.size()) throw DataError("dataset ids and sequences disagree in count");
  if (!labels.empty()) {
    if (labels.size() != sequences.size()) throw DataError("dataset labels and sequences disagree in count");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<Eigen::Index>(labels[i].size()) != sequences[i].rows())
        throw DataError("sequence '" + ids[i] + "': label length differs from sequence length");
  }
  for (std::size_t i = 1; i < sequences.size(); ++i)
    if (sequences[i].cols() != sequences[0].cols()) throw DataError("sequences differ in feature count");
}

std::string manifest_to_json(const Manifest& m) {
  json j = {{"source", m.source},
            {"generator_version", m.generator_version},
            {"runs", m.runs},
            {"length", m.length},
            {"obs_dim", m.obs_dim},
            {"noise_scale", m.noise_scale},
            {"dynamics_noise", m.dynamics_noise},
            {"splits", m.splits},
            {"fraction", m.fraction},
            {"chunks", m.chunks},
            {"dropped_tail", m.dropped_tail},
            {"standardized", m.standardized}};
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["mean"] = std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size());
  j["scale"] = std::vector<double>(m.scale.data(), m.scale.data() + m.scale.size());
  return j.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Manifest m;
    m.source = j.at("source").get<std::string>();
    m.generator_version = j.at("generator_version").get<std::string>();
    if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
    m.runs = j.at("runs").get<int>();
    m.length = j.at("length").get<int>();
    m.obs_dim = j.at("obs_dim").get<int>();
    m.noise_scale = j.at("noise_scale").get<double>();
    m.dynamics_noise = j.at("dynamics_noise").get<double>();
    m.splits = j.at("splits").get<int>();
    m.fraction = j.at("fraction").get<double>();
    m.chunks = j.at("chunks").get<std::vector<std::pair<int, int>>>();
    m.dropped_tail = j.at("dropped_tail").get<int>();
    m.standardized = j.at("standardized").get<bool>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    m.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    m.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid manifest: ") + e.what());
  }
}

Dataset generate_nascar(const NascarOptions& options, Rng& rng, std::vector<Matrix>* latents) {
  if (options.length < 100) throw ConfigError("NASCAR length must be at least 100");
  if (options.obs_dim < 2) throw ConfigError("NASCAR observation dimension must be at least 2");
  if (options.runs < 1) throw ConfigError("NASCAR needs at least one run");
  if (options.noise_scale < 0.0 || options.dynamics_noise < 0.0)
    throw ConfigError("NASCAR noise levels must be non-negative");
  const auto modes = nascar_modes();
  const int n = options.obs_dim;
  Matrix c(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) c(i, j) = rng.normal();
  Vector bias(n);
  for (int i = 0; i < n; ++i) bias(i) = rng.normal();

  const auto lap = static_cast<int>(std::ceil((2.0 * std::numbers::pi * kRadius + 4.0 * kFocus) / kSpeed));
  Dataset out;
  if (latents) latents->clear();
  for (int r = 0; r < options.runs; ++r) {
    const int burn = static_cast<int>(rng.uniform() * lap);
    Vector x(2);
    x << -kFocus + 2.0 * kFocus * rng.uniform(), kRadius;
    const auto step = [&](const Vector& prev, int mode) {
      Vector next = modes[mode].a * prev + modes[mode].b;
      for (int j = 0; j < 2; ++j) next(j) += options.dynamics_noise * rng.normal();
      return next;
    };
    for (int t = 0; t < burn; ++t) x = step(x, nascar_region(x));

    Matrix lat(options.length, 2), y(options.length, n);
    std::vector<int> labels(options.length);
    labels[0] = nascar_region(x);
    lat.row(0) = x.transpose();
    for (int t = 1; t < options.length; ++t) {
      const Vector prev = lat.row(t - 1).transpose();
      labels[t] = nascar_region(prev);
      lat.row(t) = step(prev, labels[t]).transpose();
    }
    for (int t = 0; t < options.length; ++t) {
      Vector obs = c * lat.row(t).transpose() + bias;
      for (int i = 0; i < n; ++i) obs(i) += options.noise_scale * rng.normal();
      y.row(t) = obs.transpose();
    }
    out.ids.push_back("run" + std::to_string(r));
    out.sequences.push_back(std::move(y));
    out.labels.push_back(std::move(labels));
    if (latents) latents->push_back(std::move(lat));
  }
  Manifest& m = out.manifest;
  m.source = "nascar";
  m.generator_version = kNascarVersion;
  m.runs = options.runs;
  m.length = options.length;
  m.obs_dim = n;
  m.noise_scale = options.noise_scale;
  m.dynamics_noise = options.dynamics_noise;
  return out;
}

Dataset generate_nascar(const NascarOptions& options, Rng& rng) {
  return generate_nascar(options, rng, nullptr);
}

Dataset generate_nascar(int runs, int length, int obs_dim, double noise_scale, Rng& rng) {
  NascarOptions o;
  o.runs = runs;
  o.length = length;
  o.obs_dim = obs_dim;
  o.noise_scale = noise_scale;
  return generate_nascar(o, rng, nullptr);
}

Dataset chunk_and_sample(const Dataset& dataset, int splits, double fraction, Rng& rng) {
  dataset.validate();
  if (splits < 1) throw ConfigError("number of splits must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sample fraction must lie in (0, 1]");
  const int keep = static_cast<int>(std::lround(fraction * splits));
  if (keep < 1) throw ConfigError("fraction * splits rounds to zero chunks");
  Dataset out;
  out.manifest = dataset.manifest;
  out.manifest.splits = splits;
  out.manifest.fraction = fraction;
  out.manifest.chunks.clear();
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
    const Eigen::Index len = dataset.sequences[i].rows();
    if (splits > len)
      throw DataError("S=" + std::to_string(splits) + " exceeds sequence length T=" + std::to_string(len) +
                      " of '" + dataset.ids[i] + "'");
    const Eigen::Index chunk = len / splits;
    out.manifest.dropped_tail = static_cast<int>(len - chunk * splits);
    std::vector<int> order(splits);
    for (int k = 0; k < splits; ++k) order[k] = k;
    for (int k = 0; k < keep; ++k) {
      const int j = k + static_cast<int>(rng.uniform() * (splits - k));
      std::swap(order[k], order[std::min(j, splits - 1)]);
    }
    std::vector<int> chosen(order.begin(), order.begin() + keep);
    std::sort(chosen.begin(), chosen.end());
    for (int k : chosen) {
      out.ids.push_back(dataset.ids[i] + "_chunk" + std::to_string(k));
      out.sequences.push_back(dataset.sequences[i].middleRows(k * chunk, chunk));
      if (dataset.has_labels())
        out.labels.emplace_back(dataset.labels[i].begin() + k * chunk, dataset.labels[i].begin() + (k + 1) * chunk);
      out.manifest.chunks.emplace_back(static_cast<int>(i), k);
    }
  }
  return out;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::size_t id_index = 0;
  const Table table = read_table(path, schema.id_column, id_index);
  const bool has_label = std::find(table.header.begin(), table.header.end(), schema.label_column) != table.header.end();
  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (c != id_index && !(has_label && table.header[c] == schema.label_column)) feature_idx.push_back(c);
  } else {
    for (const auto& name : schema.feature_columns) feature_idx.push_back(column_index(table, name));
  }
  if (feature_idx.empty() && !has_label) throw DataError("no feature columns in '" + path + "'");
  const std::size_t label_idx = has_label ? column_index(table, schema.label_column) : 0;

  Dataset out;
  out.ids = table.ids;
  for (std::size_t s = 0; s < table.ids.size(); ++s) {
    const auto& rows = table.rows[s];
    Matrix y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_idx.size()));
    std::vector<int> labels;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t line = table.line_numbers[s][r];
      for (std::size_t f = 0; f < feature_idx.size(); ++f)
        y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
            parse_double(rows[r][feature_idx[f]], line, table.header[feature_idx[f]]);
      if (has_label) labels.push_back(parse_label(rows[r][label_idx], line));
    }
    out.sequences.push_back(std::move(y));
    if (has_label) out.labels.push_back(std::move(labels));
  }
  out.manifest.source = path;
  return out;
}

void write_csv(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  const Eigen::Index n = dataset.sequences.empty() ? 0 : dataset.sequences[0].cols();
  out << "seq";
  for (Eigen::Index j = 0; j < n; ++j) out << ",y" << j;
  if (dataset.has_labels()) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
    const Matrix& y = dataset.sequences[i];
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      out << dataset.ids[i];
      for (Eigen::Index j = 0; j < n; ++j) out << ',' << fmt(y(t, j));
      if (dataset.has_labels()) out << ',' << dataset.labels[i][t];
      out << '\n';
    }
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

Matrix bee_features(const Vector& x, const Vector& y, const Vector& theta) {
  if (x.size() != y.size() || x.size() != theta.size()) throw DataError("bee columns differ in length");
  Matrix out(x.size(), 4);
  out.col(0) = theta.array().cos().matrix();
  out.col(1) = theta.array().sin().matrix();
  out.col(2) = x;
  out.col(3) = y;
  return out;
}

Dataset load_bee_csv(const std::string& path, const std::string& id_column, const std::string& label_column) {
  CsvSchema schema;
  schema.id_column = id_column;
  schema.label_column = label_column;
  schema.feature_columns = {"x", "y", "theta"};
  Dataset raw = load_csv(path, schema);
  for (auto& seq : raw.sequences) seq = bee_features(seq.col(0), seq.col(1), seq.col(2));
  return raw;
}

Matrix pooled_covariance(const std::vector<Matrix>& sequences) {
  if (sequences.empty()) throw DataError("no sequences");
  const Eigen::Index n = sequences[0].cols();
  Vector mean = Vector::Zero(n);
  double count = 0.0;
  for (const auto& y : sequences) {
    mean += y.colwise().sum().transpose();
    count += static_cast<double>(y.rows());
  }
  mean /= count;
  Matrix cov = Matrix::Zero(n, n);
  for (const auto& y : sequences) {
    const Matrix c = y.rowwise() - mean.transpose();
    cov.noalias() += c.transpose() * c;
  }
  return cov / count;
}

Dataset standardize(const Dataset& dataset) {
  dataset.validate();
  if (dataset.sequences.empty()) throw DataError("cannot standardize an empty dataset");
  const Eigen::Index n = dataset.sequences[0].cols();
  Vector mean = Vector::Zero(n), sq = Vector::Zero(n);
  double count = 0.0;
  for (const auto& y : dataset.sequences) {
    mean += y.colwise().sum().transpose();
    count += static_cast<double>(y.rows());
  }
  mean /= count;
  for (const auto& y : dataset.sequences)
    sq += (y.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  const Vector scale = (sq / count).array().sqrt().matrix();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(scale(j) > 1e-12 * std::max(1.0, std::abs(mean(j)))))
      throw DataError("feature " + std::to_string(j) + " has zero variance");
  Dataset out = dataset;
  for (auto& y : out.sequences)
    y = ((y.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  Manifest& m = out.manifest;
  if (m.standardized) {
    m.mean = m.mean + m.scale.cwiseProduct(mean);
    m.scale = m.scale.cwiseProduct(scale);
  } else {
    m.standardized = true;
    m.mean = mean;
    m.scale = scale;
  }
  return out;
}

Dataset inverse_standardize(const Dataset& dataset) {
  if (!dataset.manifest.standardized) return dataset;
  Dataset out = dataset;
  const Manifest& m = dataset.manifest;
  for (auto& y : out.sequences)
    y = ((y.array().rowwise() * m.scale.transpose().array()).rowwise() + m.mean.transpose().array()).matrix();
  out.manifest.standardized = false;
  out.manifest.mean.resize(0);
  out.manifest.scale.resize(0);
  return out;
}

}  // namespace redslds
