#include "dcws/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dcws {

using json = nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

double parse_double(std::string_view token, const std::string& path) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::runtime_error(path + ": bad numeric field '" + std::string(token) + "'");
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

Matrix read_csv_matrix(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::size_t row_cols = 0;
    while (!rest.empty()) {
      const std::size_t comma = rest.find(',');
      std::string_view token = trim(rest.substr(0, comma));
      values.push_back(parse_double(token, path));
      ++row_cols;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (cols == 0) cols = row_cols;
    if (row_cols != cols) throw std::runtime_error(path + ": ragged CSV row");
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path + ": empty CSV");
  Matrix m(rows, cols);
  m.data() = std::move(values);
  return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

std::vector<int> read_label_file(const std::string& path) {
  auto in = open_in(path);
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view token = trim(line);
    if (token.empty()) continue;
    const double v = parse_double(token, path);
    const int label = static_cast<int>(v);
    if (static_cast<double>(label) != v)
      throw std::runtime_error(path + ": non-integer label");
    labels.push_back(label);
  }
  if (labels.empty()) throw std::runtime_error(path + ": no labels");
  return labels;
}

void write_label_file(const std::string& path, const std::vector<int>& labels) {
  auto out = open_out(path);
  for (int y : labels) out << y << '\n';
}

WeakSignalSet read_signals(const std::string& votes_path, const std::string& meta_path) {
  WeakSignalSet signals;
  signals.votes = read_csv_matrix(votes_path);
  for (double& v : signals.votes.data())
    if (v < 0.0) v = kAbstain;  // any negative sentinel normalizes to -1

  auto in = open_in(meta_path);
  json meta = json::parse(in);
  if (!meta.contains("n_classes")) throw std::runtime_error(meta_path + ": missing n_classes");
  signals.n_classes = meta.at("n_classes").get<int>();
  signals.signal_class.assign(signals.votes.cols(), 1);
  for (std::size_t s = 0; s < signals.votes.cols(); ++s) {
    const std::string key = std::to_string(s);
    if (!meta.contains(key)) throw std::runtime_error(meta_path + ": missing class for signal " + key);
    signals.signal_class[s] = meta.at(key).get<int>();
  }
  signals.validate();
  return signals;
}

void write_signals(const std::string& votes_path, const std::string& meta_path,
                   const WeakSignalSet& signals) {
  write_csv_matrix(votes_path, signals.votes);
  json meta;
  meta["n_classes"] = signals.n_classes;
  for (std::size_t s = 0; s < signals.signal_class.size(); ++s)
    meta[std::to_string(s)] = signals.signal_class[s];
  auto out = open_out(meta_path);
  out << meta.dump(2) << '\n';
}

BoundVector read_bounds(const std::string& path, std::size_t n_signals) {
  auto in = open_in(path);
  BoundVector bounds;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view token = trim(line);
    if (token.empty()) continue;
    bounds.bounds.push_back(parse_double(token, path));
  }
  if (bounds.size() != n_signals)
    throw std::runtime_error(path + ": expected " + std::to_string(n_signals) + " bounds");
  bounds.validate();
  return bounds;
}

void write_bounds(const std::string& path, const BoundVector& bounds) {
  auto out = open_out(path);
  for (double b : bounds.bounds) out << format_double(b) << '\n';
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> config;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::size_t split = rest.find_first_of(" \t=");
    if (split == std::string_view::npos)
      throw std::runtime_error(path + ": malformed config line '" + std::string(rest) + "'");
    std::string key(trim(rest.substr(0, split)));
    std::string_view value = rest.substr(split);
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t' || value.front() == '='))
      value.remove_prefix(1);
    value = trim(value);
    if (value.empty()) throw std::runtime_error(path + ": missing value for key '" + key + "'");
    config[key] = std::string(value);
  }
  return config;
}

namespace {

const char* head_name(OutputHead head) {
  return head == OutputHead::sigmoid ? "sigmoid" : "softmax";
}

const char* arch_name(Architecture arch) {
  return arch == Architecture::linear ? "linear" : "two_layer";
}

}  // namespace

void save_checkpoint(const std::string& path, const LabelModelSpec& spec,
                     const LabelModelParams& params) {
  auto out = open_out(path);
  out << "dcws-checkpoint 1\n";
  out << "architecture " << arch_name(spec.architecture) << '\n';
  out << "hidden_units " << spec.hidden_units << '\n';
  out << "dropout_rate " << format_double(spec.dropout_rate) << '\n';
  out << "output_head " << head_name(spec.output_head) << '\n';
  out << "n_outputs " << spec.n_outputs << '\n';
  out << "layers " << params.layers.size() << '\n';
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    out << "layer " << l << " " << layer.weights.rows() << " " << layer.weights.cols() << '\n';
    for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
      const double* row = layer.weights.row(i);
      for (std::size_t j = 0; j < layer.weights.cols(); ++j) {
        if (j) out << ' ';
        out << format_double(row[j]);
      }
      out << '\n';
    }
    out << "bias " << layer.bias.size() << '\n';
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
      if (j) out << ' ';
      out << format_double(layer.bias[j]);
    }
    out << '\n';
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  auto in = open_in(path);
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "dcws-checkpoint" || version != 1)
    throw std::runtime_error(path + ": not a dcws checkpoint");

  Checkpoint ckpt;
  std::string key, value;
  in >> key >> value;
  ckpt.spec.architecture = value == "linear" ? Architecture::linear : Architecture::two_layer;
  in >> key >> ckpt.spec.hidden_units;
  in >> key >> value;
  ckpt.spec.dropout_rate = parse_double(value, path);
  in >> key >> value;
  ckpt.spec.output_head = value == "softmax" ? OutputHead::softmax : OutputHead::sigmoid;
  in >> key >> ckpt.spec.n_outputs;

  std::size_t n_layers = 0;
  in >> key >> n_layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::size_t index = 0, rows = 0, cols = 0;
    in >> key >> index >> rows >> cols;
    if (key != "layer" || index != l) throw std::runtime_error(path + ": corrupt layer header");
    Layer layer;
    layer.weights = Matrix(rows, cols);
    for (double& w : layer.weights.data()) {
      in >> value;
      w = parse_double(value, path);
    }
    std::size_t bias_size = 0;
    in >> key >> bias_size;
    if (key != "bias") throw std::runtime_error(path + ": corrupt bias header");
    layer.bias.resize(bias_size);
    for (double& b : layer.bias) {
      in >> value;
      b = parse_double(value, path);
    }
    ckpt.params.layers.push_back(std::move(layer));
  }
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return ckpt;
}

void write_manifest(const std::string& path, const SyntheticSpec& spec,
                    const SyntheticBundle& bundle) {
  json doc;
  doc["benchmark"] = spec.n_copies > 0 ? "dependent" : "independent";
  doc["n_train"] = spec.n_train;
  doc["n_test"] = spec.n_test;
  doc["n_features"] = spec.n_features;
  doc["feature_agreement_lo"] = spec.feature_agreement_lo;
  doc["feature_agreement_hi"] = spec.feature_agreement_hi;
  doc["n_signals"] = spec.n_signals;
  doc["n_copies"] = spec.n_copies;
  doc["copy_flip_rate"] = spec.copy_flip_rate;
  doc["coverage"] = spec.coverage;
  doc["error_lo"] = spec.error_lo;
  doc["error_hi"] = spec.error_hi;
  doc["seed"] = spec.seed;
  doc["realized_errors"] = bundle.realized_errors;

  const auto mask = coverage(bundle.signals);
  std::size_t covered = 0;
  for (bool c : mask) covered += c;
  doc["global_coverage"] =
      static_cast<double>(covered) / static_cast<double>(bundle.signals.n_examples());
  doc["bundle_hash"] = bundle_hash_hex(bundle);
  doc["version"] = version_string();

  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

const char* version_string() {
#ifdef DCWS_VERSION
  return DCWS_VERSION;
#else
  return "v0.1.0";
#endif
}

}  // namespace dcws
