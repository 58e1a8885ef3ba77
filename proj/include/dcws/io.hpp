#pragma once

#include <map>
#include <string>
#include <vector>

#include "dcws/constraints.hpp"
#include "dcws/core.hpp"
#include "dcws/matrix.hpp"
#include "dcws/model.hpp"
#include "dcws/synth.hpp"

namespace dcws {

// Headerless CSV of decimal reals.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Matrix& m);

// One integer class index per line.
std::vector<int> read_label_file(const std::string& path);
void write_label_file(const std::string& path, const std::vector<int>& labels);

// Signal votes CSV (entries in [0,1] or -1 for abstain) plus the JSON object
// mapping signal index to class index with an "n_classes" key.
WeakSignalSet read_signals(const std::string& votes_path, const std::string& meta_path);
void write_signals(const std::string& votes_path, const std::string& meta_path,
                   const WeakSignalSet& signals);

// One non-negative decimal per signal line.
BoundVector read_bounds(const std::string& path, std::size_t n_signals);
void write_bounds(const std::string& path, const BoundVector& bounds);

// Flat key-value config text: "key value" or "key = value", '#' comments.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Self-describing text checkpoint of a label model; round-trips exactly.
void save_checkpoint(const std::string& path, const LabelModelSpec& spec,
                     const LabelModelParams& params);
struct Checkpoint {
  LabelModelSpec spec;
  LabelModelParams params;
};
Checkpoint load_checkpoint(const std::string& path);

void write_manifest(const std::string& path, const SyntheticSpec& spec,
                    const SyntheticBundle& bundle);

std::string format_double(double v);  // shortest representation that round-trips

const char* version_string();

}  // namespace dcws
