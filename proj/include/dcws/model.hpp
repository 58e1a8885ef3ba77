#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcws/core.hpp"
#include "dcws/matrix.hpp"
#include "dcws/rng.hpp"

namespace dcws {

enum class Architecture { linear, two_layer };
enum class OutputHead { sigmoid, softmax };
enum class RunMode { train, eval };

struct LabelModelSpec {
  Architecture architecture = Architecture::two_layer;
  int hidden_units = 512;
  double dropout_rate = 0.2;
  OutputHead output_head = OutputHead::sigmoid;
  int n_outputs = 1;

  void validate() const;
  std::vector<std::size_t> layer_widths(std::size_t n_features) const;
};

struct Layer {
  Matrix weights;             // fan_in x fan_out
  std::vector<double> bias;   // fan_out
};

// Parameters of a feed-forward stack: all layers but the last are ReLU hidden
// layers (with dropout in train mode), the last feeds the output head.
struct LabelModelParams {
  std::vector<Layer> layers;
};

struct ForwardCache {
  const Matrix* input = nullptr;
  std::vector<Matrix> activations;  // post-ReLU, post-dropout hidden outputs
  std::vector<Matrix> back_masks;   // ReLU subgradient times dropout keep scale
  Matrix probs;
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Layer> first_moment;
  std::vector<Layer> second_moment;
  std::uint64_t step = 0;
};

// Weights ~ Normal(0, 1/fan_in), biases zero; deterministic per seed.
LabelModelParams init_params(const LabelModelSpec& spec, std::size_t n_features, std::uint64_t seed);

// rng is consumed only in train mode when dropout_rate > 0.
SoftLabelMatrix forward(const LabelModelParams& params, const LabelModelSpec& spec, const Matrix& x,
                        RunMode mode, Rng* rng, ForwardCache* cache = nullptr);

// Gradients of a scalar loss whose derivative w.r.t. the head output equals
// output_gradient. Applies the head Jacobian (sigmoid factor or the full
// softmax row Jacobian) and back-propagates through the cached pass.
std::vector<Layer> backward(const LabelModelParams& params, const LabelModelSpec& spec,
                            const ForwardCache& cache, const Matrix& output_gradient);

AdamState make_adam_state(const LabelModelParams& params, const AdamConfig& config);
void adam_step(AdamState& state, LabelModelParams& params, const std::vector<Layer>& grads);

// Central-difference gradient estimate; the oracle backward is tested against.
std::vector<Layer> finite_diff_gradients(const LabelModelParams& params,
                                         const std::function<double(const LabelModelParams&)>& loss,
                                         double epsilon);

// Generic stack used by both the label model and the end model.
LabelModelParams init_stack(const std::vector<std::size_t>& widths, std::uint64_t seed);
SoftLabelMatrix stack_forward(const LabelModelParams& params, OutputHead head, double dropout_rate,
                              const Matrix& x, RunMode mode, Rng* rng, ForwardCache* cache);
std::vector<Layer> stack_backward(const LabelModelParams& params, OutputHead head,
                                  const ForwardCache& cache, const Matrix& output_gradient);

}  // namespace dcws
