#include "dcws/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcws {

void LabelModelSpec::validate() const {
  if (hidden_units < 1) throw std::invalid_argument("LabelModelSpec: hidden_units must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("LabelModelSpec: dropout_rate must lie in [0,1)");
  if (n_outputs < 1) throw std::invalid_argument("LabelModelSpec: n_outputs must be >= 1");
  if (output_head == OutputHead::sigmoid && n_outputs != 1)
    throw std::invalid_argument("LabelModelSpec: sigmoid head requires a single output");
}

std::vector<std::size_t> LabelModelSpec::layer_widths(std::size_t n_features) const {
  if (architecture == Architecture::linear)
    return {n_features, static_cast<std::size_t>(n_outputs)};
  return {n_features, static_cast<std::size_t>(hidden_units), static_cast<std::size_t>(n_outputs)};
}

LabelModelParams init_stack(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  Rng rng(seed);
  LabelModelParams params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    layer.weights = Matrix(widths[l], widths[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (double& w : layer.weights.data()) w = rng.normal() * scale;
    layer.bias.assign(widths[l + 1], 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

LabelModelParams init_params(const LabelModelSpec& spec, std::size_t n_features, std::uint64_t seed) {
  spec.validate();
  return init_stack(spec.layer_widths(n_features), seed);
}

namespace {

void apply_head(Matrix& z, OutputHead head) {
  if (head == OutputHead::sigmoid) {
    for (double& v : z.data()) v = 1.0 / (1.0 + std::exp(-v));
    return;
  }
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double* row = z.row(i);
    double max = row[0];
    for (std::size_t j = 1; j < z.cols(); ++j) max = std::max(max, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      row[j] = std::exp(row[j] - max);
      sum += row[j];
    }
    for (std::size_t j = 0; j < z.cols(); ++j) row[j] /= sum;
  }
}

// dL/dz from dL/df for the output head.
Matrix head_backward(const Matrix& probs, const Matrix& output_gradient, OutputHead head) {
  Matrix delta(probs.rows(), probs.cols());
  if (head == OutputHead::sigmoid) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double f = probs.data()[i];
      delta.data()[i] = output_gradient.data()[i] * f * (1.0 - f);
    }
    return delta;
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double* f = probs.row(i);
    const double* g = output_gradient.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) dot += g[j] * f[j];
    double* d = delta.row(i);
    for (std::size_t j = 0; j < probs.cols(); ++j) d[j] = f[j] * (g[j] - dot);
  }
  return delta;
}

}  // namespace

SoftLabelMatrix stack_forward(const LabelModelParams& params, OutputHead head, double dropout_rate,
                              const Matrix& x, RunMode mode, Rng* rng, ForwardCache* cache) {
  if (params.layers.empty()) throw std::invalid_argument("stack_forward: no layers");
  if (x.cols() != params.layers.front().weights.rows())
    throw std::invalid_argument("stack_forward: feature count mismatch");
  if (!all_finite(x)) throw std::invalid_argument("stack_forward: non-finite input");

  const bool drop = mode == RunMode::train && dropout_rate > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("stack_forward: dropout needs an rng");

  if (cache) {
    cache->input = &x;
    cache->activations.clear();
    cache->back_masks.clear();
  }

  const Matrix* current = &x;
  Matrix activation;
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    Matrix z = matmul(*current, params.layers[l].weights);
    add_row_vector(z, params.layers[l].bias);
    Matrix mask;
    if (cache) mask = Matrix(z.rows(), z.cols());
    const double keep_scale = 1.0 / (1.0 - dropout_rate);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double v = z.data()[i];
      double out = v > 0.0 ? v : 0.0;
      double scale = v > 0.0 ? 1.0 : 0.0;
      if (drop && v > 0.0) {
        if (rng->uniform() < dropout_rate) {
          out = 0.0;
          scale = 0.0;
        } else {
          out = v * keep_scale;
          scale = keep_scale;
        }
      }
      z.data()[i] = out;
      if (cache) mask.data()[i] = scale;
    }
    activation = std::move(z);
    if (cache) {
      cache->back_masks.push_back(std::move(mask));
      cache->activations.push_back(activation);
    }
    current = &activation;
  }

  Matrix out = matmul(*current, params.layers.back().weights);
  add_row_vector(out, params.layers.back().bias);
  apply_head(out, head);

  SoftLabelMatrix result;
  result.probs = out;
  if (cache) cache->probs = std::move(out);
  return result;
}

std::vector<Layer> stack_backward(const LabelModelParams& params, OutputHead head,
                                  const ForwardCache& cache, const Matrix& output_gradient) {
  if (cache.input == nullptr) throw std::invalid_argument("stack_backward: cache not populated");
  if (!output_gradient.same_shape(cache.probs))
    throw std::invalid_argument("stack_backward: gradient shape mismatch");
  const std::size_t n_layers = params.layers.size();
  if (cache.activations.size() + 1 != n_layers)
    throw std::invalid_argument("stack_backward: cache does not match params");

  std::vector<Layer> grads(n_layers);
  Matrix delta = head_backward(cache.probs, output_gradient, head);

  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& input = l == 0 ? *cache.input : cache.activations[l - 1];
    grads[l].weights = matmul_at_b(input, delta);
    grads[l].bias = col_sums(delta);
    if (l == 0) break;
    Matrix next = matmul_a_bt(delta, params.layers[l].weights);
    const Matrix& mask = cache.back_masks[l - 1];
    for (std::size_t i = 0; i < next.size(); ++i) next.data()[i] *= mask.data()[i];
    delta = std::move(next);
  }
  return grads;
}

SoftLabelMatrix forward(const LabelModelParams& params, const LabelModelSpec& spec, const Matrix& x,
                        RunMode mode, Rng* rng, ForwardCache* cache) {
  return stack_forward(params, spec.output_head, spec.dropout_rate, x, mode, rng, cache);
}

std::vector<Layer> backward(const LabelModelParams& params, const LabelModelSpec& spec,
                            const ForwardCache& cache, const Matrix& output_gradient) {
  return stack_backward(params, spec.output_head, cache, output_gradient);
}

AdamState make_adam_state(const LabelModelParams& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const Layer& layer : params.layers) {
    Layer zero;
    zero.weights = Matrix(layer.weights.rows(), layer.weights.cols());
    zero.bias.assign(layer.bias.size(), 0.0);
    state.first_moment.push_back(zero);
    state.second_moment.push_back(std::move(zero));
  }
  return state;
}

namespace {

void adam_update(double& param, double& m, double& v, double g, const AdamConfig& c,
                 double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  const double m_hat = m / bias1;
  const double v_hat = v / bias2;
  param -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
}

}  // namespace

void adam_step(AdamState& state, LabelModelParams& params, const std::vector<Layer>& grads) {
  if (grads.size() != params.layers.size())
    throw std::invalid_argument("adam_step: gradient layer count mismatch");
  state.step += 1;
  const double bias1 = 1.0 - std::pow(state.config.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.config.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer& layer = params.layers[l];
    const Layer& grad = grads[l];
    if (!layer.weights.same_shape(grad.weights) || layer.bias.size() != grad.bias.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    auto& mw = state.first_moment[l].weights.data();
    auto& vw = state.second_moment[l].weights.data();
    auto& w = layer.weights.data();
    const auto& gw = grad.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i)
      adam_update(w[i], mw[i], vw[i], gw[i], state.config, bias1, bias2);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      adam_update(layer.bias[i], state.first_moment[l].bias[i], state.second_moment[l].bias[i],
                  grad.bias[i], state.config, bias1, bias2);
  }
}

std::vector<Layer> finite_diff_gradients(const LabelModelParams& params,
                                         const std::function<double(const LabelModelParams&)>& loss,
                                         double epsilon) {
  LabelModelParams probe = params;
  std::vector<Layer> grads;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Layer grad;
    grad.weights = Matrix(params.layers[l].weights.rows(), params.layers[l].weights.cols());
    grad.bias.assign(params.layers[l].bias.size(), 0.0);

    auto& w = probe.layers[l].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double original = w[i];
      w[i] = original + epsilon;
      const double up = loss(probe);
      w[i] = original - epsilon;
      const double down = loss(probe);
      w[i] = original;
      grad.weights.data()[i] = (up - down) / (2.0 * epsilon);
    }
    for (std::size_t i = 0; i < probe.layers[l].bias.size(); ++i) {
      const double original = probe.layers[l].bias[i];
      probe.layers[l].bias[i] = original + epsilon;
      const double up = loss(probe);
      probe.layers[l].bias[i] = original - epsilon;
      const double down = loss(probe);
      probe.layers[l].bias[i] = original;
      grad.bias[i] = (up - down) / (2.0 * epsilon);
    }
    grads.push_back(std::move(grad));
  }
  return grads;
}

}  // namespace dcws
