#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/math.hpp"
#include "incrlearn/rng.hpp"
#include "incrlearn/training_set.hpp"

namespace incrlearn {

/// Sigmoid outputs are clamped to [kOutputClamp, 1 - kOutputClamp] inside
/// log terms so the loss stays finite for any parameter setting.
inline constexpr double kOutputClamp = 1e-7;

/// Multilayer perceptron shape: rectified-linear hidden layers followed by
/// a linear feature layer whose output is L2-normalized.
struct NetSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t feature_dim = 0;

  void validate() const {
    if (input_dim < 1) throw ConfigError("NetSpec: input_dim must be >= 1");
    for (std::size_t w : hidden_widths) {
      if (w < 1) throw ConfigError("NetSpec: hidden widths must be >= 1");
    }
    if (feature_dim < 2) throw ConfigError("NetSpec: feature_dim must be >= 2");
  }

  bool operator==(const NetSpec&) const = default;
};

struct LayerParams {
  Matrix weights;  // rows = fan_out, cols = fan_in
  Vec bias;        // length = fan_out

  bool operator==(const LayerParams&) const = default;
};

/// Feature-extractor parameters plus one weight vector per observed class.
/// layers[0..H-1] are the hidden layers, layers[H] is the feature layer.
struct ModelParams {
  NetSpec spec;
  std::vector<LayerParams> layers;
  std::vector<Vec> class_weights;  // w_y for y = 1..t, each length feature_dim

  int num_classes() const { return static_cast<int>(class_weights.size()); }

  bool operator==(const ModelParams&) const = default;
};

/// Gradient buffer with the same shapes as the parameters it differentiates.
struct Gradient {
  std::vector<LayerParams> layers;
  std::vector<Vec> class_weights;
};

inline Gradient zero_gradient(const ModelParams& params) {
  Gradient g;
  g.layers.reserve(params.layers.size());
  for (const LayerParams& l : params.layers) {
    g.layers.push_back({Matrix(l.weights.rows(), l.weights.cols()),
                        Vec(l.bias.size(), 0.0)});
  }
  g.class_weights.reserve(params.class_weights.size());
  for (const Vec& w : params.class_weights) {
    g.class_weights.emplace_back(w.size(), 0.0);
  }
  return g;
}

/// All parameters initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
/// biases included (a nonzero feature-layer bias keeps the pre-normalization
/// output away from zero when every hidden unit happens to be inactive).
/// Draw order: layers in order, weights row-major then bias.
inline ModelParams init_params(const NetSpec& spec, RngStream& rng) {
  spec.validate();
  ModelParams p;
  p.spec = spec;
  std::size_t fan_in = spec.input_dim;
  std::vector<std::size_t> outs = spec.hidden_widths;
  outs.push_back(spec.feature_dim);
  for (std::size_t fan_out : outs) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    LayerParams l{Matrix(fan_out, fan_in), Vec(fan_out, 0.0)};
    for (double& w : l.weights.data()) w = rng.next_uniform(-bound, bound);
    for (double& b : l.bias) b = rng.next_uniform(-bound, bound);
    p.layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  return p;
}

/// Appends `count` new class heads, initialized uniform in
/// [-1/sqrt(d), +1/sqrt(d)] from the given stream. Existing parameters are
/// untouched.
inline ModelParams add_class_heads(ModelParams params, int count,
                                   RngStream& rng) {
  if (count < 1) throw ConfigError("add_class_heads: count must be >= 1");
  const std::size_t d = params.spec.feature_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < count; ++i) {
    Vec w(d);
    for (double& x : w) x = rng.next_uniform(-bound, bound);
    params.class_weights.push_back(std::move(w));
  }
  return params;
}

namespace detail {

struct ForwardTrace {
  std::vector<Vec> activations;  // activations[0] = x, then post-ReLU layers
  std::vector<Vec> hidden_preacts;
  Vec feature_preact;
  double feature_norm = 0.0;
  Vec feature;  // unit norm
};

inline void forward(const ModelParams& p, std::span<const double> x,
                    ForwardTrace& t) {
  if (x.size() != p.spec.input_dim) {
    std::ostringstream msg;
    msg << "forward: input dim " << x.size() << ", expected "
        << p.spec.input_dim;
    throw ShapeError(msg.str());
  }
  const std::size_t hidden = p.spec.hidden_widths.size();
  t.activations.assign(1, Vec(x.begin(), x.end()));
  t.hidden_preacts.clear();
  for (std::size_t l = 0; l < hidden; ++l) {
    Vec z = affine(p.layers[l].weights, t.activations.back(), p.layers[l].bias);
    Vec a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
    t.hidden_preacts.push_back(std::move(z));
    t.activations.push_back(std::move(a));
  }
  t.feature_preact =
      affine(p.layers[hidden].weights, t.activations.back(),
             p.layers[hidden].bias);
  t.feature_norm = l2_norm(t.feature_preact);
  if (!(t.feature_norm >= kDegenerateNormThreshold)) {
    throw DegenerateVectorError(
        "extract_features: pre-normalization output has norm < 1e-12");
  }
  t.feature.resize(t.feature_preact.size());
  for (std::size_t i = 0; i < t.feature_preact.size(); ++i) {
    t.feature[i] = t.feature_preact[i] / t.feature_norm;
  }
}

inline double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace detail

/// phi(x): forward pass through the feature layers, then L2 normalization.
inline FeatureVector extract_features(const ModelParams& params,
                                      std::span<const double> x) {
  detail::ForwardTrace t;
  detail::forward(params, x, t);
  return l2_normalize(t.feature_preact);
}

inline FeatureVector extract_features(const ModelParams& params,
                                      const Vec& x) {
  return extract_features(params, std::span<const double>(x));
}

/// Callable phi bound to a parameter set; valid while `params` is alive.
inline auto feature_map(const ModelParams& params) {
  return [&params](const Vec& x) { return extract_features(params, x); };
}

/// g_y(x) = sigmoid(w_y . phi(x)) for y = 1..t.
inline Vec network_outputs(const ModelParams& params,
                           std::span<const double> x) {
  if (params.num_classes() < 1) {
    throw NoClassesError("network_outputs: no class heads");
  }
  detail::ForwardTrace t;
  detail::forward(params, x, t);
  Vec g(params.class_weights.size());
  for (std::size_t y = 0; y < params.class_weights.size(); ++y) {
    g[y] = detail::sigmoid(dot(std::span<const double>(params.class_weights[y]),
                               std::span<const double>(t.feature)));
  }
  return g;
}

inline Vec network_outputs(const ModelParams& params, const Vec& x) {
  return network_outputs(params, std::span<const double>(x));
}

namespace detail {

/// Per-class indicator-or-soft target under a LossSpec. `entry` indexes the
/// distillation target matrix.
inline double loss_target(const LossSpec& spec, std::size_t entry, int y,
                          int label) {
  if (y >= spec.first_new_class) return y == label ? 1.0 : 0.0;
  return spec.targets->at(entry, y);
}

/// -(T log g + (1-T) log(1-g)) with g clamped to [1e-7, 1-1e-7].
inline double bce_term(double g, double target) {
  const double gc = std::clamp(g, kOutputClamp, 1.0 - kOutputClamp);
  return -(target * std::log(gc) + (1.0 - target) * std::log1p(-gc));
}

/// d bce_term / d logit. Zero in the clamped region, where the loss is
/// locally constant in the logit.
inline double bce_term_dlogit(double g, double target) {
  if (g <= kOutputClamp || g >= 1.0 - kOutputClamp) return 0.0;
  return g - target;
}

}  // namespace detail

/// Sum of per-class binary cross-entropy terms over the given batch of
/// entries: hard indicator targets for classes s..t, recorded soft targets
/// for classes 1..s-1. Duplicated indices count twice.
inline double evaluate_loss(const ModelParams& params,
                            const CombinedTrainingSet& data,
                            std::span<const std::size_t> batch,
                            const LossSpec& spec) {
  if (batch.empty()) throw EmptyInputError("evaluate_loss: empty batch");
  spec.validate(data.size());
  if (spec.num_classes != params.num_classes()) {
    throw ShapeError("evaluate_loss: LossSpec t != model heads");
  }
  double total = 0.0;
  detail::ForwardTrace t;
  for (std::size_t idx : batch) {
    const TrainEntry& e = data.entries.at(idx);
    if (e.label < 1 || e.label > spec.num_classes) {
      throw InvalidTargetError("evaluate_loss: entry label outside 1..t");
    }
    detail::forward(params, e.input, t);
    for (int y = 1; y <= spec.num_classes; ++y) {
      const double a =
          dot(std::span<const double>(
                  params.class_weights[static_cast<std::size_t>(y - 1)]),
              std::span<const double>(t.feature));
      total += detail::bce_term(detail::sigmoid(a),
                                detail::loss_target(spec, idx, y, e.label));
    }
  }
  return total;
}

/// evaluate_loss plus its exact analytic gradient, accumulated into `grad`
/// (which must be freshly zeroed or deliberately accumulating).
inline double loss_and_gradient(const ModelParams& params,
                                const CombinedTrainingSet& data,
                                std::span<const std::size_t> batch,
                                const LossSpec& spec, Gradient& grad) {
  if (batch.empty()) throw EmptyInputError("loss_and_gradient: empty batch");
  spec.validate(data.size());
  if (spec.num_classes != params.num_classes()) {
    throw ShapeError("loss_and_gradient: LossSpec t != model heads");
  }
  const std::size_t hidden = params.spec.hidden_widths.size();
  double total = 0.0;
  detail::ForwardTrace t;
  for (std::size_t idx : batch) {
    const TrainEntry& e = data.entries.at(idx);
    if (e.label < 1 || e.label > spec.num_classes) {
      throw InvalidTargetError("loss_and_gradient: entry label outside 1..t");
    }
    detail::forward(params, e.input, t);

    // Head terms and the pullback onto the feature vector.
    Vec dfeature(params.spec.feature_dim, 0.0);
    for (int y = 1; y <= spec.num_classes; ++y) {
      const Vec& w = params.class_weights[static_cast<std::size_t>(y - 1)];
      const double a = dot(std::span<const double>(w),
                           std::span<const double>(t.feature));
      const double g = detail::sigmoid(a);
      const double target = detail::loss_target(spec, idx, y, e.label);
      total += detail::bce_term(g, target);
      const double da = detail::bce_term_dlogit(g, target);
      if (da != 0.0) {
        Vec& gw = grad.class_weights[static_cast<std::size_t>(y - 1)];
        for (std::size_t i = 0; i < w.size(); ++i) {
          gw[i] += da * t.feature[i];
          dfeature[i] += da * w[i];
        }
      }
    }

    // Through phi = z / ||z||: dz = (u - phi (u.phi)) / ||z||.
    const double u_dot_phi = dot(std::span<const double>(dfeature),
                                 std::span<const double>(t.feature));
    Vec delta(t.feature.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta[i] =
          (dfeature[i] - t.feature[i] * u_dot_phi) / t.feature_norm;
    }

    // Feature layer, then hidden layers in reverse.
    for (std::size_t l = hidden + 1; l-- > 0;) {
      if (l < hidden) {
        const Vec& z = t.hidden_preacts[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
          if (z[i] <= 0.0) delta[i] = 0.0;
        }
      }
      const Vec& a_in = t.activations[l];
      LayerParams& gl = grad.layers[l];
      for (std::size_t r = 0; r < gl.weights.rows(); ++r) {
        const double dr = delta[r];
        if (dr == 0.0) continue;
        std::span<double> grow = gl.weights.row(r);
        for (std::size_t c = 0; c < grow.size(); ++c) grow[c] += dr * a_in[c];
        gl.bias[r] += dr;
      }
      if (l > 0) delta = transpose_times(params.layers[l].weights, delta);
    }
  }
  return total;
}

/// SGD settings. lr_drop_epochs holds 0-based epoch indices from which the
/// rate is divided by lr_drop_factor (once per listed epoch reached).
struct TrainConfig {
  int epochs = 70;
  int minibatch_size = 128;
  double base_learning_rate = 2.0;
  std::vector<int> lr_drop_epochs = {49, 63};
  double lr_drop_factor = 5.0;
  double weight_decay = 1e-5;
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (epochs < 0) throw ConfigError("TrainConfig: epochs must be >= 0");
    if (minibatch_size < 1) {
      throw ConfigError("TrainConfig: minibatch_size must be >= 1");
    }
    if (!(lr_drop_factor > 1.0)) {
      throw ConfigError("TrainConfig: lr_drop_factor must be > 1");
    }
    if (weight_decay < 0.0) {
      throw ConfigError("TrainConfig: weight_decay must be >= 0");
    }
  }
};

/// Drop points at 7/10 and 9/10 of the epoch count.
inline std::vector<int> default_lr_drops(int epochs) {
  std::vector<int> drops = {static_cast<int>(epochs * 7 / 10),
                            static_cast<int>(epochs * 9 / 10)};
  drops.erase(std::unique(drops.begin(), drops.end()), drops.end());
  return drops;
}

inline double learning_rate_at(const TrainConfig& cfg, int epoch) {
  int drops_passed = 0;
  for (int d : cfg.lr_drop_epochs) {
    if (epoch >= d) ++drops_passed;
  }
  return cfg.base_learning_rate / std::pow(cfg.lr_drop_factor, drops_passed);
}

/// Parameter subsets excluded from the gradient step (and from decay).
struct FreezeSpec {
  bool feature_layers = false;
  int heads_below = 0;  // freeze w_y for y < heads_below (1-based); 0 = none

  bool any() const { return feature_layers || heads_below > 1; }
};

/// Minibatch SGD over the entries of `data`.
///
/// Each epoch shuffles entry order with RngStream(derive_seed(shuffle_seed,
/// epoch)) and walks consecutive minibatches. The applied step is the batch
/// mean gradient plus weight_decay * theta on weight matrices and class
/// weights (biases are not decayed). Deterministic given (params, data,
/// cfg).
inline ModelParams sgd_train(ModelParams params,
                             const CombinedTrainingSet& data,
                             const TrainConfig& cfg, const LossSpec& spec,
                             const FreezeSpec& freeze = {}) {
  cfg.validate();
  if (data.size() == 0) throw EmptyInputError("sgd_train: no training data");
  if (cfg.epochs == 0) return params;
  spec.validate(data.size());

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream rng(derive_seed(cfg.shuffle_seed,
                              static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);
    const double lr = learning_rate_at(cfg, epoch);
    int step = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.minibatch_size), ++step) {
      const std::size_t end = std::min(
          begin + static_cast<std::size_t>(cfg.minibatch_size), order.size());
      const std::span<const std::size_t> batch(order.data() + begin,
                                               end - begin);
      Gradient grad = zero_gradient(params);
      const double loss = loss_and_gradient(params, data, batch, spec, grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "sgd_train: non-finite loss at epoch " << epoch << ", step "
            << step;
        throw DivergenceError(epoch, step, msg.str());
      }
      const double scale = 1.0 / static_cast<double>(batch.size());

      const std::size_t first_layer =
          freeze.feature_layers ? params.layers.size() : 0;
      for (std::size_t l = first_layer; l < params.layers.size(); ++l) {
        Vec& w = params.layers[l].weights.data();
        const Vec& gw = grad.layers[l].weights.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] -= lr * (gw[i] * scale + cfg.weight_decay * w[i]);
        }
        Vec& b = params.layers[l].bias;
        const Vec& gb = grad.layers[l].bias;
        for (std::size_t i = 0; i < b.size(); ++i) {
          b[i] -= lr * gb[i] * scale;
        }
      }
      const std::size_t first_head =
          freeze.heads_below > 1 ? static_cast<std::size_t>(freeze.heads_below - 1)
                                 : 0;
      for (std::size_t y = first_head; y < params.class_weights.size(); ++y) {
        Vec& w = params.class_weights[y];
        const Vec& gw = grad.class_weights[y];
        for (std::size_t i = 0; i < w.size(); ++i) {
          w[i] -= lr * (gw[i] * scale + cfg.weight_decay * w[i]);
        }
      }
    }
  }
  return params;
}

/// Central-difference gradient of an arbitrary scalar function, used as the
/// independent oracle against analytic gradients.
inline Vec central_difference(const std::function<double(const Vec&)>& fn,
                              const Vec& x0, double epsilon) {
  Vec grad(x0.size(), 0.0);
  Vec x = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x[i] = x0[i] + epsilon;
    const double fp = fn(x);
    x[i] = x0[i] - epsilon;
    const double fm = fn(x);
    x[i] = x0[i];
    grad[i] = (fp - fm) / (2.0 * epsilon);
  }
  return grad;
}

/// Flat parameter order: for each layer, weights row-major then bias; then
/// class weight vectors in id order. Shared by the finite-difference oracle
/// and the tests that compare gradients elementwise.
inline Vec flatten(const ModelParams& params) {
  Vec out;
  for (const LayerParams& l : params.layers) {
    out.insert(out.end(), l.weights.data().begin(), l.weights.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  for (const Vec& w : params.class_weights) {
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

inline Vec flatten(const Gradient& grad) {
  Vec out;
  for (const LayerParams& l : grad.layers) {
    out.insert(out.end(), l.weights.data().begin(), l.weights.data().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  for (const Vec& w : grad.class_weights) {
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

inline void set_flat(ModelParams& params, const Vec& flat) {
  std::size_t pos = 0;
  auto take = [&](Vec& dst) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + dst.size()),
              dst.begin());
    pos += dst.size();
  };
  for (LayerParams& l : params.layers) {
    take(l.weights.data());
    take(l.bias);
  }
  for (Vec& w : params.class_weights) take(w);
  if (pos != flat.size()) {
    throw ShapeError("set_flat: flat vector length mismatch");
  }
}

/// Central-difference estimate of the loss gradient for every parameter.
inline Gradient finite_diff_gradient(const ModelParams& params,
                                     const CombinedTrainingSet& data,
                                     std::span<const std::size_t> batch,
                                     const LossSpec& spec, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw ConfigError("finite_diff_gradient: epsilon outside [1e-7, 1e-3]");
  }
  ModelParams scratch = params;
  const std::vector<std::size_t> batch_copy(batch.begin(), batch.end());
  auto fn = [&](const Vec& flat) {
    set_flat(scratch, flat);
    return evaluate_loss(scratch, data, batch_copy, spec);
  };
  const Vec g = central_difference(fn, flatten(params), epsilon);
  Gradient out = zero_gradient(params);
  ModelParams shaped = params;
  set_flat(shaped, g);
  out.layers = shaped.layers;
  out.class_weights = shaped.class_weights;
  return out;
}

}  // namespace incrlearn
