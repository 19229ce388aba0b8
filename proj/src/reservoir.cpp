#include "drc/reservoir.hpp"

#include <cmath>
#include <string>

#include "drc/error.hpp"

namespace drc {

namespace {

inline double activate(Nonlinearity f, double x) {
  return f == Nonlinearity::sine ? std::sin(x) : std::tanh(x);
}

// Plain k-ordered dot product; the oracle runs use the same order so results
// agree bit for bit.
inline double masked_drive(const Mask& mask, Index node, const Matrix& inputs, Index n) {
  double acc = 0.0;
  for (Index k = 0; k < mask.cols(); ++k) acc += mask.values(node, k) * inputs(n, k);
  return acc;
}

void check_mask(const Matrix& inputs, const Mask& mask, Index n_nodes) {
  require(mask.cols() == inputs.cols(),
          "input mask has " + std::to_string(mask.cols()) + " columns but inputs have " +
              std::to_string(inputs.cols()) + " features");
  require(mask.rows() == n_nodes, "input mask has " + std::to_string(mask.rows()) +
                                      " rows, expected " + std::to_string(n_nodes));
}

}  // namespace

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "sine" || name == "sin") return Nonlinearity::sine;
  if (name == "tanh") return Nonlinearity::tanh;
  throw_invalid("unknown nonlinearity '" + name + "'");
}

const char* to_string(Nonlinearity f) noexcept {
  return f == Nonlinearity::sine ? "sine" : "tanh";
}

void DeepConfig::validate(Index input_dim) const {
  require(!layers.empty(), "deep config needs at least one layer");
  require(interlayer_masks.size() + 1 == layers.size(),
          "deep config with " + std::to_string(layers.size()) + " layers needs " +
              std::to_string(layers.size() - 1) + " interlayer masks, got " +
              std::to_string(interlayer_masks.size()));
  require(input_mask.cols() == input_dim,
          "input mask expects " + std::to_string(input_mask.cols()) +
              " features, dataset has " + std::to_string(input_dim));
  require(input_mask.rows() == layers[0].n_nodes, "input mask rows do not match layer 1 size");
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const Mask& m = interlayer_masks[l - 1];
    require(m.cols() == layers[l - 1].n_nodes && m.rows() == layers[l].n_nodes,
            "interlayer mask " + std::to_string(l) + " is " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", expected " + std::to_string(layers[l].n_nodes) +
                "x" + std::to_string(layers[l - 1].n_nodes));
  }
  for (const auto& p : layers) {
    require(p.n_nodes >= 1, "layer size must be positive");
    require(p.delay_steps >= 1, "delay_steps must be >= 1");
    require(p.feedback_gain >= 0.0 && p.input_gain >= 0.0, "gains must be nonnegative");
    if (shared_gains)
      require(p.feedback_gain == layers[0].feedback_gain && p.input_gain == layers[0].input_gain,
              "shared_gains is set but layers report different gains");
  }
}

StateMatrix delay_reservoir_run(const Matrix& inputs, const Mask& input_mask,
                                const DelayReservoirParams& params,
                                std::span<const double> init) {
  const Index n_nodes = params.n_nodes;
  const Index delay = params.delay_steps;
  require(n_nodes >= 1, "n_nodes must be positive");
  require(delay >= 1, "delay_steps must be >= 1");
  check_mask(inputs, input_mask, n_nodes);
  require(init.empty() || static_cast<Index>(init.size()) == delay,
          "init buffer must hold delay_steps values");

  const Index steps = inputs.rows();
  StateMatrix out{Matrix(steps, n_nodes), std::nullopt};
  // Ring buffer of the last `delay` flat-time samples; slot t mod delay holds
  // s(t - delay) right before s(t) overwrites it.
  std::vector<double> ring(static_cast<std::size_t>(delay), 0.0);
  for (Index j = 0; j < delay && !init.empty(); ++j) {
    // init[j] = s(j - delay); that sample sits in slot (j - delay) mod delay = j.
    ring[static_cast<std::size_t>(j)] = init[static_cast<std::size_t>(j)];
  }
  std::size_t slot = 0;
  for (Index n = 0; n < steps; ++n) {
    for (Index i = 0; i < n_nodes; ++i) {
      const double delayed = ring[slot];
      const double drive = masked_drive(input_mask, i, inputs, n);
      const double s = activate(params.nonlinearity,
                                params.feedback_gain * delayed + params.input_gain * drive);
      out.values(n, i) = s;
      ring[slot] = s;
      if (++slot == ring.size()) slot = 0;
    }
  }
  return out;
}

Vector delay_buffer_tail(const StateMatrix& states, std::span<const double> init,
                         Index delay_steps) {
  const Index n_nodes = states.width();
  const Index total = states.timesteps() * n_nodes;
  Vector tail(delay_steps);
  for (Index j = 0; j < delay_steps; ++j) {
    const Index t = total - delay_steps + j;  // flat time of tail[j]
    if (t >= 0) {
      tail[j] = states.values(t / n_nodes, t % n_nodes);
    } else {
      const Index k = t + delay_steps;  // index into the previous buffer
      tail[j] = init.empty() ? 0.0 : init[static_cast<std::size_t>(k)];
    }
  }
  return tail;
}

StateMatrix eq6_reference_run(const Matrix& inputs, const Mask& input_mask,
                              double feedback_gain, double input_gain,
                              std::span<const double> init) {
  const Index n_nodes = input_mask.rows();
  check_mask(inputs, input_mask, n_nodes);
  require(init.empty() || static_cast<Index>(init.size()) == n_nodes + 1,
          "reference run expects N+1 initial values");
  auto pre = [&](Index j) { return init.empty() ? 0.0 : init[static_cast<std::size_t>(j)]; };

  // x(-1) = s(-N .. -1) and x_{N-1}(-2) = s(-N-1).
  Vector prev(n_nodes);
  for (Index i = 0; i < n_nodes; ++i) prev[i] = pre(i + 1);
  double last_of_two_back = pre(0);

  const Index steps = inputs.rows();
  StateMatrix out{Matrix(steps, n_nodes), std::nullopt};
  for (Index n = 0; n < steps; ++n) {
    Vector next(n_nodes);
    next[0] = std::sin(feedback_gain * last_of_two_back +
                       input_gain * masked_drive(input_mask, 0, inputs, n));
    for (Index i = 1; i < n_nodes; ++i)
      next[i] = std::sin(feedback_gain * prev[i - 1] +
                         input_gain * masked_drive(input_mask, i, inputs, n));
    last_of_two_back = prev[n_nodes - 1];
    prev = next;
    out.values.row(n) = next.transpose();
  }
  return out;
}

StateMatrix esn_run(const Matrix& inputs, const Matrix& reservoir,
                    const Matrix& input_weights, Nonlinearity f,
                    std::span<const double> init) {
  const Index n_nodes = reservoir.rows();
  require(reservoir.cols() == n_nodes, "reservoir matrix must be square");
  require(input_weights.rows() == n_nodes && input_weights.cols() == inputs.cols(),
          "input weight matrix shape does not match reservoir and inputs");
  require(init.empty() || static_cast<Index>(init.size()) == n_nodes,
          "init must hold one value per node");
  Vector x = Vector::Zero(n_nodes);
  for (Index i = 0; i < n_nodes && !init.empty(); ++i) x[i] = init[static_cast<std::size_t>(i)];

  StateMatrix out{Matrix(inputs.rows(), n_nodes), std::nullopt};
  for (Index n = 0; n < inputs.rows(); ++n) {
    Vector pre = reservoir * x + input_weights * inputs.row(n).transpose();
    x = pre.unaryExpr([f](double v) { return activate(f, v); });
    out.values.row(n) = x.transpose();
  }
  return out;
}

std::vector<StateMatrix> deep_run(const Matrix& inputs, const DeepConfig& config,
                                  const std::vector<Vector>& inits) {
  config.validate(inputs.cols());
  require(inits.empty() || inits.size() == config.depth(), "one init vector per layer expected");
  std::vector<StateMatrix> layers;
  layers.reserve(config.depth());
  for (std::size_t l = 0; l < config.depth(); ++l) {
    std::span<const double> init;
    if (!inits.empty()) init = {inits[l].data(), static_cast<std::size_t>(inits[l].size())};
    const Matrix& drive = l == 0 ? inputs : layers.back().values;
    const Mask& mask = l == 0 ? config.input_mask : config.interlayer_masks[l - 1];
    StateMatrix states = delay_reservoir_run(drive, mask, config.layers[l], init);
    states.layer_id = static_cast<int>(l);
    layers.push_back(std::move(states));
  }
  return layers;
}

StateMatrix concat_states(const std::vector<StateMatrix>& per_layer) {
  require(!per_layer.empty(), "nothing to concatenate");
  const Index steps = per_layer.front().timesteps();
  Index width = 0;
  for (const auto& s : per_layer) {
    require(s.timesteps() == steps, "layers disagree on the number of timesteps");
    width += s.width();
  }
  StateMatrix out{Matrix(steps, width), std::nullopt};
  Index col = 0;
  for (const auto& s : per_layer) {
    out.values.middleCols(col, s.width()) = s.values;
    col += s.width();
  }
  if (per_layer.size() == 1) out.layer_id = per_layer.front().layer_id;
  return out;
}

double physical_delay_to_steps(double clock_hz, double delay_s, int samples_per_node) {
  require(clock_hz > 0.0 && delay_s > 0.0 && samples_per_node > 0,
          "clock, delay and samples per node must all be positive");
  return delay_s * clock_hz / samples_per_node;
}

}  // namespace drc
