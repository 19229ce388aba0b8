#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drc/mask.hpp"
#include "drc/types.hpp"

namespace drc {

enum class Nonlinearity { sine, tanh };

Nonlinearity parse_nonlinearity(const std::string& name);
const char* to_string(Nonlinearity f) noexcept;

struct DelayReservoirParams {
  Index n_nodes = 50;
  /// Delay in node-update steps. n_nodes + 1 is the classic
  /// desynchronised loop; any value >= 1 is accepted.
  Index delay_steps = 51;
  double feedback_gain = 0.8;
  double input_gain = 0.5;
  Nonlinearity nonlinearity = Nonlinearity::sine;
};

/// Row n holds the node vector at discrete time n.
struct StateMatrix {
  Matrix values;
  std::optional<int> layer_id;

  Index timesteps() const { return values.rows(); }
  Index width() const { return values.cols(); }
};

struct DeepConfig {
  std::vector<DelayReservoirParams> layers;
  Mask input_mask;
  std::vector<Mask> interlayer_masks;
  bool shared_gains = true;

  std::size_t depth() const { return layers.size(); }
  /// Throws invalid_argument when masks do not chain or gains disagree.
  void validate(Index input_dim) const;
};

/// Flat-time delay recursion
///   s(t) = f(a * s(t - D) + b * (M u(floor(t/N)))_{t mod N}),  t = 0 .. T*N-1
/// with s(-D .. -1) taken from `init` (zeros when empty).
StateMatrix delay_reservoir_run(const Matrix& inputs, const Mask& input_mask,
                                const DelayReservoirParams& params,
                                std::span<const double> init = {});

/// The last `delay_steps` values of the flat-time sequence after a run. Feeding
/// this back as `init` continues the loop across sequences.
Vector delay_buffer_tail(const StateMatrix& states, std::span<const double> init,
                         Index delay_steps);

/// Literal two-branch time-multiplexed update with a fixed sine nonlinearity.
/// x_0 reads x_{N-1} two steps back, x_i reads x_{i-1} one step back. `init`
/// has N+1 entries laid out like the flat-time buffer. Kept as an oracle for
/// delay_reservoir_run with delay_steps = N + 1.
StateMatrix eq6_reference_run(const Matrix& inputs, const Mask& input_mask,
                              double feedback_gain, double input_gain,
                              std::span<const double> init = {});

/// Conventional echo state recursion x(n+1) = f(W x(n) + W_in u(n+1)).
StateMatrix esn_run(const Matrix& inputs, const Matrix& reservoir,
                    const Matrix& input_weights, Nonlinearity f,
                    std::span<const double> init = {});

/// Layer 1 is driven by the masked input, layer l >= 2 by the full state
/// sequence of layer l-1 through interlayer_masks[l-2]. Each layer starts
/// from `inits[l]` when supplied, zeros otherwise.
std::vector<StateMatrix> deep_run(const Matrix& inputs, const DeepConfig& config,
                                  const std::vector<Vector>& inits = {});

/// Column-wise concatenation in layer order.
StateMatrix concat_states(const std::vector<StateMatrix>& per_layer);

/// Physical loop delay expressed in node-update steps.
double physical_delay_to_steps(double clock_hz, double delay_s, int samples_per_node);

}  // namespace drc
