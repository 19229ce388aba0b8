#include <doctest.h>

#include <cmath>
#include <limits>

#include "drc/dataset.hpp"
#include "drc/error.hpp"
#include "drc/reservoir.hpp"
#include "test_support.hpp"

using namespace drc;
using drc::test::max_abs_diff;
using drc::test::random_matrix;

namespace {

// Stacked delay recursion written against an explicit history array instead
// of a ring buffer; shares no code with the library.
std::vector<Matrix> brute_force_stack(const Matrix& inputs, const std::vector<Matrix>& masks,
                                      const std::vector<Index>& nodes, const std::vector<Index>& delays,
                                      double a, double b) {
  std::vector<Matrix> out;
  Matrix drive = inputs;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const Index n_nodes = nodes[l], d = delays[l], steps = drive.rows();
    std::vector<double> hist(static_cast<std::size_t>(d + steps * n_nodes), 0.0);
    Matrix states(steps, n_nodes);
    for (Index t = 0; t < steps * n_nodes; ++t) {
      const Index n = t / n_nodes, i = t % n_nodes;
      double m = 0.0;
      for (Index k = 0; k < drive.cols(); ++k) m += masks[l](i, k) * drive(n, k);
      const double s = std::sin(a * hist[static_cast<std::size_t>(t)] + b * m);
      hist[static_cast<std::size_t>(t + d)] = s;
      states(n, i) = s;
    }
    out.push_back(states);
    drive = states;
  }
  return out;
}

}  // namespace

TEST_SUITE("mask") {
  TEST_CASE("single entry lies in range") {
    for (std::int64_t seed : {0, 1, 42, -7}) {
      const Mask m = generate_uniform_mask(1, 1, seed);
      CHECK(m.values(0, 0) >= -1.0);
      CHECK(m.values(0, 0) <= 1.0);
    }
  }

  TEST_CASE("regeneration is bit-identical") {
    const Mask a = generate_uniform_mask(3, 2, 99);
    const Mask b = generate_uniform_mask(3, 2, 99);
    CHECK(a.values == b.values);
    CHECK(generate_uniform_mask(3, 2, 100).values != a.values);
  }

  TEST_CASE("moments and histogram of a large mask match Uniform(-1, 1)") {
    const Mask m = generate_uniform_mask(1000, 1000, 12345);
    const double n = static_cast<double>(m.values.size());
    const double mean = m.values.mean();
    const double var = (m.values.array() - mean).square().sum() / (n - 1.0);
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0 / 3.0) < 0.02);

    // 20 equal bins; each expects n/20 hits with binomial sd ~218.
    std::vector<double> bins(20, 0.0);
    Index outside = 0;
    for (Index i = 0; i < m.values.size(); ++i) {
      const double v = m.values.data()[i];
      outside += v < -1.0 || v > 1.0;
      bins[std::min<std::size_t>(19, static_cast<std::size_t>((v + 1.0) * 10.0))] += 1.0;
    }
    CHECK(outside == 0);
    for (double c : bins) CHECK(std::abs(c - n / 20.0) < 1200.0);
    // Histogram moments agree with the direct ones.
    double hist_mean = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) hist_mean += bins[b] * (-0.95 + 0.1 * static_cast<double>(b));
    CHECK(std::abs(hist_mean / n - mean) < 0.01);
  }

  TEST_CASE("nonpositive dimensions are rejected") {
    CHECK_THROWS_AS(generate_uniform_mask(0, 3, 1), Error);
    CHECK_THROWS_AS(generate_uniform_mask(3, -1, 1), Error);
  }
}

TEST_SUITE("delay reservoir") {
  TEST_CASE("zero gains give zero states") {
    const Matrix u = random_matrix(7, 3, 1);
    const Mask m = generate_uniform_mask(5, 3, 2);
    const auto s = delay_reservoir_run(u, m, {5, 6, 0.0, 0.0, Nonlinearity::sine});
    CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("zero input gain from a zero buffer stays at the fixed point") {
    const Matrix u = random_matrix(9, 2, 3);
    const Mask m = generate_uniform_mask(4, 2, 4);
    for (double a : {0.3, 0.9, 1.5}) {
      const auto s = delay_reservoir_run(u, m, {4, 7, a, 0.0, Nonlinearity::sine});
      CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("hand-evaluated single step") {
    Matrix u(1, 1);
    u << 1.0;
    Mask m{Matrix(3, 1), 0};
    m.values << 1.0, 0.5, -0.5;
    const auto s = delay_reservoir_run(u, m, {3, 4, 0.0, 1.0, Nonlinearity::sine});
    CHECK(s.values(0, 0) == std::sin(1.0));
    CHECK(s.values(0, 1) == std::sin(0.5));
    CHECK(s.values(0, 2) == std::sin(-0.5));
  }

  TEST_CASE("hand-evaluated feedback path with delay 2 on two nodes") {
    // s(t) = sin(a s(t-2) + b m_{t mod 2} u(t/2)); two timesteps.
    Matrix u(2, 1);
    u << 1.0, -1.0;
    Mask m{Matrix(2, 1), 0};
    m.values << 0.4, -0.2;
    const double a = 0.7, b = 1.1;
    const auto s = delay_reservoir_run(u, m, {2, 2, a, b, Nonlinearity::sine});
    const double s0 = std::sin(b * 0.4), s1 = std::sin(b * -0.2);
    CHECK(s.values(0, 0) == s0);
    CHECK(s.values(0, 1) == s1);
    CHECK(s.values(1, 0) == std::sin(a * s0 + b * -0.4));
    CHECK(s.values(1, 1) == std::sin(a * s1 + b * 0.2));
  }

  TEST_CASE("delay N+1 reproduces the two-branch reference exactly") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nd(1, 8), td(1, 10), kd(1, 4);
    std::uniform_real_distribution<double> gain(0.0, 1.2);
    for (int trial = 0; trial < 200; ++trial) {
      const Index n = nd(rng), t = td(rng), k = kd(rng);
      const Matrix u = random_matrix(t, k, rng());
      const Mask m = generate_uniform_mask(n, k, static_cast<std::int64_t>(rng()));
      const double a = gain(rng), b = gain(rng);
      const Matrix init = random_matrix(n + 1, 1, rng());
      std::span<const double> init_span(init.data(), static_cast<std::size_t>(n + 1));
      const auto flat = delay_reservoir_run(u, m, {n, n + 1, a, b, Nonlinearity::sine}, init_span);
      const auto ref = eq6_reference_run(u, m, a, b, init_span);
      REQUIRE(flat.values == ref.values);
    }
  }

  TEST_CASE("reference run without feedback matches any delay") {
    const Matrix u = random_matrix(6, 2, 11);
    const Mask m = generate_uniform_mask(5, 2, 12);
    const auto ref = eq6_reference_run(u, m, 0.0, 0.8);
    for (Index d : {1, 3, 6, 17}) CHECK(delay_reservoir_run(u, m, {5, d, 0.0, 0.8, Nonlinearity::sine}).values == ref.values);
  }

  TEST_CASE("N=2, T=3 reference equivalence and zero input") {
    const Matrix u = random_matrix(3, 1, 5);
    const Mask m = generate_uniform_mask(2, 1, 6);
    CHECK(eq6_reference_run(u, m, 0.9, 0.7).values ==
          delay_reservoir_run(u, m, {2, 3, 0.9, 0.7, Nonlinearity::sine}).values);
    CHECK(eq6_reference_run(Matrix::Zero(3, 1), m, 0.9, 0.7).values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("states stay in [-1, 1] with sine for large gains") {
    const Matrix u = random_matrix(30, 3, 7, -50.0, 50.0);
    const Mask m = generate_uniform_mask(10, 3, 8);
    const auto s = delay_reservoir_run(u, m, {10, 13, 5.0, 9.0, Nonlinearity::sine});
    CHECK(s.values.cwiseAbs().maxCoeff() <= 1.0);
  }

  TEST_CASE("causality: future inputs never change past states") {
    const Matrix u = random_matrix(12, 2, 21);
    const Mask m = generate_uniform_mask(6, 2, 22);
    const DelayReservoirParams p{6, 9, 0.8, 0.9, Nonlinearity::sine};
    const auto base = delay_reservoir_run(u, m, p);
    for (Index cut = 0; cut < 11; ++cut) {
      Matrix v = u;
      v.bottomRows(u.rows() - cut - 1).setZero();
      const auto pert = delay_reservoir_run(v, m, p);
      CHECK(pert.values.topRows(cut + 1) == base.values.topRows(cut + 1));
    }
  }

  TEST_CASE("fading memory: different initial buffers converge") {
    const Matrix u = random_matrix(200, 3, 31);
    for (double a : {0.5, 0.9}) {
      const Mask m = generate_uniform_mask(20, 3, 32);
      const DelayReservoirParams p{20, 21, a, 0.6, Nonlinearity::sine};
      const Matrix i1 = random_matrix(21, 1, 33), i2 = random_matrix(21, 1, 34);
      const auto s1 = delay_reservoir_run(u, m, p, {i1.data(), 21});
      const auto s2 = delay_reservoir_run(u, m, p, {i2.data(), 21});
      CHECK(max_abs_diff(s1.values.bottomRows(50), s2.values.bottomRows(50)) < 1e-6);
    }
  }

  TEST_CASE("buffer tail continues a run seamlessly") {
    const Matrix u = random_matrix(10, 2, 41);
    const Mask m = generate_uniform_mask(4, 2, 42);
    for (Index d : {2, 5, 13, 50}) {
      const DelayReservoirParams p{4, d, 0.7, 0.9, Nonlinearity::sine};
      const auto whole = delay_reservoir_run(u, m, p);
      const auto first = delay_reservoir_run(u.topRows(3), m, p);
      const Vector tail = delay_buffer_tail(first, {}, d);
      const auto second = delay_reservoir_run(u.bottomRows(7), m, p, {tail.data(), static_cast<std::size_t>(d)});
      CHECK(second.values == whole.values.bottomRows(7));
    }
  }

  TEST_CASE("dimension mismatches are invalid arguments") {
    const Matrix u = random_matrix(4, 3, 1);
    const Mask m = generate_uniform_mask(5, 2, 2);
    CHECK_THROWS_AS(delay_reservoir_run(u, m, {5, 6, 0.5, 0.5, Nonlinearity::sine}), Error);
    const Mask ok = generate_uniform_mask(5, 3, 2);
    CHECK_THROWS_AS(delay_reservoir_run(u, ok, {4, 6, 0.5, 0.5, Nonlinearity::sine}), Error);
    const std::vector<double> short_init(3, 0.0);
    CHECK_THROWS_AS(delay_reservoir_run(u, ok, {5, 6, 0.5, 0.5, Nonlinearity::sine}, short_init), Error);
    CHECK_THROWS_AS(eq6_reference_run(u, m, 0.5, 0.5), Error);
  }
}

TEST_SUITE("esn") {
  TEST_CASE("zero weights give f(0)") {
    const Matrix u = random_matrix(4, 2, 1);
    CHECK(esn_run(u, Matrix::Zero(3, 3), Matrix::Zero(3, 2), Nonlinearity::tanh).values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("scalar tanh step") {
    Matrix u(1, 1);
    u << 0.5;
    const auto s = esn_run(u, Matrix::Zero(1, 1), Matrix::Ones(1, 1), Nonlinearity::tanh);
    CHECK(s.values(0, 0) == doctest::Approx(0.4621171572600098).epsilon(1e-12));
  }

  TEST_CASE("cyclic-shift reservoir matches the interior delay branch on the first step") {
    const Index n = 6;
    const double a = 0.8, b = 0.6;
    const Matrix u = random_matrix(1, 1, 9);
    const Mask m = generate_uniform_mask(n, 1, 10);
    Matrix shift = Matrix::Zero(n, n);
    for (Index i = 1; i < n; ++i) shift(i, i - 1) = a;
    const Matrix init = random_matrix(n + 1, 1, 11);
    const Vector x_prev = init.col(0).tail(n);
    const auto esn = esn_run(u, shift, b * m.values, Nonlinearity::sine, {x_prev.data(), static_cast<std::size_t>(n)});
    const auto ref = eq6_reference_run(u, m, a, b, {init.data(), static_cast<std::size_t>(n + 1)});
    for (Index i = 1; i < n; ++i) CHECK(std::abs(esn.values(0, i) - ref.values(0, i)) < 1e-14);
  }

  TEST_CASE("shape errors") {
    const Matrix u = random_matrix(2, 2, 1);
    CHECK_THROWS_AS(esn_run(u, Matrix::Zero(3, 2), Matrix::Zero(3, 2), Nonlinearity::sine), Error);
    CHECK_THROWS_AS(esn_run(u, Matrix::Zero(3, 3), Matrix::Zero(3, 1), Nonlinearity::sine), Error);
  }
}

TEST_SUITE("deep") {
  DeepConfig stack(const std::vector<Index>& nodes, Index k, double a, double b, std::int64_t seed) {
    DeepConfig c;
    for (std::size_t l = 0; l < nodes.size(); ++l) {
      c.layers.push_back({nodes[l], nodes[l] + 1 + static_cast<Index>(l), a, b, Nonlinearity::sine});
      if (l == 0) c.input_mask = generate_uniform_mask(nodes[0], k, seed);
      else c.interlayer_masks.push_back(generate_uniform_mask(nodes[l], nodes[l - 1], seed + static_cast<std::int64_t>(l)));
    }
    return c;
  }

  TEST_CASE("single layer is bit-identical to one delay run") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
      const Index n = 1 + static_cast<Index>(rng() % 12), k = 1 + static_cast<Index>(rng() % 5);
      const Matrix u = random_matrix(1 + static_cast<Index>(rng() % 15), k, rng());
      const DeepConfig c = stack({n}, k, 0.9, 0.4, static_cast<std::int64_t>(rng()));
      const auto layers = deep_run(u, c);
      REQUIRE(layers.size() == 1);
      CHECK(layers[0].values == delay_reservoir_run(u, c.input_mask, c.layers[0]).values);
    }
  }

  TEST_CASE("severed interlayer drive gives a silent second layer") {
    DeepConfig c = stack({5, 5}, 2, 0.9, 0.8, 3);
    c.shared_gains = false;
    c.layers[1].input_gain = 0.0;
    const auto layers = deep_run(random_matrix(8, 2, 4), c);
    CHECK(layers[0].values.cwiseAbs().maxCoeff() > 0.0);
    CHECK(layers[1].values.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("three layers agree with a brute-force stacked recursion") {
    const DeepConfig c = stack({4, 4, 4}, 3, 0.85, 0.7, 19);
    const Matrix u = random_matrix(5, 3, 20);
    const auto layers = deep_run(u, c);
    std::vector<Matrix> masks{c.input_mask.values, c.interlayer_masks[0].values, c.interlayer_masks[1].values};
    const auto oracle = brute_force_stack(u, masks, {4, 4, 4}, {5, 6, 7}, 0.85, 0.7);
    for (std::size_t l = 0; l < 3; ++l) CHECK(max_abs_diff(layers[l].values, oracle[l]) < 1e-12);
  }

  TEST_CASE("shared gains are enforced and masks must chain") {
    DeepConfig c = stack({4, 3}, 2, 0.8, 0.5, 1);
    c.layers[1].feedback_gain = 0.1;
    CHECK_THROWS_AS(deep_run(random_matrix(3, 2, 1), c), Error);
    DeepConfig bad = stack({4, 3}, 2, 0.8, 0.5, 1);
    bad.interlayer_masks[0] = generate_uniform_mask(3, 5, 2);
    CHECK_THROWS_AS(deep_run(random_matrix(3, 2, 1), bad), Error);
    CHECK_THROWS_AS(deep_run(random_matrix(3, 4, 1), stack({4, 3}, 2, 0.8, 0.5, 1)), Error);
  }

  TEST_CASE("concatenation layout") {
    StateMatrix a{Matrix(2, 2), 0}, b{Matrix(2, 2), 1};
    a.values << 1, 2, 3, 4;
    b.values << 5, 6, 7, 8;
    const auto both = concat_states({a, b});
    Matrix expect(2, 4);
    expect << 1, 2, 5, 6, 3, 4, 7, 8;
    CHECK(both.values == expect);
    CHECK(concat_states({a}).values == a.values);
    std::vector<StateMatrix> six(6, StateMatrix{Matrix::Zero(3, 100), std::nullopt});
    CHECK(concat_states(six).width() == 600);
    CHECK_THROWS_AS(concat_states({a, StateMatrix{Matrix(3, 2), 1}}), Error);
  }
}

TEST_SUITE("noise") {
  TEST_CASE("infinite SNR leaves the sequence untouched") {
    FeatureSequence s{random_matrix(10, 3, 1), 0, "x"};
    CHECK(inject_noise(s, std::numeric_limits<double>::infinity(), 5).values == s.values);
  }

  TEST_CASE("3 dB noise power on a unit-power signal") {
    FeatureSequence s{Matrix::Ones(100000, 1), 0, "x"};
    const auto noisy = inject_noise(s, 3.0, 17);
    const double power = (noisy.values - s.values).squaredNorm() / 1e5;
    CHECK(std::abs(power - std::pow(10.0, -0.3)) < 0.05 * std::pow(10.0, -0.3));
    CHECK(inject_noise(s, 3.0, 17).values == noisy.values);
  }

  TEST_CASE("empty sequence is rejected") {
    FeatureSequence s{Matrix(0, 3), 0, "x"};
    CHECK_THROWS_AS(inject_noise(s, 3.0, 1), Error);
  }
}

TEST_SUITE("physical delay") {
  TEST_CASE("measured loop") {
    CHECK(physical_delay_to_steps(205e6, 7.94e-6, 8) == doctest::Approx(203.4625).epsilon(1e-12));
  }

  TEST_CASE("synchronous loop returns N") {
    const double f = 200e6;
    const int s = 8;
    for (int n : {50, 100, 200}) CHECK(physical_delay_to_steps(f, n / f * s, s) == doctest::Approx(n).epsilon(1e-14));
  }

  TEST_CASE("linear in the clock") {
    CHECK(physical_delay_to_steps(410e6, 7.94e-6, 8) == doctest::Approx(2.0 * physical_delay_to_steps(205e6, 7.94e-6, 8)));
    CHECK_THROWS_AS(physical_delay_to_steps(0.0, 1e-6, 8), Error);
    CHECK_THROWS_AS(physical_delay_to_steps(1e6, 1e-6, 0), Error);
  }
}
