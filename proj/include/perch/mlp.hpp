#pragma once

#include <Eigen/Dense>
#include <vector>

#include "perch/rng.hpp"

namespace perch::rl {

/// Architecture of a multilayer perceptron: tanh hidden layers, linear
/// output scaled by a fixed constant. The scale lets a value head emit
/// targets of large magnitude while the trainable parameters stay O(1).
struct MlpSpec {
    int n_in = 0;
    std::vector<int> hidden{128, 128, 32};
    int n_out = 0;
    double output_scale = 1.0;

    std::vector<int> dims() const;
    int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
    long param_count() const;
    bool operator==(const MlpSpec&) const = default;
};

/// Dense feed-forward network over a single flat parameter vector.
/// Weights and biases are Eigen maps into that vector, which keeps
/// optimizer updates, checkpointing, and finite-difference probes
/// trivial.
class MlpNet {
  public:
    explicit MlpNet(MlpSpec spec);

    /// Glorot-uniform hidden layers; the output layer starts at zero so a
    /// fresh net emits exactly zero.
    static MlpNet glorot(MlpSpec spec, RngStream& rng);

    const MlpSpec& spec() const { return spec_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

    /// Per-layer inputs recorded during a batched forward pass.
    struct Tape {
        std::vector<Eigen::MatrixXd> layer_input;
    };

    /// Inputs as columns; returns outputs as columns. Pass a tape to
    /// enable a later backward pass.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& input, Tape* tape = nullptr) const;

    /// Accumulates dLoss/dParam into grad (size param_count) given
    /// dLoss/dOutput for the batch recorded on the tape.
    void backward_batch(const Tape& tape, const Eigen::MatrixXd& dloss_dout,
                        std::vector<double>& grad) const;

    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);

  private:
    MlpSpec spec_;
    std::vector<int> dims_;
    std::vector<long> w_offset_;
    std::vector<long> b_offset_;
    std::vector<double> params_;
};

/// Plain stochastic gradient descent with heavy-ball momentum.
class SgdMomentum {
  public:
    SgdMomentum(double lr, double momentum, long param_count)
        : lr_(lr), momentum_(momentum), velocity_(param_count, 0.0) {}

    void step(MlpNet& net, const std::vector<double>& grad);

    double lr() const { return lr_; }

  private:
    double lr_;
    double momentum_;
    std::vector<double> velocity_;
};

}  // namespace perch::rl
