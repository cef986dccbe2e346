#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshadv/errors.hpp"

namespace meshadv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Probability distribution over the D dataset classes.
using PredictionVector = VectorXd;

// Throws DimensionMismatch unless entries are >= 0 and sum to 1 within 1e-6.
void validate_prediction(const PredictionVector& p);

enum class LossKind { KLD, CrossEntropy };

/// Network dimensions. The lift output, recurrent input, recurrent hidden and
/// classifier input widths are all `hidden`.
struct NetSpec {
  int input_dim = 3;
  int lift1 = 128;
  int hidden = 256;
  int rnn_layers = 2;
  int classes = 0;
  bool delta_features = false;  // feed per-step deltas instead of raw coords

  bool operator==(const NetSpec&) const = default;
};

struct Affine {
  MatrixXd W;
  VectorXd b;
};

/// One gated recurrent layer: update gate z, reset gate r, candidate c.
struct GruLayer {
  MatrixXd Wz, Uz, Wr, Ur, Wc, Uc;
  VectorXd bz, br, bc;
};

struct ImitatorParams {
  NetSpec spec;
  Affine fc1, fc2, fc_out;
  std::vector<GruLayer> rnn;
};

// Glorot-uniform weights, zero biases; deterministic for a fixed seed.
ImitatorParams init_params(const NetSpec& spec, std::uint64_t seed);
ImitatorParams zeros_like(const ImitatorParams& params);

// Visits every tensor with f(name, Eigen::Ref<MatrixXd>); vectors appear as
// single-column matrices. Order is fixed and matches the checkpoint layout.
template <typename P, typename F>
  requires requires(P& p) { p.fc1; p.rnn; }
void visit_tensors(P&& params, F&& f) {
  f("fc1.W", params.fc1.W);
  f("fc1.b", params.fc1.b);
  f("fc2.W", params.fc2.W);
  f("fc2.b", params.fc2.b);
  for (std::size_t l = 0; l < params.rnn.size(); ++l) {
    const std::string p = "rnn" + std::to_string(l) + ".";
    auto& g = params.rnn[l];
    f(p + "Wz", g.Wz);
    f(p + "Uz", g.Uz);
    f(p + "bz", g.bz);
    f(p + "Wr", g.Wr);
    f(p + "Ur", g.Ur);
    f(p + "br", g.br);
    f(p + "Wc", g.Wc);
    f(p + "Uc", g.Uc);
    f(p + "bc", g.bc);
  }
  f("fc_out.W", params.fc_out.W);
  f("fc_out.b", params.fc_out.b);
}

/// Every intermediate activation of one forward pass; rows index walk steps.
struct ForwardTrace {
  MatrixXd inputs;   // L x input_dim, the features actually fed
  MatrixXd a1, h1;   // pre-activation / ReLU output of the first lift layer
  MatrixXd a2, h2;   // second lift layer
  struct LayerTrace {
    MatrixXd z, r, c, h;  // L x hidden each
  };
  std::vector<LayerTrace> layers;
  VectorXd logits;
  PredictionVector prediction;

  int length() const { return static_cast<int>(inputs.rows()); }
};

// Runs the lift -> recurrent stack -> classifier on an L x 3 coordinate
// sequence. Hidden states start at zero; prediction = softmax of the final
// step's top-layer state through fc_out.
ForwardTrace forward(const ImitatorParams& params, const Eigen::MatrixX3d& coords);

// Sum over classes of ref_i * ln(ref_i / pred_i), in nats. pred is clamped to
// >= 1e-12 before the log; ref entries of 0 contribute 0.
double kld(const PredictionVector& ref, const PredictionVector& pred);

double loss_value(LossKind kind, const PredictionVector& ref, const PredictionVector& pred);

PredictionVector one_hot(int label, int classes);

int argmax(const PredictionVector& p);

struct Gradients {
  ImitatorParams params;        // same shapes as the network parameters
  Eigen::MatrixX3d wrt_coords;  // L x 3, derivative wrt the input coordinates
};

// Exact reverse-mode derivatives of the scalar loss wrt every parameter and
// every input coordinate. `ref` is the target distribution (one-hot for
// cross-entropy). `trace` must come from forward() on the same params/coords.
Gradients backward(const ImitatorParams& params, const Eigen::MatrixX3d& coords,
                   const ForwardTrace& trace, const PredictionVector& ref);

struct GradCheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  int checked = 0;
  int violations = 0;  // entries outside both the absolute and relative bands
  bool pass = false;
  std::string worst;  // violating entry with the largest relative error
};

// Central-difference comparison (step 1e-4) of backward() against the loss
// evaluated through forward(), over all input coordinates and a random
// subsample of at least `min_samples` parameters.
GradCheckReport grad_check(const ImitatorParams& params, const Eigen::MatrixX3d& coords,
                           LossKind kind, const PredictionVector& ref, double rel_tolerance,
                           std::uint64_t seed, int min_samples = 200);

}  // namespace meshadv
