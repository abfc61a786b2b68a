#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "pushrl/rng.hpp"

namespace pushrl {

enum class OutputActivation { linear, tanh_bounded };

// Dense feedforward network with rectifier hidden units. Batches are stored
// column-wise; all math is plain Eigen so a forward/backward pass is a pure
// function of the parameters.
struct Mlp {
  std::vector<int> widths;  // input, hidden..., output
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  OutputActivation output = OutputActivation::linear;

  static Mlp make(std::vector<int> widths, OutputActivation out, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output");
    Mlp net;
    net.widths = std::move(widths);
    net.output = out;
    for (size_t l = 0; l + 1 < net.widths.size(); ++l) {
      const int rows = net.widths[l + 1], cols = net.widths[l];
      Eigen::MatrixXd wm(rows, cols);
      const double bound = 1.0 / std::sqrt(double(cols));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) wm(r, c) = rng.uniform(-bound, bound);
      net.w.push_back(std::move(wm));
      net.b.push_back(Eigen::VectorXd::Zero(rows));
    }
    return net;
  }

  int in_dim() const { return widths.front(); }
  int out_dim() const { return widths.back(); }
  int layers() const { return int(w.size()); }

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const {
    if (x.rows() != in_dim()) throw std::invalid_argument("mlp forward: input width mismatch");
    Eigen::MatrixXd a = x;
    for (int l = 0; l < layers(); ++l) {
      Eigen::MatrixXd z = (w[l] * a).colwise() + b[l];
      if (l + 1 < layers())
        a = z.cwiseMax(0.0);
      else
        a = output == OutputActivation::tanh_bounded ? z.array().tanh().matrix() : z;
    }
    return a;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    return forward_batch(x).col(0);
  }
};

struct MlpGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static MlpGrads zeros_like(const Mlp& net) {
    MlpGrads g;
    for (int l = 0; l < net.layers(); ++l) {
      g.w.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
      g.b.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    }
    return g;
  }
};

// Activations recorded by a forward pass, reused by the backward pass.
struct MlpTape {
  std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[L] = output
};

inline Eigen::MatrixXd mlp_forward_tape(const Mlp& net, const Eigen::MatrixXd& x, MlpTape& tape) {
  if (x.rows() != net.in_dim()) throw std::invalid_argument("mlp forward: input width mismatch");
  tape.act.assign(1, x);
  for (int l = 0; l < net.layers(); ++l) {
    Eigen::MatrixXd z = (net.w[l] * tape.act.back()).colwise() + net.b[l];
    if (l + 1 < net.layers())
      tape.act.push_back(z.cwiseMax(0.0));
    else
      tape.act.push_back(net.output == OutputActivation::tanh_bounded ? z.array().tanh().matrix()
                                                                      : std::move(z));
  }
  return tape.act.back();
}

// Reverse mode for sum(output .* upstream): accumulates parameter gradients
// (summed over the batch) and returns the gradient w.r.t. the input.
inline Eigen::MatrixXd mlp_backward(const Mlp& net, const MlpTape& tape,
                                    const Eigen::MatrixXd& upstream, MlpGrads& grads) {
  if (upstream.rows() != net.out_dim() || upstream.cols() != tape.act.back().cols())
    throw std::invalid_argument("mlp backward: upstream shape mismatch");
  Eigen::MatrixXd delta = upstream;
  if (net.output == OutputActivation::tanh_bounded) {
    const auto& y = tape.act.back();
    delta = delta.cwiseProduct((1.0 - y.array().square()).matrix());
  }
  for (int l = net.layers() - 1; l >= 0; --l) {
    grads.w[l].noalias() += delta * tape.act[l].transpose();
    grads.b[l] += delta.rowwise().sum();
    if (l > 0) {
      delta = net.w[l].transpose() * delta;
      // rectifier mask from the recorded post-activation
      delta = delta.cwiseProduct((tape.act[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return net.w[0].transpose() * delta;
}

// Single-sample convenience wrappers.
struct MlpGradResult {
  MlpGrads params;
  Eigen::VectorXd input;
};

inline MlpGradResult mlp_gradients(const Mlp& net, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& upstream) {
  MlpTape tape;
  mlp_forward_tape(net, x, tape);
  MlpGradResult out{MlpGrads::zeros_like(net), {}};
  out.input = mlp_backward(net, tape, upstream, out.params).col(0);
  return out;
}

// Adam with bias correction; beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  MlpGrads m, v;

  explicit Adam(const Mlp& net) : m(MlpGrads::zeros_like(net)), v(MlpGrads::zeros_like(net)) {}

  void step(Mlp& net, const MlpGrads& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, double(t));
    const double c2 = 1.0 - std::pow(beta2, double(t));
    for (int l = 0; l < net.layers(); ++l) {
      m.w[l] = beta1 * m.w[l] + (1.0 - beta1) * g.w[l];
      v.w[l] = beta2 * v.w[l] + (1.0 - beta2) * g.w[l].cwiseProduct(g.w[l]);
      net.w[l] -= lr * (m.w[l] / c1).cwiseQuotient((v.w[l] / c2).cwiseSqrt().array().matrix() +
                                                   Eigen::MatrixXd::Constant(
                                                       g.w[l].rows(), g.w[l].cols(), eps));
      m.b[l] = beta1 * m.b[l] + (1.0 - beta1) * g.b[l];
      v.b[l] = beta2 * v.b[l] + (1.0 - beta2) * g.b[l].cwiseProduct(g.b[l]);
      net.b[l] -= lr * (m.b[l] / c1).cwiseQuotient((v.b[l] / c2).cwiseSqrt() +
                                                   Eigen::VectorXd::Constant(g.b[l].size(), eps));
    }
  }
};

}  // namespace pushrl
