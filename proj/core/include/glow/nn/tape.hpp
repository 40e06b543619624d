#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace glow::nn {

using Matrix = Eigen::MatrixXd;

// A named trainable tensor. Gradients accumulate across backward() calls
// until the optimizer consumes them.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

void xavier_uniform(Parameter& p, std::mt19937_64& rng);

// Reverse-mode autodiff over dense matrices. One Tape per forward pass;
// values and adjoints live on the tape, Parameters persist outside it.
class Tape {
 public:
  struct Var {
    int i = -1;
    bool ok() const { return i >= 0; }
  };

  Var input(Matrix v);               // constant leaf
  Var scalar_input(double v);        // 1x1 constant
  Var param(Parameter& p);           // trainable leaf

  const Matrix& value(Var v) const { return nodes_[v.i].value; }
  const Matrix& grad(Var v) const { return nodes_[v.i].grad; }

  // --- linear algebra ---
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);             // same shape
  Var sub(Var a, Var b);
  Var add_rowvec(Var a, Var row);    // row (1xC) broadcast over rows of a
  Var add_scalar(Var a, Var s);      // s (1x1) broadcast everywhere
  Var cmul(Var a, Var b);            // elementwise
  Var cdiv(Var a, Var b);            // elementwise
  Var scale(Var a, double s);

  // --- shape ---
  Var rows(Var a, std::vector<int> idx);             // gather rows
  Var row(Var a, int r) { return rows(a, {r}); }
  Var cols(Var a, int start, int len);               // contiguous column block
  Var concat_rows(const std::vector<Var>& parts);    // equal column counts
  Var concat_cols(const std::vector<Var>& parts);    // equal row counts
  Var scatter_add_rows(Var a, std::vector<int> dst, int out_rows);
  Var colwise_scale(Var a, Var s);                   // s is Rx1

  // --- reductions ---
  Var mean_rows(Var a);              // 1xC
  Var sum_all(Var a);                // 1x1
  Var mean_all(Var a);               // 1x1

  // --- nonlinearities ---
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var elu(Var a);
  Var gelu(Var a);
  Var tanh_(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);
  Var sqrt_(Var a);                  // entries must stay positive
  Var square(Var a) { return cmul(a, a); }

  // --- structured ops ---
  Var softmax_rows(Var a);
  // Softmax within contiguous (start, len) row segments of an Ex1 column.
  Var segment_softmax(Var scores, std::vector<std::pair<int, int>> segments);
  // Per-row normalization with learnable gain/bias (both 1xC).
  Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

  // Mean over all entries of the stable binary cross-entropy
  // softplus(z) - t*z given logits z and targets t in {0,1}.
  Var bce_with_logits_mean(Var logits, Matrix targets);

  // Seeds d(root)=1 and propagates adjoints back to every leaf; parameter
  // leaves accumulate into Parameter::grad. root must be 1x1.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;  // null for leaves
    Parameter* parameter = nullptr;
  };

  Var push(Matrix value, std::function<void(Tape&)> back = nullptr, Parameter* p = nullptr);
  Matrix& grad_ref(int i) { return nodes_[i].grad; }
  const Matrix& val_ref(int i) const { return nodes_[i].value; }

  std::vector<Node> nodes_;
  int cursor_ = -1;  // node whose backward closure is running
};

using Var = Tape::Var;

}  // namespace glow::nn
