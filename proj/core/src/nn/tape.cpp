#include "glow/nn/tape.hpp"

#include <cmath>
#include <numbers>

#include "glow/error.hpp"

namespace glow::nn {

void xavier_uniform(Parameter& p, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index r = 0; r < p.value.rows(); ++r)
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = dist(rng);
  p.grad.setZero();
}

Var Tape::push(Matrix value, std::function<void(Tape&)> back, Parameter* p) {
  Node n;
  n.grad = Matrix::Zero(value.rows(), value.cols());
  n.value = std::move(value);
  n.back = std::move(back);
  n.parameter = p;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Matrix v) { return push(std::move(v)); }

Var Tape::scalar_input(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return push(std::move(m));
}

Var Tape::param(Parameter& p) { return push(p.value, nullptr, &p); }

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows())
    throw ConfigError("matmul shape mismatch: " + std::to_string(value(a).cols()) + " vs " +
                      std::to_string(value(b).rows()));
  Matrix out = value(a) * value(b);
  int ai = a.i, bi = b.i;
  return push(std::move(out), [ai, bi](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai) += g * t.val_ref(bi).transpose();
    t.grad_ref(bi) += t.val_ref(ai).transpose() * g;
  });
}

Var Tape::transpose(Var a) {
  int ai = a.i;
  return push(value(a).transpose(), [ai](Tape& t) {
    t.grad_ref(ai) += t.grad_ref(t.cursor_).transpose();
  });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ConfigError("add shape mismatch");
  int ai = a.i, bi = b.i;
  return push(value(a) + value(b), [ai, bi](Tape& t) {
    t.grad_ref(ai) += t.grad_ref(t.cursor_);
    t.grad_ref(bi) += t.grad_ref(t.cursor_);
  });
}

Var Tape::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ConfigError("sub shape mismatch");
  int ai = a.i, bi = b.i;
  return push(value(a) - value(b), [ai, bi](Tape& t) {
    t.grad_ref(ai) += t.grad_ref(t.cursor_);
    t.grad_ref(bi) -= t.grad_ref(t.cursor_);
  });
}

Var Tape::add_rowvec(Var a, Var rowv) {
  if (value(rowv).rows() != 1 || value(rowv).cols() != value(a).cols())
    throw ConfigError("add_rowvec: row must be 1x" + std::to_string(value(a).cols()));
  Matrix out = value(a);
  out.rowwise() += value(rowv).row(0);
  int ai = a.i, ri = rowv.i;
  return push(std::move(out), [ai, ri](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai) += g;
    t.grad_ref(ri) += g.colwise().sum();
  });
}

Var Tape::add_scalar(Var a, Var s) {
  if (value(s).size() != 1) throw ConfigError("add_scalar: s must be 1x1");
  Matrix out = value(a).array() + value(s)(0, 0);
  int ai = a.i, si = s.i;
  return push(std::move(out), [ai, si](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai) += g;
    t.grad_ref(si)(0, 0) += g.sum();
  });
}

Var Tape::cmul(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ConfigError("cmul shape mismatch");
  int ai = a.i, bi = b.i;
  return push(value(a).cwiseProduct(value(b)), [ai, bi](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai) += g.cwiseProduct(t.val_ref(bi));
    t.grad_ref(bi) += g.cwiseProduct(t.val_ref(ai));
  });
}

Var Tape::cdiv(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ConfigError("cdiv shape mismatch");
  int ai = a.i, bi = b.i;
  return push(value(a).cwiseQuotient(value(b)), [ai, bi](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    const Matrix& bv = t.val_ref(bi);
    t.grad_ref(ai) += g.cwiseQuotient(bv);
    t.grad_ref(bi) -= g.cwiseProduct(t.val_ref(ai)).cwiseQuotient(bv.cwiseProduct(bv));
  });
}

Var Tape::scale(Var a, double s) {
  int ai = a.i;
  return push(value(a) * s, [ai, s](Tape& t) { t.grad_ref(ai) += t.grad_ref(t.cursor_) * s; });
}

Var Tape::rows(Var a, std::vector<int> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), value(a).cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = value(a).row(idx[r]);
  int ai = a.i;
  return push(std::move(out), [ai, idx = std::move(idx)](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    for (std::size_t r = 0; r < idx.size(); ++r)
      t.grad_ref(ai).row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var Tape::cols(Var a, int start, int len) {
  Matrix out = value(a).middleCols(start, len);
  int ai = a.i;
  return push(std::move(out), [ai, start, len](Tape& t) {
    t.grad_ref(ai).middleCols(start, len) += t.grad_ref(t.cursor_);
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_rows of nothing");
  Eigen::Index total = 0, cols = value(parts[0]).cols();
  for (auto p : parts) {
    if (value(p).cols() != cols) throw ConfigError("concat_rows column mismatch");
    total += value(p).rows();
  }
  Matrix out(total, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<int, std::pair<Eigen::Index, Eigen::Index>>> spans;
  for (auto p : parts) {
    Eigen::Index r = value(p).rows();
    out.middleRows(at, r) = value(p);
    spans.push_back({p.i, {at, r}});
    at += r;
  }
  return push(std::move(out), [spans = std::move(spans)](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    for (const auto& [i, span] : spans) t.grad_ref(i) += g.middleRows(span.first, span.second);
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols of nothing");
  Eigen::Index total = 0, rws = value(parts[0]).rows();
  for (auto p : parts) {
    if (value(p).rows() != rws) throw ConfigError("concat_cols row mismatch");
    total += value(p).cols();
  }
  Matrix out(rws, total);
  Eigen::Index at = 0;
  std::vector<std::pair<int, std::pair<Eigen::Index, Eigen::Index>>> spans;
  for (auto p : parts) {
    Eigen::Index c = value(p).cols();
    out.middleCols(at, c) = value(p);
    spans.push_back({p.i, {at, c}});
    at += c;
  }
  return push(std::move(out), [spans = std::move(spans)](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    for (const auto& [i, span] : spans) t.grad_ref(i) += g.middleCols(span.first, span.second);
  });
}

Var Tape::scatter_add_rows(Var a, std::vector<int> dst, int out_rows) {
  if (static_cast<int>(dst.size()) != value(a).rows())
    throw ConfigError("scatter_add_rows: index count must equal row count");
  Matrix out = Matrix::Zero(out_rows, value(a).cols());
  for (std::size_t r = 0; r < dst.size(); ++r)
    out.row(dst[r]) += value(a).row(static_cast<Eigen::Index>(r));
  int ai = a.i;
  return push(std::move(out), [ai, dst = std::move(dst)](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    for (std::size_t r = 0; r < dst.size(); ++r)
      t.grad_ref(ai).row(static_cast<Eigen::Index>(r)) += g.row(dst[r]);
  });
}

Var Tape::colwise_scale(Var a, Var s) {
  if (value(s).cols() != 1 || value(s).rows() != value(a).rows())
    throw ConfigError("colwise_scale: s must be Rx1");
  Matrix out = value(a).array().colwise() * value(s).col(0).array();
  int ai = a.i, si = s.i;
  return push(std::move(out), [ai, si](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai) += g.array().colwise() * t.val_ref(si).col(0).array();
    t.grad_ref(si).col(0) += g.cwiseProduct(t.val_ref(ai)).rowwise().sum();
  });
}

Var Tape::mean_rows(Var a) {
  const double n = static_cast<double>(value(a).rows());
  Matrix out = value(a).colwise().mean();
  int ai = a.i;
  return push(std::move(out), [ai, n](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    t.grad_ref(ai).rowwise() += (g / n).row(0);
  });
}

Var Tape::sum_all(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_)(0, 0);
  });
}

Var Tape::mean_all(Var a) {
  const double n = static_cast<double>(value(a).size());
  Matrix out(1, 1);
  out(0, 0) = value(a).mean();
  int ai = a.i;
  return push(std::move(out), [ai, n](Tape& t) {
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_)(0, 0) / n;
  });
}

Var Tape::relu(Var a) {
  int ai = a.i;
  return push(value(a).cwiseMax(0.0), [ai](Tape& t) {
    const Matrix& v = t.val_ref(ai);
    t.grad_ref(ai).array() +=
        t.grad_ref(t.cursor_).array() * (v.array() > 0.0).cast<double>();
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  Matrix out = value(a).unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  int ai = a.i;
  return push(std::move(out), [ai, slope](Tape& t) {
    const Matrix& v = t.val_ref(ai);
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_).array() *
                              v.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; }).array();
  });
}

Var Tape::elu(Var a) {
  Matrix out = value(a).unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& v = t.val_ref(ai);
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_).array() *
                              v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : std::exp(x); }).array();
  });
}

Var Tape::gelu(Var a) {
  auto phi = [](double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); };
  Matrix out = value(a).unaryExpr([&](double x) { return x * phi(x); });
  int ai = a.i;
  return push(std::move(out), [ai, phi](Tape& t) {
    const Matrix& v = t.val_ref(ai);
    t.grad_ref(ai).array() +=
        t.grad_ref(t.cursor_).array() *
        v.unaryExpr([&](double x) {
           const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
           return phi(x) + x * pdf;
         }).array();
  });
}

Var Tape::tanh_(Var a) {
  Matrix out = value(a).array().tanh();
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& y = t.val_ref(t.cursor_);
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_).array() * (1.0 - y.array().square());
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = value(a).unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& y = t.val_ref(t.cursor_);
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_).array() * y.array() * (1.0 - y.array());
  });
}

Var Tape::softplus(Var a) {
  Matrix out = value(a).unaryExpr(
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& v = t.val_ref(ai);
    t.grad_ref(ai).array() +=
        t.grad_ref(t.cursor_).array() *
        v.unaryExpr([](double x) {
           return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
         }).array();
  });
}

Var Tape::sqrt_(Var a) {
  Matrix out = value(a).array().sqrt();
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& y = t.val_ref(t.cursor_);
    t.grad_ref(ai).array() += t.grad_ref(t.cursor_).array() / (2.0 * y.array());
  });
}

Var Tape::softmax_rows(Var a) {
  Matrix out = value(a);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  int ai = a.i;
  return push(std::move(out), [ai](Tape& t) {
    const Matrix& y = t.val_ref(t.cursor_);
    const Matrix& g = t.grad_ref(t.cursor_);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      double dot = y.row(r).dot(g.row(r));
      t.grad_ref(ai).row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var Tape::segment_softmax(Var scores, std::vector<std::pair<int, int>> segments) {
  if (value(scores).cols() != 1) throw ConfigError("segment_softmax expects an Ex1 column");
  Matrix out = value(scores);
  for (auto [start, len] : segments) {
    double mx = out.col(0).segment(start, len).maxCoeff();
    auto seg = out.col(0).segment(start, len);
    seg = (seg.array() - mx).exp();
    seg /= seg.sum();
  }
  int si = scores.i;
  return push(std::move(out), [si, segments = std::move(segments)](Tape& t) {
    const Matrix& y = t.val_ref(t.cursor_);
    const Matrix& g = t.grad_ref(t.cursor_);
    for (auto [start, len] : segments) {
      double dot = y.col(0).segment(start, len).dot(g.col(0).segment(start, len));
      t.grad_ref(si).col(0).segment(start, len).array() +=
          y.col(0).segment(start, len).array() * (g.col(0).segment(start, len).array() - dot);
    }
  });
}

Var Tape::layer_norm(Var a, Var gain, Var bias, double eps) {
  const Matrix& x = value(a);
  const Eigen::Index C = x.cols();
  if (value(gain).rows() != 1 || value(gain).cols() != C || value(bias).cols() != C)
    throw ConfigError("layer_norm: gain/bias must be 1x" + std::to_string(C));
  Matrix xhat(x.rows(), C), sigma(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mu = x.row(r).mean();
    double var = (x.row(r).array() - mu).square().mean();
    sigma(r, 0) = std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) / sigma(r, 0);
  }
  Matrix out = (xhat.array().rowwise() * value(gain).row(0).array()).rowwise() +
               value(bias).row(0).array();
  int ai = a.i, gi = gain.i, bi = bias.i;
  return push(std::move(out), [ai, gi, bi, xhat = std::move(xhat),
                               sigma = std::move(sigma)](Tape& t) {
    const Matrix& g = t.grad_ref(t.cursor_);
    const Eigen::Index C = g.cols();
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(t.val_ref(gi).row(0));
      double m1 = dxhat.mean();
      double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
      t.grad_ref(ai).row(r) +=
          ((dxhat.array() - m1 - xhat.row(r).array() * m2) / sigma(r, 0)).matrix();
      t.grad_ref(gi).row(0) += g.row(r).cwiseProduct(xhat.row(r));
      t.grad_ref(bi).row(0) += g.row(r);
    }
    (void)C;
  });
}

Var Tape::bce_with_logits_mean(Var logits, Matrix targets) {
  const Matrix& z = value(logits);
  if (z.rows() != targets.rows() || z.cols() != targets.cols())
    throw ConfigError("bce_with_logits_mean shape mismatch");
  double acc = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      double x = z(r, c);
      acc += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - targets(r, c) * x;
    }
  const double n = static_cast<double>(z.size());
  Matrix out(1, 1);
  out(0, 0) = acc / n;
  int zi = logits.i;
  return push(std::move(out), [zi, targets = std::move(targets), n](Tape& t) {
    double g = t.grad_ref(t.cursor_)(0, 0) / n;
    const Matrix& z = t.val_ref(zi);
    t.grad_ref(zi) += g * (z.unaryExpr([](double x) {
                             return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                             : std::exp(x) / (1.0 + std::exp(x));
                           }) -
                           targets);
  });
}

void Tape::backward(Var root) {
  if (!root.ok() || value(root).size() != 1)
    throw ConfigError("backward root must be a 1x1 value");
  nodes_[root.i].grad(0, 0) = 1.0;
  for (int i = root.i; i >= 0; --i) {
    cursor_ = i;
    if (nodes_[i].back) nodes_[i].back(*this);
    if (nodes_[i].parameter) nodes_[i].parameter->grad += nodes_[i].grad;
  }
}

}  // namespace glow::nn
