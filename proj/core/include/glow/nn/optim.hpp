#pragma once

#include <filesystem>
#include <vector>

#include "glow/nn/tape.hpp"

namespace glow::nn {

// Adam with decoupled weight decay. State is keyed by position in `params`,
// so the parameter list must stay stable for the optimizer's lifetime.
class AdamW {
 public:
  explicit AdamW(std::vector<Parameter*> params, double lr = 1e-4, double weight_decay = 0.01,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step();
  void zero_grad();
  double learning_rate() const { return lr_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_, v_;
  double lr_, wd_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Raw little-endian double blobs, one named tensor after another. Loading is
// by name into pre-shaped parameters, so a reload is bit-identical.
void save_parameters(const std::vector<const Parameter*>& params, const std::filesystem::path& path);
void load_parameters(const std::vector<Parameter*>& params, const std::filesystem::path& path);

}  // namespace glow::nn
