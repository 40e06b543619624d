#include "glow/nn/optim.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "glow/error.hpp"

namespace glow::nn {

AdamW::AdamW(std::vector<Parameter*> params, double lr, double weight_decay, double beta1,
             double beta2, double eps)
    : params_(std::move(params)), lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamW::step() {
  t_++;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i].array() + (1.0 - beta2_) * p.grad.array().square();
    Matrix mhat = m_[i] / bc1;
    Matrix vhat = v_[i] / bc2;
    p.value.array() -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_) + wd_ * p.value.array());
  }
}

void AdamW::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

namespace {

constexpr char kMagic[8] = {'G', 'L', 'O', 'W', 'P', 'R', 'M', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_parameters(const std::vector<const Parameter*>& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write parameter blob " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, params.size());
  for (const auto* p : params) {
    write_u64(out, p->name.size());
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u64(out, static_cast<std::uint64_t>(p->value.rows()));
    write_u64(out, static_cast<std::uint64_t>(p->value.cols()));
    // Eigen default storage is column-major; dump in that order.
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw Error("short write to parameter blob " + path.string());
}

void load_parameters(const std::vector<Parameter*>& params, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open parameter blob " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(path.string() + " is not a parameter blob");
  std::map<std::string, std::pair<std::pair<std::uint64_t, std::uint64_t>, std::vector<double>>> blobs;
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(read_u64(in), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    std::uint64_t rows = read_u64(in), cols = read_u64(in);
    std::vector<double> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double) * data.size()));
    if (!in) throw Error("truncated parameter blob " + path.string());
    blobs[name] = {{rows, cols}, std::move(data)};
  }
  for (auto* p : params) {
    auto it = blobs.find(p->name);
    if (it == blobs.end()) throw Error("parameter '" + p->name + "' missing from " + path.string());
    auto [shape, data] = it->second;
    if (shape.first != static_cast<std::uint64_t>(p->value.rows()) ||
        shape.second != static_cast<std::uint64_t>(p->value.cols()))
      throw ConfigError("parameter '" + p->name + "' shape mismatch in " + path.string());
    std::memcpy(p->value.data(), data.data(), sizeof(double) * data.size());
    p->grad.setZero();
  }
}

}  // namespace glow::nn
