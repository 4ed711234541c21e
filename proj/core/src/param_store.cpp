#include "gde/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace gde {

std::string ParamStore::add_view(const std::string& name, int rows, int cols) {
  if (views_.count(name)) throw std::invalid_argument("ParamStore: duplicate view " + name);
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("ParamStore: view " + name + " has empty shape");
  ViewInfo info{theta_.size(), rows, cols};
  views_[name] = info;
  order_.push_back(name);
  theta_.resize(theta_.size() + info.size(), 0.0);
  return name;
}

const ViewInfo& ParamStore::info(const std::string& name) const {
  auto it = views_.find(name);
  if (it == views_.end()) throw std::invalid_argument("ParamStore: unknown view " + name);
  return it->second;
}

Matrix ParamStore::view(const std::string& name) const {
  const ViewInfo& v = info(name);
  std::vector<double> vals(theta_.begin() + v.offset, theta_.begin() + v.offset + v.size());
  return Matrix(v.rows, v.cols, std::move(vals));
}

void ParamStore::set_view(const std::string& name, const Matrix& m) {
  const ViewInfo& v = info(name);
  if (m.rows() != v.rows || m.cols() != v.cols) {
    throw std::invalid_argument("ParamStore: set_view " + name + " shape " + m.shape_str() +
                                " does not match view");
  }
  for (std::size_t i = 0; i < v.size(); ++i) theta_[v.offset + i] = m.values()[i];
}

void ParamStore::init_uniform(const std::string& name, double scale, RngStream& rng) {
  const ViewInfo& v = info(name);
  for (std::size_t i = 0; i < v.size(); ++i) theta_[v.offset + i] = rng.uniform(-scale, scale);
}

void ParamStore::init_all_uniform_scaled(RngStream& rng) {
  for (const auto& name : order_) {
    const ViewInfo& v = views_.at(name);
    init_uniform(name, 1.0 / std::sqrt(static_cast<double>(v.rows)), rng);
  }
}

void accumulate_view(std::vector<double>& grad, const ViewInfo& info, const Matrix& m) {
  if (m.rows() != info.rows || m.cols() != info.cols) {
    throw std::invalid_argument("accumulate_view: shape mismatch");
  }
  if (grad.size() < info.offset + info.size()) {
    throw std::invalid_argument("accumulate_view: gradient vector too short");
  }
  for (std::size_t i = 0; i < info.size(); ++i) grad[info.offset + i] += m.values()[i];
}

Matrix read_view(const std::vector<double>& flat, const ViewInfo& info) {
  std::vector<double> vals(flat.begin() + info.offset, flat.begin() + info.offset + info.size());
  return Matrix(info.rows, info.cols, std::move(vals));
}

}  // namespace gde
