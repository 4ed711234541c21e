#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gde/matrix.hpp"
#include "gde/rng.hpp"

namespace gde {

struct ViewInfo {
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Flat parameter vector with named (offset, shape) windows. Views are
/// appended in registration order and tile theta exactly, which keeps
/// gradients, optimizer state and checkpoints index-compatible.
class ParamStore {
 public:
  /// Registers a view at the end of theta; returns the name for convenience.
  std::string add_view(const std::string& name, int rows, int cols);
  bool has_view(const std::string& name) const { return views_.count(name) > 0; }
  const ViewInfo& info(const std::string& name) const;

  Matrix view(const std::string& name) const;
  void set_view(const std::string& name, const Matrix& m);

  std::size_t size() const { return theta_.size(); }
  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }

  const std::vector<std::string>& view_order() const { return order_; }

  /// Uniform(-scale, scale) initialization of one view.
  void init_uniform(const std::string& name, double scale, RngStream& rng);
  /// Glorot-style scale 1/sqrt(fan_in) for every view.
  void init_all_uniform_scaled(RngStream& rng);

 private:
  std::vector<double> theta_;
  std::map<std::string, ViewInfo> views_;
  std::vector<std::string> order_;
};

/// Accumulates `m` into the window of a flat gradient vector.
void accumulate_view(std::vector<double>& grad, const ViewInfo& info, const Matrix& m);
Matrix read_view(const std::vector<double>& flat, const ViewInfo& info);

}  // namespace gde
