#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>

namespace mbw {

/// A static many-body potential V(x^1, ..., x^n) in eV.
///
/// Evaluation must be deterministic and thread-safe. A potential that is a sum
/// of identical single-body terms can expose that term, which lets table
/// construction assemble many-body kernel rows from single-body ones.
class Potential {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  Potential(std::string name, int bodies, Fn fn);

  static Potential zero(int bodies);
  static Potential constant(int bodies, double value);
  /// height * exp(-(x - center)^2 / (2 width^2)), summed over bodies.
  static Potential gaussian_barrier(int bodies, double height, double center, double width);
  /// Sum over bodies of the same single-body potential.
  static Potential separable_sum(int bodies, const Potential& single_body);

  double operator()(std::span<const double> x) const { return fn_(x); }

  const std::string& name() const { return name_; }
  int bodies() const { return bodies_; }
  bool is_zero() const { return zero_; }
  /// Non-null when this potential equals sum_i term(x_i).
  const Potential* single_body_term() const { return term_.get(); }

 private:
  std::string name_;
  int bodies_ = 1;
  Fn fn_;
  bool zero_ = false;
  std::shared_ptr<const Potential> term_;
};

}  // namespace mbw
