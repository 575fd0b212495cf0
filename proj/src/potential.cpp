#include "mbw/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mbw {

namespace {

std::string format_name(const char* kind, std::initializer_list<std::pair<const char*, double>> args) {
  std::ostringstream os;
  os.precision(17);
  os << kind << '(';
  bool first = true;
  for (const auto& [k, v] : args) {
    if (!first) os << ',';
    os << k << '=' << v;
    first = false;
  }
  os << ')';
  return os.str();
}

}  // namespace

Potential::Potential(std::string name, int bodies, Fn fn)
    : name_(std::move(name)), bodies_(bodies), fn_(std::move(fn)) {
  if (bodies_ < 1) throw std::invalid_argument("Potential: bodies must be >= 1");
  if (!fn_) throw std::invalid_argument("Potential: empty evaluator");
}

Potential Potential::zero(int bodies) {
  Potential v("zero", bodies, [](std::span<const double>) { return 0.0; });
  v.zero_ = true;
  return v;
}

Potential Potential::constant(int bodies, double value) {
  return Potential(format_name("constant", {{"v", value}}), bodies,
                   [value](std::span<const double>) { return value; });
}

Potential Potential::gaussian_barrier(int bodies, double height, double center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian_barrier: width must be positive");
  const double inv = 1.0 / (2.0 * width * width);
  Potential single(format_name("gaussian_barrier", {{"height", height}, {"center", center}, {"width", width}}),
                   1, [=](std::span<const double> x) {
                     const double d = x[0] - center;
                     return height * std::exp(-d * d * inv);
                   });
  if (bodies == 1) return single;
  return separable_sum(bodies, single);
}

Potential Potential::separable_sum(int bodies, const Potential& single_body) {
  if (single_body.bodies() != 1)
    throw std::invalid_argument("separable_sum: term must be a single-body potential");
  auto term = std::make_shared<const Potential>(single_body);
  Potential v("sum" + std::to_string(bodies) + ':' + single_body.name(), bodies,
              [term](std::span<const double> x) {
                double acc = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) acc += (*term)(x.subspan(i, 1));
                return acc;
              });
  v.term_ = std::move(term);
  v.zero_ = single_body.is_zero();
  return v;
}

}  // namespace mbw
