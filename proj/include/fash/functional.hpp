#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace fash {

enum class FunctionalKind { max_threshold, early, middle, late, switch_sign, custom };

// One-sided tests H1: F > 0; two-sided tests H1: F != 0.
enum class Sidedness { one_sided, two_sided };

// A real-valued functional of a path sampled on a discrete grid. Window
// bounds are inclusive; "max over a window" means the max over grid points
// inside it.
struct FunctionalSpec {
  using Evaluator = std::function<double(std::span<const double> times,
                                         std::span<const double> values)>;

  FunctionalKind kind = FunctionalKind::custom;
  std::string name;
  double threshold = 0.0;  // c (switch) or alpha (max_threshold)
  double window_lo = -std::numeric_limits<double>::infinity();
  double window_hi = std::numeric_limits<double>::infinity();
  Sidedness sided = Sidedness::one_sided;
  Evaluator custom;  // used when kind == custom

  // Throws InvalidArgument when the window (or its complement, for contrast
  // functionals) holds no grid points.
  double evaluate(std::span<const double> times, std::span<const double> values) const;
};

struct FunctionalParams {
  std::optional<double> threshold;
  std::optional<double> window_lo;
  std::optional<double> window_hi;
};

// Built-in functionals:
//   early   max_{t<=3}|b| - max_{t>3}|b|
//   middle  max_{4<=t<=11}|b| - max_{t<4 or t>11}|b|
//   late    max_{t>=12}|b| - max_{t<12}|b|
//   switch  min(max b+, max b-) - c over the window, c = 0.25 by default
//   max_threshold  max_{window} b - threshold
//   window  windowed contrast like early/middle/late with custom bounds (kind custom)
// Window bounds of early/middle/late may be overridden through params.
FunctionalSpec builtin_functional(std::string_view kind, const FunctionalParams& params = {});

// Parses "switch", "switch:0.3", "early", "max_threshold:0.5[:lo:hi]",
// "window:lo:hi". Throws InvalidArgument for unknown names.
FunctionalSpec parse_functional(std::string_view text);

}  // namespace fash
