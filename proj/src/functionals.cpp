#include "fash/functional.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fash/errors.hpp"

namespace fash {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool inside(double t, double lo, double hi) { return t >= lo && t <= hi; }

// max_{in window}|b| - max_{outside}|b|
double windowed_contrast(std::span<const double> times, std::span<const double> values,
                         double lo, double hi, const std::string& name) {
  double in_max = -kInf, out_max = -kInf;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double a = std::abs(values[i]);
    if (inside(times[i], lo, hi))
      in_max = std::max(in_max, a);
    else
      out_max = std::max(out_max, a);
  }
  if (in_max == -kInf || out_max == -kInf)
    throw InvalidArgument("functional '" + name +
                          "' is undefined on this grid: window or its complement is empty");
  return in_max - out_max;
}

double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  const std::string buf(s);
  std::size_t used = 0;
  try {
    v = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != buf.size() || buf.empty())
    throw InvalidArgument("bad number '" + buf + "' in functional '" + std::string(context) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double FunctionalSpec::evaluate(std::span<const double> times,
                                std::span<const double> values) const {
  if (times.size() != values.size())
    throw InvalidArgument("functional '" + name + "': times and values differ in length");
  switch (kind) {
    case FunctionalKind::early:
    case FunctionalKind::middle:
    case FunctionalKind::late:
      return windowed_contrast(times, values, window_lo, window_hi, name);
    case FunctionalKind::switch_sign: {
      double pos = -kInf, neg = -kInf;
      for (std::size_t i = 0; i < times.size(); ++i) {
        if (!inside(times[i], window_lo, window_hi)) continue;
        pos = std::max(pos, std::max(values[i], 0.0));
        neg = std::max(neg, std::max(-values[i], 0.0));
      }
      if (pos == -kInf) throw InvalidArgument("functional '" + name + "': window holds no grid points");
      return std::min(pos, neg) - threshold;
    }
    case FunctionalKind::max_threshold: {
      double hi = -kInf;
      for (std::size_t i = 0; i < times.size(); ++i)
        if (inside(times[i], window_lo, window_hi)) hi = std::max(hi, values[i]);
      if (hi == -kInf) throw InvalidArgument("functional '" + name + "': window holds no grid points");
      return hi - threshold;
    }
    case FunctionalKind::custom:
      if (!custom) throw InvalidArgument("custom functional '" + name + "' has no evaluator");
      return custom(times, values);
  }
  throw InvalidArgument("unknown functional kind");
}

FunctionalSpec builtin_functional(std::string_view kind, const FunctionalParams& params) {
  FunctionalSpec f;
  f.name = std::string(kind);
  f.sided = Sidedness::one_sided;
  const auto window = [&](double lo, double hi) {
    f.window_lo = params.window_lo.value_or(lo);
    f.window_hi = params.window_hi.value_or(hi);
  };
  if (kind == "early") {
    f.kind = FunctionalKind::early;
    window(-kInf, 3.0);
  } else if (kind == "middle") {
    f.kind = FunctionalKind::middle;
    window(4.0, 11.0);
  } else if (kind == "late") {
    f.kind = FunctionalKind::late;
    window(12.0, kInf);
  } else if (kind == "switch") {
    f.kind = FunctionalKind::switch_sign;
    f.threshold = params.threshold.value_or(0.25);
    if (!(f.threshold > 0.0)) throw InvalidArgument("switch threshold c must be positive");
    window(-kInf, kInf);
  } else if (kind == "max_threshold") {
    f.kind = FunctionalKind::max_threshold;
    f.threshold = params.threshold.value_or(0.0);
    window(-kInf, kInf);
  } else if (kind == "window") {
    if (!params.window_lo || !params.window_hi)
      throw InvalidArgument("window functional needs both bounds");
    f.kind = FunctionalKind::custom;
    const double lo = *params.window_lo, hi = *params.window_hi;
    f.window_lo = lo;
    f.window_hi = hi;
    const std::string name = f.name;
    f.custom = [lo, hi, name](std::span<const double> t, std::span<const double> v) {
      return windowed_contrast(t, v, lo, hi, name);
    };
  } else {
    throw InvalidArgument("unknown functional '" + std::string(kind) +
                          "' (expected early, middle, late, switch, max_threshold or window)");
  }
  if (f.window_lo > f.window_hi) throw InvalidArgument("functional window is empty");
  return f;
}

FunctionalSpec parse_functional(std::string_view text) {
  const auto parts = split(text, ':');
  const std::string_view kind = parts.front();
  FunctionalParams params;
  if (kind == "switch" || kind == "max_threshold") {
    if (parts.size() >= 2) params.threshold = parse_number(parts[1], text);
    if (parts.size() == 4) {
      params.window_lo = parse_number(parts[2], text);
      params.window_hi = parse_number(parts[3], text);
    } else if (parts.size() != 1 && parts.size() != 2) {
      throw InvalidArgument("expected " + std::string(kind) + "[:c[:lo:hi]], got '" +
                            std::string(text) + "'");
    }
  } else if (kind == "window") {
    if (parts.size() != 3)
      throw InvalidArgument("expected window:lo:hi, got '" + std::string(text) + "'");
    params.window_lo = parse_number(parts[1], text);
    params.window_hi = parse_number(parts[2], text);
  } else if (parts.size() != 1) {
    throw InvalidArgument("functional '" + std::string(kind) + "' takes no parameters");
  }
  auto f = builtin_functional(kind, params);
  f.name = std::string(text);
  return f;
}

}  // namespace fash
