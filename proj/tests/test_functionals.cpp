#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fash/errors.hpp"
#include "fash/functional.hpp"

using namespace fash;

namespace {

std::vector<double> days() {
  std::vector<double> t;
  for (int i = 0; i < 16; ++i) t.push_back(i);
  return t;
}

}  // namespace

TEST(Functionals, EarlyMiddleLateContrasts) {
  const auto t = days();
  std::vector<double> b(16, 0.1);
  b[2] = -0.9;  // early spike
  EXPECT_NEAR(builtin_functional("early").evaluate(t, b), 0.8, 1e-15);
  EXPECT_NEAR(builtin_functional("middle").evaluate(t, b), 0.1 - 0.9, 1e-15);
  EXPECT_NEAR(builtin_functional("late").evaluate(t, b), 0.1 - 0.9, 1e-15);
  b[2] = 0.1;
  b[11] = 0.5;  // edge of the middle window
  EXPECT_NEAR(builtin_functional("middle").evaluate(t, b), 0.4, 1e-15);
  b[11] = 0.1;
  b[12] = 0.5;
  EXPECT_NEAR(builtin_functional("late").evaluate(t, b), 0.4, 1e-15);
}

TEST(Functionals, SwitchNeedsBothSignsAboveThreshold) {
  const auto t = days();
  std::vector<double> b(16);
  for (int i = 0; i < 16; ++i) b[i] = 0.6 - 0.08 * i;  // 0.6 down to -0.6
  EXPECT_NEAR(builtin_functional("switch").evaluate(t, b), 0.6 - 0.25, 1e-12);
  for (double& v : b) v = std::abs(v);
  EXPECT_NEAR(builtin_functional("switch").evaluate(t, b), 0.0 - 0.25, 1e-12);
  EXPECT_NEAR(parse_functional("switch:0.5").evaluate(t, std::vector<double>(16, 0.0)), -0.5, 1e-15);
}

TEST(Functionals, MaxThresholdOverWindow) {
  const auto t = days();
  std::vector<double> b(16, 0.0);
  b[1] = 2.0;
  b[10] = 1.0;
  EXPECT_NEAR(parse_functional("max_threshold:0.5").evaluate(t, b), 1.5, 1e-15);
  EXPECT_NEAR(parse_functional("max_threshold:0.5:5:15").evaluate(t, b), 0.5, 1e-15);
}

TEST(Functionals, CustomWindow) {
  const auto t = days();
  std::vector<double> b(16, 0.2);
  b[7] = -1.0;
  const auto f = parse_functional("window:6:8");
  EXPECT_EQ(f.name, "window:6:8");
  EXPECT_NEAR(f.evaluate(t, b), 0.8, 1e-15);
}

TEST(Functionals, WindowOverridesViaParams) {
  FunctionalParams p;
  p.window_hi = 5.0;
  const auto f = builtin_functional("early", p);
  EXPECT_EQ(f.window_hi, 5.0);
}

TEST(Functionals, ParseErrors) {
  EXPECT_THROW(parse_functional("bogus"), InvalidArgument);
  EXPECT_THROW(parse_functional("switch:abc"), InvalidArgument);
  EXPECT_THROW(parse_functional("switch:0.2:1"), InvalidArgument);
  EXPECT_THROW(parse_functional("window:3"), InvalidArgument);
  EXPECT_THROW(parse_functional("early:1"), InvalidArgument);
  EXPECT_THROW(parse_functional("switch:-1"), InvalidArgument);
  EXPECT_THROW(parse_functional("window:5:2"), InvalidArgument);
}

TEST(Functionals, EmptyWindowOrComplementIsAnError) {
  const std::vector<double> t{0.0, 1.0, 2.0};
  const std::vector<double> b{1.0, 2.0, 3.0};
  EXPECT_THROW(builtin_functional("early").evaluate(t, b), InvalidArgument);  // nothing after day 3
  EXPECT_THROW(builtin_functional("late").evaluate(t, b), InvalidArgument);
  EXPECT_THROW(parse_functional("max_threshold:0:10:12").evaluate(t, b), InvalidArgument);
  const std::vector<double> short_b{1.0};
  EXPECT_THROW(builtin_functional("switch").evaluate(t, short_b), InvalidArgument);
}

TEST(Functionals, SignFlipSymmetry) {
  // |b|-based contrasts and the switch functional are invariant to b -> -b.
  const auto t = days();
  std::vector<double> b(16);
  for (int i = 0; i < 16; ++i) b[i] = std::sin(0.7 * i) * (1.0 + 0.1 * i);
  std::vector<double> nb(16);
  for (int i = 0; i < 16; ++i) nb[i] = -b[i];
  for (const char* name : {"early", "middle", "late", "switch"})
    EXPECT_DOUBLE_EQ(builtin_functional(name).evaluate(t, b), builtin_functional(name).evaluate(t, nb)) << name;
}
