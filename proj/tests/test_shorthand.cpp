#include <gtest/gtest.h>

#include "ecmdot/shorthand.hpp"

using namespace ecmdot;

TEST(Shorthand, Format) {
  ecm_model m{8, 4, 4, 4, 6.1043, 2.9};
  EXPECT_EQ(format_shorthand(m), "{8 ‖ 4 | 4 | 4 | 6.1+2.9}");
  EXPECT_EQ(format_shorthand(m, {.ascii = true}), "{8 || 4 | 4 | 4 | 6.1+2.9}");
  EXPECT_EQ(format_shorthand({2, 4, 4, 4, 9, 0}), "{2 ‖ 4 | 4 | 4 | 9}");
  EXPECT_EQ(format_shorthand({8, 2, 2, 5.54, 4.858, 11.1}), "{8 ‖ 2 | 2 | 5.54 | 4.9+11.1}");
}

TEST(Shorthand, Parse) {
  EXPECT_EQ(parse_shorthand("{2 ‖ 4 | 4 | 4 | 9}"), (ecm_model{2, 4, 4, 4, 9, 0}));
  EXPECT_EQ(parse_shorthand("{8||4|4|4|6.1+2.9}"), (ecm_model{8, 4, 4, 4, 6.1, 2.9}));
  EXPECT_EQ(parse_shorthand("  { 8 ‖ 2 | 2 | 5.54 | 4.9 + 11.1 }  "),
            (ecm_model{8, 2, 2, 5.54, 4.9, 11.1}));
}

TEST(Shorthand, ParseErrorsReportOffset) {
  auto offset = [](std::string_view s) -> std::size_t {
    try {
      parse_shorthand(s);
    } catch (const parse_error& e) {
      return e.where();
    }
    return std::string_view::npos;
  };
  EXPECT_EQ(offset("2 ‖ 4 | 4 | 4 | 9}"), 0u);
  EXPECT_EQ(offset("{2 | 4 | 4 | 4 | 9}"), 3u);
  // Offsets count bytes; the double bar is three of them.
  EXPECT_EQ(offset("{2 ‖ 4 | 4 | x | 9}"), 15u);
  EXPECT_EQ(offset("{2 ‖ 4 | 4 | 4 | 9"), 20u);
  EXPECT_EQ(offset("{2 ‖ 4 | 4 | 4 | 9} x"), 22u);
  EXPECT_NE(offset("{2 ‖ 4 | 4 | 4 | -9}"), std::string_view::npos);
}

TEST(Shorthand, ExactStyleRoundTrips) {
  ecm_model m{64.0 / 3, 0.1, 1e-3, 5.54, 6.104338394793926, 2.9000000000000004};
  EXPECT_EQ(parse_shorthand(format_shorthand(m, {-1, -1})), m);
}

TEST(Shorthand, Levels) {
  EXPECT_EQ(format_levels({8, 8, 12, 21.0087}, 2, false), "{8 ⌉ 8 ⌉ 12 ⌉ 21.01}");
  EXPECT_EQ(format_levels({4.4, 4.4, 2.9333, 1.6755}, 2, true), "{4.40 ⌉ 4.40 ⌉ 2.93 ⌉ 1.68}");
  EXPECT_EQ(format_levels({1, 2, 3, 4}, 0, true, true), "{1 ] 2 ] 3 ] 4}");
}

TEST(Shorthand, Trimming) {
  EXPECT_EQ(format_trimmed(6.1043, 1), "6.1");
  EXPECT_EQ(format_trimmed(8.0, 2), "8");
  EXPECT_EQ(format_trimmed(-0.001, 2), "0");
  EXPECT_EQ(format_fixed(1.8, 2), "1.80");
}
