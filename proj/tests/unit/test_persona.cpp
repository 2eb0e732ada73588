#include <doctest.h>

TEST_SUITE_BEGIN("persona");

TEST_CASE("placeholder") { CHECK(true); }

TEST_SUITE_END();
