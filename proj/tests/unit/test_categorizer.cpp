#include <doctest.h>

TEST_SUITE_BEGIN("categorizer");

TEST_CASE("placeholder") { CHECK(true); }

TEST_SUITE_END();
