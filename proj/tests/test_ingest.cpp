#include "doctest.h"
#include "lorentzscope/error.hpp"
#include "lorentzscope/ingest.hpp"
#include "support.hpp"

using namespace lorentzscope;

TEST_CASE("parse_timestamp accepts clock and epoch forms") {
  CHECK(parse_timestamp("09:30") == doctest::Approx(34200.0));
  CHECK(parse_timestamp("14:45:30") == doctest::Approx(53130.0));
  CHECK(parse_timestamp(" 1333460700 ") == doctest::Approx(1333460700.0));
  CHECK(parse_timestamp("12.5") == doctest::Approx(12.5));
  CHECK_FALSE(parse_timestamp("").has_value());
  CHECK_FALSE(parse_timestamp("9:75").has_value());
  CHECK_FALSE(parse_timestamp("1:2:3:4").has_value());
  CHECK_FALSE(parse_timestamp("noon").has_value());
}

TEST_CASE("series constructors reject bad grids") {
  CHECK_THROWS_AS(TimeSeries(0.0, 0.0, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(TimeSeries(0.0, 1.0, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(ChannelSeries(-30.0, 0.0, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(ChannelSeries(30.0, 0.0, {}), InvalidArgument);
}

TEST_CASE("channel geometry") {
  const ChannelSeries s(30.0, 60.0, {1, 2, 3, 4});
  CHECK(s.left_edge(0) == 60.0);
  CHECK(s.center(1) == 105.0);
  CHECK(s.end() == 180.0);
  const auto sub = s.slice(1, 2);
  CHECK(sub.origin() == 90.0);
  CHECK(sub.values()[1] == 3.0);
  CHECK_THROWS_AS(s.slice(3, 2), InvalidArgument);
  CHECK(channel_of(59.999, 30.0) == 1);
  CHECK(channel_of(60.0, 30.0) == 2);
  CHECK(channel_center(2, 30.0) == 75.0);
  CHECK_THROWS_AS(channel_of(-1.0, 30.0), InvalidArgument);
  CHECK(s.same_grid(ChannelSeries(30.0, 60.0, {0, 0, 0, 0})));
  CHECK_FALSE(s.same_grid(ChannelSeries(30.0, 0.0, {0, 0, 0, 0})));
}

TEST_CASE("resample averages whole channels and drops the remainder") {
  const TimeSeries ts(0.0, 10.0, {1, 2, 3, 4, 5, 6, 7});
  const auto c = resample(ts, 30.0);
  REQUIRE(c.size() == 2);
  CHECK(c.values()[0] == doctest::Approx(2.0));
  CHECK(c.values()[1] == doctest::Approx(5.0));
  CHECK(resample(ts, 10.0).size() == 7);
  CHECK_THROWS_AS(resample(ts, 25.0), InvalidArgument);
  CHECK_THROWS_AS(resample(ts, 5.0), InvalidArgument);
  CHECK_THROWS_AS(resample(ts, 80.0), InvalidArgument);
}

TEST_CASE("load_csv fills single gaps by linear interpolation") {
  test::TempDir dir("ingest");
  std::string text = "time,value\n";
  for (int k = 0; k < 40; ++k) {
    if (k == 10) continue;
    const int t = 34200 + 15 * k;
    text += std::to_string(t / 3600) + ":" + std::to_string(t / 60 % 60) + ":" + std::to_string(t % 60) + "," +
            std::to_string(100 + k) + "\n";
  }
  test::spit(dir / "in.csv", text);
  const auto loaded = load_csv(dir / "in.csv");
  CHECK(loaded.report.rows_read == 39);
  CHECK(loaded.report.gaps_filled == 1);
  CHECK(loaded.report.interval == doctest::Approx(15.0));
  CHECK(loaded.report.clock_offset == doctest::Approx(34200.0));
  REQUIRE(loaded.series.size() == 40);
  CHECK(loaded.series.values()[10] == doctest::Approx(110.0));
  CHECK(loaded.series.t_start() == 0.0);
}

TEST_CASE("load_csv diagnostics") {
  test::TempDir dir("ingest-bad");
  CHECK_THROWS_AS(load_csv(dir / "absent.csv"), ParseError);

  test::spit(dir / "cols.csv", "t,v\n0,1\n1,2\n");
  CHECK_THROWS_WITH_AS(load_csv(dir / "cols.csv"), doctest::Contains("no column named 'time'"), ParseError);

  test::spit(dir / "order.csv", "time,value\n0,1\n10,2\n5,3\n");
  CHECK_THROWS_AS(load_csv(dir / "order.csv"), ParseError);

  test::spit(dir / "nan.csv", "time,value\n0,1\n10,abc\n");
  CHECK_THROWS_AS(load_csv(dir / "nan.csv"), ParseError);

  std::string sparse = "time,value\n";
  for (int k = 0; k < 20; ++k) sparse += std::to_string(k * (k % 2 ? 30 : 10)) + ",1\n";
  test::spit(dir / "sparse.csv", sparse);
  CHECK_THROWS_AS(load_csv(dir / "sparse.csv"), ParseError);

  test::spit(dir / "custom.csv", "stamp,close\n0,5\n30,6\n60,7\n");
  const auto ok = load_csv(dir / "custom.csv", CsvSchema{"stamp", "close"});
  CHECK(ok.series.size() == 3);
}
