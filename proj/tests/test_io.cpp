#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lorentzscope/error.hpp"
#include "lorentzscope/golden.hpp"
#include "lorentzscope/io.hpp"
#include "support.hpp"

using namespace lorentzscope;
using io::Json;

TEST_CASE("format_number round-trips") {
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(110.0) == "110");
  CHECK(io::format_number(-2.5e-7) == "-2.5e-07");
  for (double v : {1.0 / 3, 13000.123456789, 1e-300, 5e300}) CHECK(std::stod(io::format_number(v)) == v);
}

TEST_CASE("model and fit result JSON round trip") {
  const auto m = golden::table3_model();
  CHECK(io::model_from_json(io::to_json(m)) == m);
  CHECK(io::model_from_json(Json::parse(io::to_json(m).dump())) == m);

  FitResult r;
  r.model = MultiLevelModel(1.5, {LorentzianState(100, 30, 2)}, {0, 600});
  r.rms_residual = 0.125;
  r.iterations = 7;
  r.converged = true;
  r.stop_reason = "residual";
  r.baseline_knots = {{0, 1.0}, {600, 2.0}};
  r.uncertainties = std::vector<StateUncertainty>{{0.5, 1.5, 0.01}};
  const auto back = io::fit_result_from_json(Json::parse(io::to_json(r).dump()));
  CHECK(back.model == r.model);
  CHECK(back.rms_residual == 0.125);
  CHECK(back.iterations == 7);
  CHECK(back.converged);
  CHECK(back.stop_reason == "residual");
  CHECK(back.baseline_knots == r.baseline_knots);
  REQUIRE(back.uncertainties.has_value());
  CHECK((*back.uncertainties)[0].delta_tau == 1.5);
  CHECK(io::model_from_json(io::to_json(r)) == r.model);

  CHECK_THROWS_AS(io::model_from_json(Json::parse(R"({"baseline":0,"window":[0],"states":[]})")), ParseError);
  CHECK_THROWS_AS(io::model_from_json(Json::parse(R"({"baseline":0,"window":[0,10],"states":[{"t0":1}]})")),
                  ParseError);
  CHECK_THROWS_AS(
      io::model_from_json(Json::parse(R"({"baseline":0,"window":[0,10],"states":[{"t0":1,"delta_tau":-1,"M":1}]})")),
      ParseError);
}

TEST_CASE("shipped golden data matches the compiled table") {
  const auto model = io::model_from_json(io::read_json_file(test::data_dir() / "table3_model.json"));
  CHECK(model == golden::table3_model());
  const auto spec = io::synth_spec_from_json(io::read_json_file(test::data_dir() / "table3_spec.json"));
  REQUIRE(spec.explicit_states.has_value());
  CHECK(*spec.explicit_states == golden::table3_model());
  CHECK(spec.series.noise == 0.02);
  CHECK(spec.series.noise_seed == 1);
}

TEST_CASE("synth spec parsing") {
  const auto s = io::synth_spec_from_json(Json::parse(
      R"({"mean_spacing":100,"mean_width":40,"width_family":"chisq","nu":4,"amplitude":{"mean":3,"dispersion":0.2},
          "window":[0,1800],"seed":9,"noise":0.01,"composition":"multiplicative","baseline":50})"));
  CHECK(s.ensemble.mean_spacing == 100);
  CHECK(s.ensemble.width_law.kind == WidthLaw::Kind::kChiSquared);
  CHECK(s.ensemble.width_law.nu == 4);
  CHECK(s.ensemble.amplitude.dispersion == 0.2);
  CHECK(s.ensemble.window == TimeWindow{0, 1800});
  CHECK(s.series.noise_seed == 10);
  CHECK(s.series.composition == Composition::kMultiplicative);
  CHECK(std::get<double>(s.series.baseline) == 50);
  CHECK_FALSE(s.explicit_states.has_value());

  for (const char* bad : {R"({"spacing_family":"poisson"})", R"({"width_family":"gamma"})", R"({"window":[5,5]})",
                          R"({"noise":-0.1})", R"({"channel_width":0})", R"({"mean_spacing":"x"})",
                          R"({"composition":"both"})"}) {
    CHECK_THROWS_AS(io::synth_spec_from_json(Json::parse(bad)), ParseError);
  }
}

TEST_CASE("state table layout") {
  const auto text = io::state_table(golden::table3_model(), 30);
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("t0_s") != std::string::npos);
  int rows = 0;
  int channel;
  double t0, wch, ws, m;
  std::size_t i = 0;
  while (in >> channel >> t0 >> wch >> ws >> m) {
    const auto& row = golden::kTable3[i++];
    CHECK(channel == row.channel);
    CHECK(t0 == row.t0);
    CHECK(ws == row.delta_tau);
    CHECK(wch == doctest::Approx(row.width_channels));
    CHECK(m == row.amplitude);
    ++rows;
  }
  CHECK(rows == 32);
}

TEST_CASE("channel CSV round trip") {
  test::TempDir dir("io");
  const ChannelSeries s(30, 60, {1.0 / 3, -2.5, 1e6, 0.0});
  io::write_channel_csv(dir / "c.csv", s);
  CHECK(test::slurp(dir / "c.csv").rfind("time_s,value\n60,", 0) == 0);
  const auto back = io::read_channel_csv(dir / "c.csv");
  CHECK(back.same_grid(s));
  CHECK(std::equal(back.values().begin(), back.values().end(), s.values().begin()));
  CHECK_THROWS_AS(io::read_json_file(dir / "absent.json"), ParseError);
  test::spit(dir / "bad.json", "{");
  CHECK_THROWS_AS(io::read_json_file(dir / "bad.json"), ParseError);
}
