#include <sstream>

#include "doctest.h"
#include "sflick/config.hpp"

using namespace sflick;

namespace {

ErrorCode parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a config error");
  return ErrorCode::numeric;
}

}  // namespace

TEST_CASE("defaults are the full-scale setup") {
  const PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.geometry.n_views == 1160);
  CHECK(cfg.geometry.n_dets == 672);
  CHECK(cfg.geometry.image_size == 512);
  CHECK(cfg.denoise.flick_draws == 400000u);
  CHECK(cfg.denoise.channels == 48);
  CHECK(cfg.denoise.passes == 2);
  CHECK(cfg.noise.i0 == 25000.0);
}

TEST_CASE("format and parse round trip") {
  PipelineConfig cfg;
  cfg.geometry.det_spacing = 0.1 + 0.2;  // not exactly representable in short decimal
  cfg.denoise.seed = 0xffffffffffffffffULL;
  cfg.denoise.independent_pair = true;
  cfg.phantom_table = "tables/custom.txt";
  std::istringstream in(format_config(cfg));
  const PipelineConfig back = parse_config(in);
  CHECK(format_config(back) == format_config(cfg));
  CHECK(back.geometry.det_spacing == cfg.geometry.det_spacing);
  CHECK(back.denoise.seed == cfg.denoise.seed);
}

TEST_CASE("every key can be read and written") {
  PipelineConfig cfg;
  for (const auto& k : config_keys()) {
    const std::string v = get_config_value(cfg, k.name);
    if (k.name == "phantom_table") continue;
    CHECK_NOTHROW(set_config_value(cfg, k.name, v));
    CHECK(get_config_value(cfg, k.name) == v);
  }
}

TEST_CASE("comments, blanks and whitespace") {
  std::istringstream in("# header\n\n  n_views = 360   # trailing\nn_dets=363\n");
  const PipelineConfig cfg = parse_config(in);
  CHECK(cfg.geometry.n_views == 360);
  CHECK(cfg.geometry.n_dets == 363);
}

TEST_CASE("bad input is a config error") {
  CHECK(parse_code("no_such_key = 1\n") == ErrorCode::config);
  CHECK(parse_code("n_views\n") == ErrorCode::config);
  CHECK(parse_code("n_views = 361\n") == ErrorCode::config);
  CHECK(parse_code("n_views = 12x\n") == ErrorCode::config);
  CHECK(parse_code("i0 = -5\n") == ErrorCode::config);
  CHECK(parse_code("i0 = nan\n") == ErrorCode::config);
  CHECK(parse_code("sart_nonneg = maybe\n") == ErrorCode::config);
  CHECK(parse_code("output_dir =\n") == ErrorCode::config);
  CHECK(parse_code("sart_relaxation = 2.5\n") == ErrorCode::config);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), Error);
}

TEST_CASE("shipped configs load") {
  const PipelineConfig desk = load_config(SFLICK_CONFIG_DIR "/desk.cfg");
  CHECK(desk.geometry.n_views == 360);
  CHECK(desk.geometry.n_dets == 363);
  CHECK(desk.geometry.image_size == 256);
  PipelineConfig full = load_config(SFLICK_CONFIG_DIR "/paper.cfg");
  full.output_dir = PipelineConfig{}.output_dir;
  CHECK(format_config(full) == format_config(PipelineConfig{}));
}

TEST_CASE("help lists every key once") {
  const std::string help = config_help();
  for (const auto& k : config_keys()) CHECK(help.find("  " + k.name + " ") != std::string::npos);
  CHECK(help.find("default 0.78125") != std::string::npos);
}
