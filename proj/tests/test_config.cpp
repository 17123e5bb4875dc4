#include <doctest.h>

#include <cmath>
#include <string>

#include "sirinv/config.hpp"
#include "sirinv/errors.hpp"

using namespace sirinv;

namespace {

const std::string kConfigs = std::string(SIRINV_SOURCE_DIR) + "/configs/";

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse_config(text, "cfg.toml", kConfigs, overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("shipped configs load") {
  for (const char* name : {"test1.toml", "test2.toml", "test3.toml", "literal.toml"}) {
    CAPTURE(name);
    const RunConfig cfg = load_config(kConfigs + name);
    CHECK(cfg.fine_grid().nx == 80);
    CHECK(cfg.coarse_grid().nt == 10);
    CHECK(cfg.forward.c == doctest::Approx(5e-5));
    CHECK(grid_nests(cfg.coarse_grid(), cfg.fine_grid()));
    CHECK_FALSE(cfg.forward.beta.mask.empty());
  }
  const RunConfig t1 = load_config(kConfigs + "test1.toml");
  CHECK(t1.forward.beta.inside == 0.6);
  CHECK(t1.forward.gamma.inside == 0.4);
  CHECK(t1.inversion.carleman.lambda == 3.0);
  CHECK(t1.inversion.carleman.xi == 0.01);
  CHECK(t1.inversion.carleman.b == 1.1);
  CHECK(load_config(kConfigs + "test3.toml").observation.sigma == 0.05);
}

TEST_CASE("defaults from an empty file") {
  const RunConfig cfg = parse_config("", "empty.toml", ".");
  CHECK(cfg.forward.nx == 80);
  CHECK(cfg.observation.nx == 20);
  CHECK(cfg.forward.beta.mask.empty());
  CHECK(cfg.output.forward == "run/forward");
  CHECK(cfg.output.inversion == "run/invert");
}

TEST_CASE("overrides use dotted paths") {
  const RunConfig cfg = load_config(kConfigs + "test1.toml",
                                    {"inversion.lambda=0", "observation.sigma=0.03", "output.dir=elsewhere"});
  CHECK(cfg.inversion.carleman.lambda == 0.0);
  CHECK(cfg.observation.sigma == 0.03);
  CHECK(cfg.output.data == "elsewhere/data");
  CHECK(cfg.text.find("elsewhere") != std::string::npos);
}

TEST_CASE("errors carry the location") {
  CHECK(error_of("[forward]\nnx = 80\nbogus = 1\n").find("cfg.toml:3:") == 0);
  CHECK(error_of("[forward]\nnx = 80\nbogus = 1\n").find("unknown key") != std::string::npos);
  CHECK(error_of("[observation]\nnt = 9\n").find("cfg.toml:") == 0);
  CHECK(error_of("[observation]\nsigma = 1.5\n").find("cfg.toml:2:") == 0);
  CHECK(error_of("[forward]\nnx = \"many\"\n").find("expected an integer") != std::string::npos);
  CHECK(error_of("[forward.beta]\nmask = \"missing.pbm\"\n").find("does not exist") != std::string::npos);
  CHECK(error_of("[forward]\nc = 1e-4\neta = 0.01\n").find("either c or eta") != std::string::npos);
  CHECK(error_of("[observation]\nnx = 30\n").find("cfg.toml:") == 0);
  CHECK(error_of("[inversion]\nlambda = -1\n").find("cfg.toml:") == 0);
  CHECK(error_of("x = [", {}).find("cfg.toml:") == 0);
  CHECK(error_of("", {"forward.bogus=1"}).find("--set") == 0);
  CHECK(error_of("", {"novalue"}).find("expected key=value") != std::string::npos);
  CHECK_THROWS_AS(load_config(kConfigs + "nope.toml"), ConfigError);
}

TEST_CASE("Gaussian bump") {
  GaussianBump g{0.6, 0.6, 0.0, 10.0, 0.3};
  CHECK(g(0.6, 0.0) == doctest::Approx(0.9));
  CHECK(g(0.6, 0.5) == doctest::Approx(0.3 + 0.6 * std::exp(-2.5)));
}
