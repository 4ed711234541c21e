#include <doctest.h>

#include <stdexcept>

#include <filesystem>

#include "gde/checkpoint.hpp"
#include "gde/rng.hpp"

using namespace gde;

TEST_CASE("checkpoint round trip is bit-exact on theta") {
  ParamStore params;
  params.add_view("a.w", 3, 4);
  params.add_view("a.b", 1, 4);
  params.add_view("head", 4, 2);
  RngStream rng(99);
  for (auto& v : params.theta()) v = rng.uniform(-1, 1) * 1e3;
  params.theta()[0] = 0x1.fffffffffffffp-3;  // awkward mantissa on purpose

  const std::string path = "ckpt_test.tmp.bin";
  save_checkpoint(path, R"({"family":"test","nz":4})", params, {7, 8, 9});

  const Checkpoint ck = load_checkpoint(path);
  CHECK(ck.seeds == std::vector<std::uint64_t>{7, 8, 9});
  REQUIRE(ck.theta.size() == params.size());
  for (std::size_t i = 0; i < ck.theta.size(); ++i) {
    CHECK(ck.theta[i] == params.theta()[i]);  // exact, not approximate
  }
  CHECK(ck.descriptor.find("family") != std::string::npos);

  ParamStore fresh;
  fresh.add_view("a.w", 3, 4);
  fresh.add_view("a.b", 1, 4);
  fresh.add_view("head", 4, 2);
  restore_params(ck, fresh);
  for (std::size_t i = 0; i < fresh.size(); ++i) CHECK(fresh.theta()[i] == params.theta()[i]);

  ParamStore wrong;
  wrong.add_view("a.w", 3, 4);
  CHECK_THROWS_AS(restore_params(ck, wrong), std::runtime_error);
  std::filesystem::remove(path);
}
