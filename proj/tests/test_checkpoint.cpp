#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "ged/checkpoint.hpp"
#include "ged/error.hpp"
#include "support.hpp"

using namespace ged;

namespace {

Checkpoint sample(Integration integ) {
  auto s = testing::tiny_setup(integ, 3, 3, 5);
  TrainConfig tc;
  tc.integration = integ;
  tc.seed = 5;
  return {ModelParams::initialize(s.config, 5), tc, s.vocab};
}

}  // namespace

TEST_CASE("checkpoint round trip is bitwise") {
  for (Integration integ : {Integration::None, Integration::Input}) {
    const Checkpoint c = sample(integ);
    const std::string bytes = serialize_checkpoint(c);
    const Checkpoint back = parse_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    CHECK(back.vocab == c.vocab);
    CHECK(back.params.config == c.params.config);
    std::vector<const Eigen::MatrixXd*> a, b;
    c.params.visit([&](const std::string&, const Eigen::MatrixXd& m) { a.push_back(&m); });
    back.params.visit([&](const std::string&, const Eigen::MatrixXd& m) { b.push_back(&m); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(std::memcmp(a[i]->data(), b[i]->data(), sizeof(double) * a[i]->size()) == 0);
  }
}

TEST_CASE("checkpoint files") {
  const auto dir = std::filesystem::temp_directory_path() / "ged_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();
  const Checkpoint c = sample(Integration::None);
  save_checkpoint(c, path);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  const Checkpoint back = load_checkpoint(path);

  auto s = testing::tiny_setup(Integration::None, 1, 0, 5);
  for (const auto& sent : s.batch)
    CHECK(predict(sent, back.params, nullptr) == predict(sent, c.params, nullptr));

  const std::string bytes = serialize_checkpoint(c);
  SUBCASE("truncated") {
    CHECK_THROWS_AS(parse_checkpoint(std::string_view(bytes).substr(0, bytes.size() / 2)), FormatError);
    CHECK_THROWS_AS(parse_checkpoint(std::string_view(bytes).substr(0, 10)), FormatError);
  }
  SUBCASE("corrupted") {
    std::string bad = bytes;
    bad[bad.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(parse_checkpoint(bad), FormatError);
  }
  SUBCASE("bad magic") { CHECK_THROWS_AS(parse_checkpoint("NOTACKPT" + bytes.substr(8)), FormatError); }
  std::filesystem::remove_all(dir);
}

TEST_CASE("input-integration checkpoint without a store fails fast") {
  const Checkpoint c = parse_checkpoint(serialize_checkpoint(sample(Integration::Input)));
  auto s = testing::tiny_setup(Integration::Input, 3, 3, 5);
  CHECK_THROWS_AS(predict(s.batch[0], c.params, nullptr), ValidationError);
  const ContextStore store = make_pseudo_store(s.batch, 3, 3, 1);
  CHECK_NOTHROW(predict(s.batch[0], c.params, &store));
}
