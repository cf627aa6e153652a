#include "bsnn/checkpoint.hpp"
#include "bsnn/gpn.hpp"

#include <doctest.h>

#include <filesystem>
#include <cstring>
#include <sstream>

using namespace bsnn;

namespace {

NetworkConfig config(WeightMode mode, bool bn, Index in, Index out, AffineActivation act) {
  NetworkConfig c;
  c.width = 5;
  c.depth = 3;
  c.weight_mode = mode;
  c.batchnorm = bn;
  c.input_dim = in;
  c.output_dim = out;
  c.activation = std::move(act);
  return c;
}

void check_same(const Network& a, const Network& b) {
  REQUIRE(a.depth() == b.depth());
  REQUIRE(a.width() == b.width());
  CHECK(a.config().weight_mode == b.config().weight_mode);
  CHECK(a.config().activation.label() == b.config().activation.label());
  CHECK(a.config().activation.scale == b.config().activation.scale);
  CHECK(a.config().activation.shift == b.config().activation.shift);
  for (Index l = 0; l < a.depth(); ++l) {
    CHECK(a.parameter(l) == b.parameter(l));
    CHECK(a.layer(l).weight == b.layer(l).weight);
    CHECK(a.layer(l).bn.has_value() == b.layer(l).bn.has_value());
    if (a.layer(l).bn) {
      CHECK(a.layer(l).bn->gamma == b.layer(l).bn->gamma);
      CHECK(a.layer(l).bn->running_var == b.layer(l).bn->running_var);
    }
  }
  CHECK(a.input_adapter().has_value() == b.input_adapter().has_value());
  if (a.input_adapter()) CHECK(*a.input_adapter() == *b.input_adapter());
  if (a.output_adapter()) CHECK(*a.output_adapter() == *b.output_adapter());
}

}  // namespace

TEST_CASE("round trip in memory") {
  for (WeightMode mode : {WeightMode::HaarOrthogonal, WeightMode::RowNormalized}) {
    for (bool bn : {false, true}) {
      Network net = init_network(config(mode, bn, bn ? 7 : 0, bn ? 0 : 4, gpn_normalized(ActivationSpec::gelu())),
                                 Rng(3));
      if (bn) net.batchnorm(1).running_var = Vector::LinSpaced(5, 0.5, 2.0);
      std::stringstream ss;
      save_checkpoint(net, ss);
      check_same(net, load_checkpoint(ss));
    }
  }
}

TEST_CASE("round trip through a file; header layout") {
  const Network net = init_network(config(WeightMode::HaarOrthogonal, false, 0, 0, {ActivationSpec::tanh()}), Rng(1));
  const auto path = std::filesystem::temp_directory_path() / "bsnn_ckpt_test.bin";
  save_checkpoint(net, path);
  check_same(net, load_checkpoint(path));
  std::stringstream ss;
  save_checkpoint(net, ss);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "BSNN");
  auto u32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 3])) << 24;
  };
  CHECK(u32(4) == kCheckpointVersion);
  CHECK(u32(8) == 5);
  CHECK(u32(12) == 3);
  CHECK(u32(16) == 0);
  CHECK(u32(20) == 1);
  // First matrix entry, row-major.
  double first;
  std::memcpy(&first, bytes.data() + 24, 8);
  CHECK(first == net.layer(0).weight(0, 0));
  double second;
  std::memcpy(&second, bytes.data() + 32, 8);
  CHECK(second == net.layer(0).weight(0, 1));
  std::filesystem::remove(path);
}

TEST_CASE("activation tags") {
  CHECK(activation_tag({ActivationSpec::identity()}) == 0);
  CHECK(activation_tag({ActivationSpec::gelu()}) == 6);
  CHECK(activation_tag(gpn_normalized(ActivationSpec::tanh())) == (1u | 0x100u));
}

TEST_CASE("corrupt checkpoints are rejected") {
  const Network net = init_network(config(WeightMode::RowNormalized, true, 0, 0, {ActivationSpec::relu()}), Rng(2));
  std::stringstream ss;
  save_checkpoint(net, ss);
  const std::string good = ss.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  CHECK_THROWS_AS(load_checkpoint(a), FormatError);

  std::string bad_version = good;
  bad_version[4] = 9;
  std::stringstream b(bad_version);
  CHECK_THROWS_AS(load_checkpoint(b), FormatError);

  std::stringstream c(good.substr(0, good.size() - 5));
  CHECK_THROWS_AS(load_checkpoint(c), FormatError);

  std::string bad_kind = good;
  bad_kind[20] = 42;
  std::stringstream d(bad_kind);
  CHECK_THROWS_AS(load_checkpoint(d), FormatError);

  CHECK_THROWS_AS(load_checkpoint(std::filesystem::path("/nonexistent/ckpt.bin")), FormatError);
}

TEST_CASE("custom activations cannot be saved") {
  const auto sq = ActivationSpec::custom("sq", [](double x) { return x * x; }, [](double x) { return 2 * x; }, false);
  const Network net = init_network(config(WeightMode::HaarOrthogonal, false, 0, 0, {sq}), Rng(0));
  std::stringstream ss;
  CHECK_THROWS_AS(save_checkpoint(net, ss), InvalidArgument);
}
