#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "plaae/checkpoint.hpp"
#include "plaae/error.hpp"
#include "plaae/model.hpp"
#include "plaae/optim.hpp"
#include "plaae/rng.hpp"

using namespace plaae;
using checkpoint::NamedTensor;
using checkpoint::Snapshot;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

model::ModelConfig probe_config() {
  model::ModelConfig cfg;
  cfg.encoder = {2, 3, 3, 5, 8, 6};
  cfg.decoder.strides = {2, 2};
  cfg.decoder.residual_layers_per_block = {1, 1};
  cfg.decoder.residual_channels = 4;
  cfg.discriminator.kernels = {3};
  cfg.discriminator.strides = {1};
  cfg.discriminator.channels = {2};
  cfg.discriminator.pool_factors = {1};
  cfg.frontend.n_mels = 4;
  cfg.frontend.hop = 4;
  cfg.frontend.window = 8;
  cfg.frontend.fft_size = 16;
  return cfg;
}

Snapshot hostile_snapshot() {
  Snapshot snap;
  snap.config = probe_config();
  snap.step = 12345;
  snap.rng_state = {0, UINT64_MAX, 0x8000000000000000ull, 1};
  NamedTensor odd;
  odd.name = "odd";
  odd.shape = {2, 3};
  odd.data = {std::numeric_limits<double>::quiet_NaN(),
              -0.0,
              std::numeric_limits<double>::denorm_min(),
              std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(),
              1.0 + std::numeric_limits<double>::epsilon()};
  snap.tensors.push_back(odd);
  NamedTensor plain;
  plain.name = "plain";
  plain.shape = {4};
  plain.data = {1.5, -2.25, 3.0, 1e-300};
  snap.tensors.push_back(plain);
  return snap;
}

}  // namespace

TEST_CASE("save then load then save reproduces the file byte for byte") {
  const Snapshot snap = hostile_snapshot();
  const std::string a = tmp_path("plaae_ckpt_a.bin");
  const std::string b = tmp_path("plaae_ckpt_b.bin");
  checkpoint::save_checkpoint(a, snap);
  const Snapshot loaded = checkpoint::load_checkpoint(a);
  checkpoint::save_checkpoint(b, loaded);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("payload values survive with their exact bit patterns") {
  const Snapshot snap = hostile_snapshot();
  const std::string path = tmp_path("plaae_ckpt_bits.bin");
  checkpoint::save_checkpoint(path, snap);
  const Snapshot loaded = checkpoint::load_checkpoint(path);

  REQUIRE(loaded.tensors.size() == 2);
  CHECK(loaded.schema_version == snap.schema_version);
  CHECK(loaded.step == 12345);
  CHECK(loaded.rng_state == snap.rng_state);
  const NamedTensor* odd = checkpoint::find_tensor(loaded, "odd");
  REQUIRE(odd != nullptr);
  CHECK(odd->shape == std::vector<int>{2, 3});
  CHECK(same_bits(odd->data, snap.tensors[0].data));
  CHECK(std::isnan(odd->data[0]));
  CHECK(std::signbit(odd->data[1]));
  CHECK(odd->data[1] == 0.0);
  CHECK(odd->data[2] == std::numeric_limits<double>::denorm_min());
  const NamedTensor* plain = checkpoint::find_tensor(loaded, "plain");
  REQUIRE(plain != nullptr);
  CHECK(same_bits(plain->data, snap.tensors[1].data));
  CHECK(checkpoint::find_tensor(loaded, "absent") == nullptr);
}

TEST_CASE("the embedded architecture config round-trips through the header") {
  Snapshot snap = hostile_snapshot();
  const std::string path = tmp_path("plaae_ckpt_cfg.bin");
  checkpoint::save_checkpoint(path, snap);
  const Snapshot loaded = checkpoint::load_checkpoint(path);
  CHECK(model::model_config_json(loaded.config) == model::model_config_json(snap.config));
  CHECK(loaded.config.encoder.n_blocks == 2);
  CHECK(loaded.config.decoder.strides == std::vector<int>{2, 2});
  CHECK(loaded.config.frontend.hop == 4);
}

TEST_CASE("snapshot and restore move model parameters bit-exactly") {
  const model::ModelConfig cfg = probe_config();
  rng::Stream init_a(7);
  rng::Stream init_b(8);
  model::PlaaeModel src = model::build_model(cfg, init_a);
  model::PlaaeModel dst = model::build_model(cfg, init_b);

  bool differed = false;
  model::visit_params(dst, [&](const std::string& name, Tensor& t) {
    model::visit_params(src, [&](const std::string& other, Tensor& s) {
      if (other == name && !same_bits(t.data, s.data)) differed = true;
    });
  });
  REQUIRE(differed);

  const std::string path = tmp_path("plaae_ckpt_model.bin");
  checkpoint::save_checkpoint(path, checkpoint::snapshot_model(src, 42));
  const Snapshot loaded = checkpoint::load_checkpoint(path);
  CHECK(loaded.step == 42);
  checkpoint::restore_model(dst, loaded);

  model::visit_params(dst, [&](const std::string& name, Tensor& t) {
    model::visit_params(src, [&](const std::string& other, Tensor& s) {
      if (other == name) CHECK(same_bits(t.data, s.data));
    });
  });

  Tensor features({cfg.encoder.input_channels, 12});
  rng::Stream noise(3);
  for (double& v : features.data) v = noise.uniform(-1.0, 1.0);
  const Tensor out_src = model::encode(src, features);
  const Tensor out_dst = model::encode(dst, features);
  CHECK(same_bits(out_src.data, out_dst.data));
}

TEST_CASE("restore rejects missing tensors and shape mismatches") {
  const model::ModelConfig cfg = probe_config();
  rng::Stream init(7);
  model::PlaaeModel m = model::build_model(cfg, init);
  Snapshot snap = checkpoint::snapshot_model(m, 0);

  Snapshot missing = snap;
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_AS(checkpoint::restore_model(m, missing), Error);
  try {
    checkpoint::restore_model(m, missing);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
  }

  Snapshot bent = snap;
  bent.tensors[0].shape = {1, static_cast<int>(bent.tensors[0].data.size())};
  CHECK_THROWS_AS(checkpoint::restore_model(m, bent), Error);
  try {
    checkpoint::restore_model(m, bent);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape);
  }

  Snapshot extra = snap;
  NamedTensor stray;
  stray.name = "not_a_parameter";
  stray.shape = {1};
  stray.data = {0.0};
  extra.tensors.push_back(stray);
  CHECK_NOTHROW(checkpoint::restore_model(m, extra));
}

TEST_CASE("corrupt files raise io errors that name the path") {
  const std::string path = tmp_path("plaae_ckpt_corrupt.bin");

  CHECK_THROWS_AS(checkpoint::load_checkpoint(tmp_path("plaae_ckpt_nonexistent.bin")), Error);

  spit(path, "no newline at all");
  CHECK_THROWS_AS(checkpoint::load_checkpoint(path), Error);

  spit(path, "{broken json\n");
  CHECK_THROWS_AS(checkpoint::load_checkpoint(path), Error);
  try {
    checkpoint::load_checkpoint(path);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }

  const Snapshot snap = hostile_snapshot();
  checkpoint::save_checkpoint(path, snap);
  std::string bytes = slurp(path);
  bytes.resize(bytes.size() - 9);
  spit(path, bytes);
  CHECK_THROWS_AS(checkpoint::load_checkpoint(path), Error);

  // A count that disagrees with the declared shape is rejected up front.
  Snapshot bad = snap;
  bad.tensors[0].shape = {7};
  const std::string mism = tmp_path("plaae_ckpt_mism.bin");
  CHECK_THROWS_AS(
      [&] {
        checkpoint::save_checkpoint(mism, bad);
        checkpoint::load_checkpoint(mism);
      }(),
      Error);
}

TEST_CASE("optimizer moments ride along under a prefix and extract exactly") {
  optim::AdamState st;
  st.step = 17;
  st.m["encoder.w"] = {0.25, -0.5, 1e-12};
  st.m["decoder.b"] = {3.0};
  st.v["encoder.w"] = {0.0625, 0.25, 1e-24};
  st.v["decoder.b"] = {9.0};

  Snapshot snap = hostile_snapshot();
  snap.step = 17;
  checkpoint::append_adam_state(snap, "opt_g", st);
  const std::string path = tmp_path("plaae_ckpt_opt.bin");
  checkpoint::save_checkpoint(path, snap);
  const Snapshot loaded = checkpoint::load_checkpoint(path);

  const optim::AdamState back = checkpoint::extract_adam_state(loaded, "opt_g");
  CHECK(back.step == 17);
  REQUIRE(back.m.size() == 2);
  REQUIRE(back.v.size() == 2);
  CHECK(same_bits(back.m.at("encoder.w"), st.m.at("encoder.w")));
  CHECK(same_bits(back.m.at("decoder.b"), st.m.at("decoder.b")));
  CHECK(same_bits(back.v.at("encoder.w"), st.v.at("encoder.w")));
  CHECK(same_bits(back.v.at("decoder.b"), st.v.at("decoder.b")));

  // A different prefix sees none of these moments.
  const optim::AdamState other = checkpoint::extract_adam_state(loaded, "opt_d");
  CHECK(other.m.empty());
  CHECK(other.v.empty());

  // The original payload tensors stay reachable next to the moments.
  CHECK(checkpoint::find_tensor(loaded, "plain") != nullptr);
  CHECK(checkpoint::find_tensor(loaded, "opt_g.encoder.w.m") != nullptr);
}
