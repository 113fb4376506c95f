#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "peneo/checkpoint.hpp"

using namespace peneo;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(17);
  ckpt::NamedTensors tensors;
  tensors.emplace_back("dec/W_proj", Tensor::randn({4, 8}, rng, 1.0));
  tensors.emplace_back("dec/head_le/W1", Tensor::randn({4, 4}, rng, 0.5));
  tensors.emplace_back("feat/doc-0001", Tensor::randn({6, 8}, rng, 2.0));
  // include values that stress the float encoding
  tensors[0].second.at(0, 0) = -0.0f;
  tensors[0].second.at(0, 1) = std::numeric_limits<float>::denorm_min();

  const std::string path = temp_path("peneo_ckpt_roundtrip.pene");
  ckpt::save(path, tensors);
  auto loaded = ckpt::load(path);
  ASSERT_EQ(loaded.size(), tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    EXPECT_EQ(loaded[i].first, tensors[i].first);
    ASSERT_EQ(loaded[i].second.dims(), tensors[i].second.dims());
    for (std::size_t k = 0; k < tensors[i].second.size(); ++k) {
      // bit-level comparison
      std::uint32_t a, b;
      std::memcpy(&a, &loaded[i].second[k], 4);
      std::memcpy(&b, &tensors[i].second[k], 4);
      EXPECT_EQ(a, b);
    }
  }

  // save -> load -> save produces identical bytes
  const std::string path2 = temp_path("peneo_ckpt_roundtrip2.pene");
  ckpt::save(path2, loaded);
  EXPECT_EQ(file_bytes(path), file_bytes(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST(Checkpoint, BadMagicRejected) {
  const std::string path = temp_path("peneo_ckpt_badmagic.pene");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE0000";
  }
  EXPECT_THROW(ckpt::load(path), DataError);
  std::remove(path.c_str());
}

TEST(Checkpoint, MissingFileFatal) {
  EXPECT_THROW(ckpt::load(temp_path("peneo_ckpt_does_not_exist.pene")), DataError);
}

TEST(Checkpoint, TruncatedPayloadRejected) {
  Rng rng(3);
  ckpt::NamedTensors tensors;
  tensors.emplace_back("w", Tensor::randn({8}, rng, 1.0));
  const std::string path = temp_path("peneo_ckpt_trunc.pene");
  ckpt::save(path, tensors);
  auto bytes = file_bytes(path);
  {
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  EXPECT_THROW(ckpt::load(path), DataError);
  std::remove(path.c_str());
}

TEST(Checkpoint, ParamStoreRoundTrip) {
  Rng rng(23);
  ParamStoreT<float> store;
  store.add("a/w", Tensor::randn({3, 3}, rng, 1.0));
  store.add("a/b", Tensor::randn({3}, rng, 1.0));
  const std::string path = temp_path("peneo_ckpt_store.pene");
  save_param_store(path, store);

  ParamStoreT<float> other;
  other.add("a/w", Tensor({3, 3}));
  other.add("a/b", Tensor({3}));
  load_param_store(ckpt::load(path), other);
  for (std::size_t s = 0; s < store.slots.size(); ++s) {
    for (std::size_t i = 0; i < store.slots[s]->value.size(); ++i) {
      EXPECT_EQ(store.slots[s]->value[i], other.slots[s]->value[i]);
    }
  }

  ParamStoreT<float> wrong;
  wrong.add("missing", Tensor({2}));
  EXPECT_THROW(load_param_store(ckpt::load(path), wrong), DataError);
  std::remove(path.c_str());
}
