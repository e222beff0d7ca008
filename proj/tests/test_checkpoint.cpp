#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "text2lip/checkpoint.hpp"
#include "text2lip/errors.hpp"
#include "text2lip/io_util.hpp"
#include "text2lip/rng.hpp"

using namespace t2l;

namespace {
std::filesystem::path tmp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("checkpoint round-trips names, shapes, payloads and config bitwise") {
  ParamStore ps;
  Rng rng(3);
  struct Spec { const char* name; int r, c; };
  for (auto [name, r, c] : {Spec{"enc.w", 4, 3}, {"enc.b", 1, 3}, {"head", 2, 5}}) {
    std::vector<double> vals(static_cast<std::size_t>(r) * c);
    for (auto& v : vals) v = rng.normal();
    ps.add(name, Tensor::from_data({r, c}, std::move(vals), true));
  }
  nlohmann::json config = {{"d_model", 8}, {"note", "probe"}};

  auto path = tmp_path("t2l_ckpt_roundtrip.bin");
  save_checkpoint(path, config, ps);
  Checkpoint loaded = load_checkpoint(path);

  CHECK(loaded.config == config);
  CHECK(loaded.params.items.size() == ps.items.size());
  for (std::size_t i = 0; i < ps.items.size(); ++i) {
    CHECK(loaded.params.items[i].first == ps.items[i].first);
    CHECK(loaded.params.items[i].second.shape() == ps.items[i].second.shape());
    CHECK(loaded.params.items[i].second.data() == ps.items[i].second.data());
  }
  std::filesystem::remove(path);
}

TEST_CASE("saving twice produces byte-identical files") {
  ParamStore ps;
  ps.add("w", Tensor::from_data({2, 2}, {0.1, -0.2, 0.3, -0.4}, true));
  auto p1 = tmp_path("t2l_ckpt_a.bin");
  auto p2 = tmp_path("t2l_ckpt_b.bin");
  save_checkpoint(p1, {{"seed", 7}}, ps);
  save_checkpoint(p2, {{"seed", 7}}, ps);
  CHECK(read_file(p1) == read_file(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("corrupt and truncated checkpoints are rejected") {
  ParamStore ps;
  ps.add("w", Tensor::from_data({2}, {1.0, 2.0}, true));
  auto path = tmp_path("t2l_ckpt_corrupt.bin");
  save_checkpoint(path, {}, ps);

  std::string bytes = read_file(path);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  atomic_write_file(path, bad_magic);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  atomic_write_file(path, bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  atomic_write_file(path, bytes + "xx");
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}
