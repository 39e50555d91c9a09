#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "trajforge/core/container.hpp"
#include "trajforge/core/error.hpp"
#include "trajforge/core/random.hpp"
#include "trajforge/core/trajectory.hpp"

using namespace trajforge;
namespace fs = std::filesystem;

namespace {

Trajectory ramp_episode(Index n, Index ds = 2, Index da = 1) {
  Trajectory t = Trajectory::zeros(ds, da, n);
  for (Index i = 0; i <= n; ++i) t.states.col(i).setConstant(static_cast<double>(i));
  for (Index i = 0; i < n; ++i) {
    t.actions.col(i).setConstant(0.5 * static_cast<double>(i));
    t.rewards[i] = -static_cast<double>(i);
  }
  t.dones.back() = 1;
  return t;
}

// Values exactly representable in float32 so save/load is bit-exact.
Dataset random_dataset(std::size_t n, Index w, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.window = w;
  d.state_dim = 3;
  d.action_dim = 2;
  d.source_tag = "test";
  auto q = [&] { return static_cast<double>(static_cast<float>(rng.normal())); };
  for (std::size_t k = 0; k < n; ++k) {
    Trajectory t = Trajectory::zeros(3, 2, w);
    t.t0 = static_cast<std::int64_t>(k);
    for (Index i = 0; i < t.states.size(); ++i) t.states.data()[i] = q();
    for (Index i = 0; i < t.actions.size(); ++i) t.actions.data()[i] = q();
    for (Index i = 0; i < w; ++i) t.rewards[i] = q();
    const Index pad_from = static_cast<Index>(rng.index(static_cast<std::size_t>(w)) + 1);
    for (Index i = pad_from; i < w; ++i) {
      t.padding[static_cast<std::size_t>(i)] = 1;
      t.dones[static_cast<std::size_t>(i)] = 1;
    }
    t.dones[static_cast<std::size_t>(pad_from - 1)] = 1;
    d.add(std::move(t));
  }
  return d;
}

fs::path temp_path(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "trajforge_tests" / name;
  fs::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST_CASE("derive_seed separates tags and indices") {
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
}

TEST_CASE("window: exact fit, overlap and short episodes") {
  auto w1 = window(ramp_episode(16), 16, 16);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0].valid_length() == 16);

  auto w2 = window(ramp_episode(20), 16, 8);
  REQUIRE(w2.size() == 2);
  CHECK(w2[0].t0 == 0);
  CHECK(w2[1].t0 == 8);
  CHECK(w2[0].valid_length() == 16);
  CHECK(w2[1].valid_length() == 12);
  CHECK(w2[1].states(0, 0) == 8.0);
  // Overlap of W - stride transitions.
  CHECK(w2[0].actions.rightCols(8) == w2[1].actions.leftCols(8));

  auto w3 = window(ramp_episode(3), 16, 16);
  REQUIRE(w3.size() == 1);
  CHECK(w3[0].valid_length() == 3);
  for (std::size_t i = 3; i < 16; ++i) CHECK(w3[0].padding[i] == 1);
  CHECK(w3[0].states.col(16) == w3[0].states.col(3));
}

TEST_CASE("window: non-padding count equals min(W, remaining)") {
  for (Index n : {1, 5, 16, 17, 40}) {
    for (Index stride : {1, 3, 16}) {
      const auto ws = window(ramp_episode(n), 16, stride);
      for (std::size_t k = 0; k < ws.size(); ++k) {
        const Index start = static_cast<Index>(k) * stride;
        CHECK(ws[k].valid_length() == std::min<Index>(16, n - start));
        CHECK_NOTHROW(ws[k].validate());
      }
    }
  }
}

TEST_CASE("window: zero W or stride is rejected") {
  CHECK_THROWS_AS(window(ramp_episode(4), 0, 1), InvalidArgument);
  CHECK_THROWS_AS(window(ramp_episode(4), 4, 0), InvalidArgument);
}

TEST_CASE("validate rejects non-suffix padding and data after done") {
  Trajectory t = Trajectory::zeros(1, 1, 4);
  t.padding = {0, 1, 0, 0};
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t.padding = {0, 0, 0, 0};
  t.dones = {0, 1, 0, 0};
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("normalize: two scalar states give -1 and +1") {
  Dataset d;
  d.window = 1;
  d.state_dim = 1;
  d.action_dim = 1;
  Trajectory t = Trajectory::zeros(1, 1, 1);
  t.states(0, 0) = 0.0;
  t.states(0, 1) = 2.0;
  d.add(t);
  Dataset n = normalize(d);
  CHECK(n.trajectories[0].states(0, 0) == doctest::Approx(-1.0));
  CHECK(n.trajectories[0].states(0, 1) == doctest::Approx(1.0));
  CHECK(n.norm_stats->state_std[0] == doctest::Approx(1.0));
}

TEST_CASE("normalize: constant dimension is clamped with a warning") {
  Dataset d = random_dataset(4, 8, 3);
  for (auto& t : d.trajectories) t.states.row(1).setConstant(5.0);
  Dataset n = normalize(d);
  CHECK(n.norm_stats->state_std[1] == kDefaultStdFloor);
  CHECK_FALSE(n.norm_stats->warnings.empty());
  for (const auto& t : n.trajectories) CHECK(t.states.row(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalize: statistics, round trip and idempotence") {
  Dataset d = random_dataset(20, 8, 5);
  for (auto& t : d.trajectories) t.states.row(0).array() = 3.0 * t.states.row(0).array() + 7.0;
  Dataset n = normalize(d);
  const NormStats st = compute_norm_stats(n);
  for (Index i = 0; i < 3; ++i) {
    CHECK(std::abs(st.state_mean[i]) < 1e-9);
    CHECK(st.state_std[i] == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(std::abs(st.reward_mean) < 1e-9);

  Dataset back = denormalize(n);
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK((back.trajectories[k].states - d.trajectories[k].states).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((back.trajectories[k].actions - d.trajectories[k].actions).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((back.trajectories[k].rewards - d.trajectories[k].rewards).cwiseAbs().maxCoeff() < 1e-9);
  }
  Dataset again = normalize(n);
  CHECK(again == n);
}

TEST_CASE("save/load round trip is bit-exact") {
  for (std::size_t n : {0u, 1u, 7u}) {
    Dataset d = random_dataset(n, 6, 11 + n);
    if (n == 7) {
      d.norm_stats = compute_norm_stats(d);
      d.normalized = true;
    }
    const auto p = temp_path("roundtrip_" + std::to_string(n) + ".tfd");
    save(d, p);
    Dataset l = load(p);
    CHECK(l == d);
    CHECK(l.size() == n);
  }
}

TEST_CASE("load: distinct errors for malformed, truncated and mismatched files") {
  Dataset d = random_dataset(10, 4, 2);
  const auto p = temp_path("errors.tfd");
  save(d, p);

  auto kind_of = [](const fs::path& path) {
    try {
      load(path);
    } catch (const LoadError& e) {
      return e.kind();
    }
    return LoadErrorKind::io;
  };

  {
    // Header claims 10 trajectories, payload holds 9.
    Container c = read_container(p, kDatasetMagic);
    const std::size_t per = c.payload.size() / 10;
    c.payload.resize(per * 9);
    const auto q = temp_path("truncated.tfd");
    write_container(q, kDatasetMagic, c.header, c.payload);
    CHECK(kind_of(q) == LoadErrorKind::truncated_payload);
  }
  {
    Container c = read_container(p, kDatasetMagic);
    c.header["state_dim"] = 2;
    const auto q = temp_path("mismatch.tfd");
    write_container(q, kDatasetMagic, c.header, c.payload);
    CHECK(kind_of(q) == LoadErrorKind::dimension_mismatch);
  }
  {
    const auto q = temp_path("malformed.tfd");
    std::ofstream out(q, std::ios::binary);
    out << "TFDSET01";
    const char len[8] = {5, 0, 0, 0, 0, 0, 0, 0};
    out.write(len, 8);
    out << "{oops";
    out.close();
    CHECK(kind_of(q) == LoadErrorKind::malformed_header);
  }
  {
    Container c = read_container(p, kDatasetMagic);
    c.header.erase("W");
    const auto q = temp_path("missing_key.tfd");
    write_container(q, kDatasetMagic, c.header, c.payload);
    CHECK(kind_of(q) == LoadErrorKind::malformed_header);
  }
  {
    const auto q = temp_path("magic.tfd");
    std::ofstream out(q, std::ios::binary);
    out << "NOTMAGIC";
    out.close();
    CHECK(kind_of(q) == LoadErrorKind::bad_magic);
  }
}
