// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "rshmm/error.hpp"
#include "rshmm/panel_data.hpp"

using namespace rshmm;

namespace {

const char* kSchema = R"({
  "responses": [{"column": "y1", "categories": 3}],
  "x_L": ["x"], "x_U": ["x"], "z_L": ["z"], "z_U": []
})";

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

PanelDataset parse(const std::string& csv) {
  return parse_panel(csv, PanelSchema::from_json_text(kSchema));
}

}  // namespace

TEST_CASE("minimal valid panel") {
  const auto d = parse("unit_id,time,y1,x,z\n1,1,1,0,0\n1,2,3,0,1\n2,1,2,1,0\n2,2,2,1,1\n");
  CHECK(d.n == 2);
  CHECK(d.T == 2);
  CHECK(d.r() == 1);
  CHECK(d.y_at(0, 1, 0) == 2);
  CHECK(d.y_at(1, 0, 0) == 1);
  CHECK(d.x_L(1, 0) == 1.0);
  CHECK(d.z_L(0 * 2 + 1, 0) == 1.0);
  CHECK(d.z_U.cols() == 0);
}

TEST_CASE("occasions may come in any order; units keep first-appearance order") {
  const auto a = parse("unit_id,time,y1,x,z\n1,1,1,0,0\n1,2,3,0,1\n2,1,2,1,0\n2,2,2,1,1\n");
  const auto b = parse("unit_id,time,y1,x,z\n1,2,3,0,1\n2,2,2,1,1\n2,1,2,1,0\n1,1,1,0,0\n");
  CHECK(a.y == b.y);
  CHECK(a.x_L == b.x_L);
}

TEST_CASE("input errors") {
  SUBCASE("missing occasion") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,1,0,0\n1,2,3,0,1\n2,1,2,1,0\n"); }) ==
          ErrorCode::MissingCell);
  }
  SUBCASE("category above c") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,7,0,0\n1,2,3,0,1\n"); }) ==
          ErrorCode::CategoryOutOfRange);
  }
  SUBCASE("category zero") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,0,0,0\n1,2,3,0,1\n"); }) ==
          ErrorCode::CategoryOutOfRange);
  }
  SUBCASE("non-integer category") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,1.5,0,0\n1,2,3,0,1\n"); }) ==
          ErrorCode::NonIntegerCategory);
  }
  SUBCASE("duplicate occasion") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,1,0,0\n1,1,2,0,0\n1,2,3,0,1\n"); }) ==
          ErrorCode::DuplicateCell);
  }
  SUBCASE("ragged row") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,1,0\n1,2,3,0,1\n"); }) ==
          ErrorCode::RaggedCovariates);
  }
  SUBCASE("missing column") {
    CHECK(code_of([] { parse("unit_id,time,y1,x\n1,1,1,0\n1,2,3,0\n"); }) == ErrorCode::Parse);
  }
  SUBCASE("single occasion") {
    CHECK(code_of([] { parse("unit_id,time,y1,x,z\n1,1,1,0,0\n"); }) == ErrorCode::InvalidArgument);
  }
  SUBCASE("bad schema") {
    CHECK(code_of([] { PanelSchema::from_json_text("{"); }) == ErrorCode::Parse);
  }
}

TEST_CASE("one-hot schema columns") {
  const char* schema = R"({
    "responses": [{"column": "y", "categories": 2}],
    "x_L": [{"column": "region", "level": "north"}, {"column": "region", "level": "south"}],
    "x_U": [], "z_L": [], "z_U": []
  })";
  const auto d = parse_panel("unit_id,time,y,region\na,1,1,north\na,2,2,north\nb,1,2,centre\nb,2,1,centre\n",
                             PanelSchema::from_json_text(schema));
  CHECK(d.x_L.cols() == 2);
  CHECK(d.x_L(0, 0) == 1.0);
  CHECK(d.x_L(0, 1) == 0.0);
  CHECK(d.x_L(1, 0) == 0.0);
  CHECK(d.x_L(1, 1) == 0.0);
  CHECK(d.x_L_names[0] == "region=north");
}

TEST_CASE("configuration index") {
  SUBCASE("shared covariates give one configuration per occasion") {
    const auto d = parse("unit_id,time,y1,x,z\n1,1,1,0,1\n1,2,3,0,1\n2,1,2,0,1\n2,2,2,0,1\n");
    const auto idx = index_configurations(d);
    for (const auto& g : idx.by_time) CHECK(g.size() == 1);
  }
  SUBCASE("two units with distinct x and equal z") {
    const auto d = parse("unit_id,time,y1,x,z\n1,1,1,0,5\n1,2,3,0,1\n2,1,2,1,7\n2,2,2,1,1\n");
    const auto idx = index_configurations(d);
    // z is absent at the first occasion, and x keeps the stacked key apart later on.
    CHECK(idx.by_time[0].size() == 2);
    CHECK(idx.by_time[1].size() == 2);
  }
  SUBCASE("first occasion ignores z") {
    const auto d = parse("unit_id,time,y1,x,z\n1,1,1,0,5\n1,2,3,0,1\n2,1,2,0,7\n2,2,2,0,2\n");
    const auto idx = index_configurations(d);
    CHECK(idx.by_time[0].size() == 1);
    CHECK(idx.by_time[1].size() == 2);
  }
}

TEST_CASE("configuration lists partition the units [property]") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 40), T = 2 + static_cast<int>(rng() % 4);
    auto d = PanelDataset::shaped(n, T, {3}, 2, 1, 1, 1);
    std::uniform_int_distribution<int> lev(0, 2);
    for (int i = 0; i < n; ++i) {
      d.x_L(i, 0) = lev(rng);
      d.x_L(i, 1) = lev(rng);
      d.x_U(i, 0) = lev(rng);
      for (int t = 0; t < T; ++t) {
        d.z_L(i * T + t, 0) = lev(rng);
        d.z_U(i * T + t, 0) = lev(rng);
      }
    }
    const auto idx = index_configurations(d);
    REQUIRE(static_cast<int>(idx.by_time.size()) == T);
    for (const auto& g : idx.by_time) {
      std::set<int> seen;
      std::size_t total = 0;
      for (const auto& m : g.members) {
        total += m.size();
        seen.insert(m.begin(), m.end());
      }
      CHECK(total == static_cast<std::size_t>(n));
      CHECK(seen.size() == static_cast<std::size_t>(n));
    }
  }
}

TEST_CASE("write and reload round trip") {
  std::mt19937_64 rng(3);
  auto d = PanelDataset::shaped(7, 3, {4, 2}, 2, 1, 2, 1);
  for (int i = 0; i < d.n; ++i) {
    d.x_L.row(i) << (rng() % 2), 0.25 * (rng() % 5);
    d.x_U(i, 0) = rng() % 3;
    for (int t = 0; t < d.T; ++t) {
      d.z_L.row(i * d.T + t) << (rng() % 2), -1.5;
      d.z_U(i * d.T + t, 0) = rng() % 2;
      d.y_at(i, t, 0) = rng() % 4;
      d.y_at(i, t, 1) = rng() % 2;
    }
  }
  const auto dir = std::filesystem::temp_directory_path() / "rshmm_panel_roundtrip";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "p.csv").string(), schema = (dir / "p.schema.json").string();
  write_panel(d, csv, schema);
  const auto back = load_panel(csv, PanelSchema::load(schema));
  CHECK(back.n == d.n);
  CHECK(back.T == d.T);
  CHECK(back.y == d.y);
  CHECK(back.x_L == d.x_L);
  CHECK(back.x_U == d.x_U);
  CHECK(back.z_L == d.z_L);
  CHECK(back.z_U == d.z_U);
  CHECK(panel_to_csv(back) == panel_to_csv(d));
  std::filesystem::remove_all(dir);
}

TEST_CASE("estimation index groups") {
  auto d = PanelDataset::shaped(4, 3, {2}, 1, 1, 1, 1);
  d.x_L.col(0) << 0, 1, 0, 1;
  d.x_U.col(0) << 0, 0, 0, 0;
  const auto idx = index_for_estimation(d);
  CHECK(idx.init_L.size() == 2);
  CHECK(idx.init_U.size() == 1);
  CHECK(idx.trans_L.group_of.size() == 4u * 2u);
}
