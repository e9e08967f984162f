#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "topkmon/model.hpp"
#include "topkmon/trace.hpp"

using namespace topkmon;

TEST_CASE("filter crossing sides") {
  Filter f = Filter::between(Rat(1, 2), Rat(5, 2));
  CHECK(f.contains(1));
  CHECK(f.contains(2));
  CHECK_FALSE(f.contains(3));
  CHECK_FALSE(f.contains(0));
  CHECK(f.crossing(3) == ViolationSide::from_below);
  CHECK(f.crossing(0) == ViolationSide::from_above);
  CHECK_FALSE(f.crossing(2).has_value());

  Filter open = Filter::at_least(Rat(4));
  CHECK(open.contains(1'000'000'000));
  CHECK(open.crossing(3) == ViolationSide::from_above);
  CHECK_FALSE(open.crossing(4).has_value());

  CHECK(Filter::everything().contains(0));
}

TEST_CASE("violation detection lists ascending ids") {
  std::vector<Filter> filters = {
      Filter::at_least(Rat(10)),     // node 1
      Filter::at_most(Rat(5)),       // node 2
      Filter::between(Rat(2), Rat(8)),  // node 3
  };
  std::vector<Value> values = {3, 9, 4};
  auto violations = detect_violations(filters, values);
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].id == 1);
  CHECK(violations[0].side == ViolationSide::from_above);
  CHECK(violations[0].value == 3);
  CHECK(violations[1].id == 2);
  CHECK(violations[1].side == ViolationSide::from_below);
  CHECK(violations[1].value == 9);
}

TEST_CASE("ranking breaks ties toward the smaller id") {
  CHECK(outranks(5, 1, 5, 2));
  CHECK_FALSE(outranks(5, 2, 5, 1));
  CHECK(outranks(6, 9, 5, 1));

  std::vector<Value> values = {7, 7, 3};
  CHECK(exact_top_k(values, 2) == std::vector<NodeId>{1, 2});
  CHECK(exact_top_k(values, 1) == std::vector<NodeId>{1});
  CHECK(kth_value(values, 2) == 7);
  CHECK(kth_value(values, 3) == 3);
}

TEST_CASE("neighborhood around the kth value") {
  // v_k = 10 at k=1, slack 1/5: band [8, 12.5], nodes 1 and 2 inside.
  std::vector<Value> values = {10, 8, 5};
  auto nb = eps_neighborhood(values, 1, Rat(1, 5));
  CHECK(nb.kth_value == 10);
  CHECK(nb.a_lo == Rat(8));
  CHECK(nb.a_hi == Rat(25, 2));
  CHECK(nb.e_lo == nb.a_hi);
  CHECK(nb.k_set == std::vector<NodeId>{1, 2});
  CHECK(nb.sigma_t == 2);
  CHECK(band_nodes(values, 1, Rat(1, 5)) == std::vector<NodeId>{1, 2});
  CHECK(sigma_at(values, 1, Rat(1, 5)) == 2);
  CHECK(mandatory_nodes(values, 1, Rat(1, 5)).empty());

  // The band always brackets the kth value itself, with no rounding slop.
  CHECK(nb.a_lo <= nb.kth_value);
  CHECK(nb.kth_value <= nb.a_hi);
}

TEST_CASE("mandatory nodes sit strictly above the band") {
  std::vector<Value> values = {30, 8, 5};
  auto nb = eps_neighborhood(values, 2, Rat(1, 5));
  CHECK(nb.kth_value == 8);
  CHECK(nb.a_hi == Rat(10));
  CHECK(mandatory_nodes(values, 2, Rat(1, 5)) == std::vector<NodeId>{1});

  auto split = classify_output(values, 2, Rat(1, 5), {1, 2});
  CHECK(split.part_E == std::vector<NodeId>{1});
  CHECK(split.part_A == std::vector<NodeId>{2});
}

TEST_CASE("output validity") {
  std::vector<Value> values = {10, 8, 5};
  Rat eps(1, 5);
  CHECK(is_valid_output(values, 1, eps, {1}));
  CHECK(is_valid_output(values, 1, eps, {2}));   // 8 is inside the band
  CHECK_FALSE(is_valid_output(values, 1, eps, {3}));
  CHECK_FALSE(is_valid_output(values, 1, eps, {1, 2}));  // wrong size
  CHECK_FALSE(is_valid_output(values, 2, eps, {1, 1}));  // duplicate

  // Forced node left out.
  std::vector<Value> forced = {30, 8, 8};
  CHECK_FALSE(is_valid_output(forced, 1, Rat(1, 5), {2}));
  CHECK(is_valid_output(forced, 1, Rat(1, 5), {1}));
}

TEST_CASE("exact top-k always passes validity") {
  std::mt19937 gen(7);
  std::uniform_int_distribution<Value> val(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(gen() % 5);
    std::vector<Value> values(n);
    for (auto& v : values) v = val(gen);
    for (int k = 1; k < n; ++k)
      for (Rat eps : {Rat(1, 4), Rat(1, 2)})
        CHECK(is_valid_output(values, k, eps, exact_top_k(values, k)));
  }
}

TEST_CASE("lone band occupant forces a unique output") {
  // Band around v_2 = 50 holds only node 2, so {1, 2} is the only valid pair.
  std::vector<Value> values = {100, 50, 10, 5};
  Rat eps(1, 10);
  REQUIRE(sigma_at(values, 2, eps) == 1);
  int valid_count = 0;
  for (NodeId a = 1; a <= 4; ++a)
    for (NodeId b = a + 1; b <= 4; ++b)
      if (is_valid_output(values, 2, eps, {a, b})) {
        ++valid_count;
        CHECK(a == 1);
        CHECK(b == 2);
      }
  CHECK(valid_count == 1);
}

TEST_CASE("filter set validity") {
  Rat eps(1, 2);
  std::vector<Value> values = {10, 4};

  SECTION("boundary pair at exactly the slack factor") {
    // u = l/(1-eps): the tightest legal layout.
    std::vector<Filter> filters = {Filter::at_least(Rat(4)), Filter::at_most(Rat(8))};
    CHECK(is_valid_filter_set(filters, values, {1}, eps));
  }

  SECTION("containment matters") {
    std::vector<Filter> filters = {Filter::at_least(Rat(4)), Filter::at_most(Rat(8))};
    CHECK_FALSE(is_valid_filter_set(filters, {3, 4}, {1}, eps));  // member below its floor
    CHECK_FALSE(is_valid_filter_set(filters, {10, 9}, {1}, eps)); // outsider above its cap
  }

  SECTION("cross condition violations") {
    std::vector<Filter> filters = {Filter::at_least(Rat(3)), Filter::at_most(Rat(8))};
    // 3 < (1/2) * 8: member floor too low for the outsider cap.
    CHECK_FALSE(is_valid_filter_set(filters, values, {1}, eps));
  }

  SECTION("disjoint filters pass for any slack") {
    std::vector<Filter> filters = {Filter::at_least(Rat(9)), Filter::at_most(Rat(4))};
    for (Rat e : {Rat(1, 100), Rat(1, 4), Rat(99, 100)})
      CHECK(is_valid_filter_set(filters, values, {1}, e));
  }

  SECTION("unbounded outsider sinks it") {
    std::vector<Filter> filters = {Filter::at_least(Rat(4)), Filter::everything()};
    CHECK_FALSE(is_valid_filter_set(filters, values, {1}, eps));
  }

  SECTION("widening in the harmless direction never flips the verdict") {
    std::vector<Filter> filters = {Filter::at_least(Rat(4)), Filter::at_most(Rat(8))};
    REQUIRE(is_valid_filter_set(filters, values, {1}, eps));
    filters[0] = Filter::between(Rat(4), Rat(100));  // cap a member: still fine
    CHECK(is_valid_filter_set(filters, values, {1}, eps));
    filters[1] = Filter::between(Rat(0), Rat(8));    // floor an outsider: still fine
    CHECK(is_valid_filter_set(filters, values, {1}, eps));
  }
}

TEST_CASE("windowed extrema over node sets match brute force") {
  std::mt19937 gen(11);
  std::uniform_int_distribution<Value> val(0, 30);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(gen() % 4);
    int horizon = 3 + static_cast<int>(gen() % 6);
    Trace tr(n);
    for (int t = 0; t < horizon; ++t) {
      std::vector<Value> row(n);
      for (auto& v : row) v = val(gen);
      tr.append(row);
    }
    std::vector<NodeId> ids;
    for (NodeId id = 1; id <= n; ++id)
      if (gen() % 2 == 0) ids.push_back(id);
    if (ids.empty()) ids.push_back(1);

    for (Time a = 1; a <= horizon; ++a)
      for (Time b = a; b <= horizon; ++b) {
        Value lo = std::numeric_limits<Value>::max();
        Value hi = 0;
        for (NodeId id : ids)
          for (Time t = a; t <= b; ++t) {
            lo = std::min(lo, tr.value(t, id));
            hi = std::max(hi, tr.value(t, id));
          }
        auto got = window_min_max(tr, ids, a, b);
        CHECK(got.first == lo);
        CHECK(got.second == hi);
      }
  }
}
