#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ddspin/model.hpp"

using namespace ddspin;

namespace {
std::set<Displacement> as_set(std::vector<Displacement> v) {
    return {v.begin(), v.end()};
}
} // namespace

TEST_CASE("ModelParams validation") {
    ModelParams p{.delta = 1.0, .omega = 0.5, .coupling = 1.0};
    CHECK_NOTHROW(p.validate());
    p.gamma = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.gamma = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.gamma = 1.0;
    p.delta = std::nan("");
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("Ising coupling enters the mu equations with opposite sign") {
    ModelParams p{.coupling = 2.5, .kind = InteractionKind::Ising};
    CHECK(p.mf_coupling() == -2.5);
    p.kind = InteractionKind::XY;
    CHECK(p.mf_coupling() == 2.5);
}

TEST_CASE("connectivity per geometry") {
    CHECK(LatticeSpec::fully_connected(10).connectivity() == 9);
    CHECK(LatticeSpec::hypercubic({4, 4}).connectivity() == 4);
    CHECK(LatticeSpec::hypercubic({4, 4, 4}).connectivity() == 6);
    CHECK(LatticeSpec::chain(8).connectivity() == 2);
    CHECK_THROWS_AS(LatticeSpec::hypercubic({2, 4}), std::invalid_argument);
}

TEST_CASE("neighbors on the square lattice") {
    const auto lat = LatticeSpec::hypercubic({4, 4});
    const auto nb = as_set(neighbors(lat, {0, 0}));
    const std::set<Displacement> want = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    CHECK(nb == want);
}

TEST_CASE("neighbors on the periodic 4-chain include the wrapped class") {
    const auto lat = LatticeSpec::chain(4);
    const auto nb = as_set(neighbors(lat, {1}));
    // offsets 0 and 2; the representative of 2 in the symmetric box is -2
    const std::set<Displacement> want = {wrap(lat, {0}), wrap(lat, {2})};
    CHECK(nb == want);
    CHECK(wrap(lat, {2}) == wrap(lat, {-2}));
}

TEST_CASE("3d neighbor count is the connectivity") {
    const auto lat = LatticeSpec::hypercubic({4, 4, 4});
    CHECK(neighbors(lat, {1, 1, 1}).size() == 6);
    // property: every displacement has exactly 2D neighbors
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> coord(-10, 10);
    for (int k = 0; k < 50; ++k) {
        const Displacement r = {coord(rng), coord(rng), coord(rng)};
        CHECK(neighbors(lat, r).size() == 6);
    }
}

TEST_CASE("nearest-neighbor identification") {
    const auto sq = LatticeSpec::hypercubic({4, 4});
    CHECK(is_nearest_neighbor(sq, {1, 0}));
    CHECK_FALSE(is_nearest_neighbor(sq, {1, 1}));
    const auto ring = LatticeSpec::chain(4);
    CHECK(is_nearest_neighbor(ring, {3})); // wraps to -1
    CHECK_THROWS_AS(is_nearest_neighbor(sq, {0, 0}), std::invalid_argument);
}

TEST_CASE("wrapping is idempotent and neighborliness is symmetric") {
    const auto lat = LatticeSpec::hypercubic({6, 5});
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> coord(-12, 12);
    for (int k = 0; k < 200; ++k) {
        const Displacement r = {coord(rng), coord(rng)};
        const Displacement w = wrap(lat, r);
        CHECK(wrap(lat, w) == w);

        for (const auto& n : neighbors(lat, r)) {
            const auto back = neighbors(lat, n);
            CHECK(std::count(back.begin(), back.end(), w) == 1);
        }
    }
}

TEST_CASE("fully-connected displacement classes") {
    const auto fc = LatticeSpec::fully_connected(8);
    CHECK(wrap(fc, {5}) == Displacement{1});
    CHECK(wrap(fc, {0}) == Displacement{0});
    CHECK(is_nearest_neighbor(fc, {3}));
    const auto nb = as_set(neighbors(fc, {1}));
    CHECK(nb == std::set<Displacement>{{0}, {1}});
    CHECK(as_set(neighbors(fc, {0})) == std::set<Displacement>{{1}});
}

TEST_CASE("nn pair lists") {
    CHECK(LatticeSpec::fully_connected(5).nn_pairs().size() == 10);
    CHECK(LatticeSpec::chain(4, Boundary::Open).nn_pairs().size() == 3);
    CHECK(LatticeSpec::chain(4).nn_pairs().size() == 4);
    CHECK(LatticeSpec::hypercubic({4, 4}).nn_pairs().size() == 32); // 2 * 16 bonds

    // a 2-site open chain and the 2-site FC graph are the same graph
    CHECK(LatticeSpec::chain(2, Boundary::Open).nn_pairs() ==
          LatticeSpec::fully_connected(2).nn_pairs());

    // 4x2 parallelogram with shear: 8 sites, every site keeps 4 bonds modulo
    // the doubled rung on the short axis
    const auto para = LatticeSpec::parallelogram(4, 2, 1);
    CHECK(para.num_sites() == 8);
    CHECK(!para.nn_pairs().empty());
}

TEST_CASE("physicality of Bloch vectors") {
    CHECK(is_physical(Bloch(0, 0, -1)));
    CHECK(is_physical(Bloch(0.5, 0.5, 0.5)));
    CHECK_FALSE(is_physical(Bloch(1, 1, 1)));
}
