#include "epsim/channels.hpp"

#include <doctest.h>

#include <stdexcept>

#include <cmath>

using namespace epsim;

namespace {

// Table A1: pair index, signal channel, idler channel, wavelengths in nm.
struct TableRow {
    int k;
    int signal_ch;
    int idler_ch;
    double signal_nm;
    double idler_nm;
};

constexpr TableRow kTableA1[] = {
    {14, 19, 49, 1562.23, 1538.19}, {13, 20, 48, 1561.42, 1538.98},
    {12, 21, 47, 1560.61, 1539.77}, {11, 22, 46, 1559.79, 1540.56},
    {10, 23, 45, 1558.98, 1541.35}, {9, 24, 44, 1558.17, 1542.14},
    {8, 25, 43, 1557.36, 1542.94},  {7, 26, 42, 1556.56, 1543.73},
    {6, 27, 41, 1555.75, 1544.53},  {5, 28, 40, 1554.94, 1545.32},
    {4, 29, 39, 1554.13, 1546.12},  {3, 30, 38, 1553.33, 1546.92},
    {2, 31, 37, 1552.52, 1547.72},  {1, 32, 36, 1551.72, 1548.52},
};

}  // namespace

TEST_CASE("channel pairs reproduce the ITU table") {
    ChannelGrid grid;
    for (const auto& row : kTableA1) {
        const ChannelPair p = grid.channel_pair(row.k);
        CHECK(p.signal.index == row.signal_ch);
        CHECK(p.idler.index == row.idler_ch);
        CHECK(std::abs(p.signal_wavelength_nm() - row.signal_nm) < 0.01);
        CHECK(std::abs(p.idler_wavelength_nm() - row.idler_nm) < 0.01);
    }
    CHECK(std::abs(grid.pump().wavelength_nm() - 1550.12) < 0.01);
}

TEST_CASE("energy conservation is an exact integer identity") {
    ChannelGrid grid;
    for (int k = 1; k <= 14; ++k) {
        const ChannelPair p = grid.channel_pair(k);
        CHECK(p.signal.frequency_grid_units() + p.idler.frequency_grid_units() ==
              2 * grid.pump().frequency_grid_units());
    }
}

TEST_CASE("detuning") {
    ChannelGrid grid;
    CHECK(grid.detuning_hz(1) == doctest::Approx(200e9));
    CHECK(grid.detuning_hz(8) == doctest::Approx(900e9));
    CHECK(grid.detuning_hz(14) == doctest::Approx(1500e9));
    for (int k = 2; k <= 14; ++k) CHECK(grid.detuning_hz(k) > grid.detuning_hz(k - 1));
}

TEST_CASE("out-of-range pair index throws") {
    ChannelGrid grid;
    CHECK_THROWS_AS((void)grid.channel_pair(0), std::out_of_range);
    CHECK_THROWS_AS((void)grid.channel_pair(15), std::out_of_range);
}

TEST_CASE("all_pairs follows table order") {
    ChannelGrid grid;
    const auto pairs = grid.all_pairs();
    REQUIRE(pairs.size() == 14);
    CHECK(pairs.front().k == 14);
    CHECK(pairs.back().k == 1);
}
