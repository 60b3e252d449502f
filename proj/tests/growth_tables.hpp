#pragma once

#include <array>

namespace ergo::tables {

// Printed 3-decimal (multiplicative) and 1-decimal (additive) growth tables,
// row i, column j > i, stimuli in set order.
constexpr std::array<double, 36> kMultTable{
    -0.705, -0.604, -0.504, -0.403, -0.302, -0.202, -0.101, 0.000,  //
    -0.504, -0.403, -0.302, -0.202, -0.101, 0.000,  0.101,          //
    -0.302, -0.202, -0.101, 0.000,  0.101,  0.201,                  //
    -0.101, 0.000,  0.101,  0.202,  0.302,                          //
    0.101,  0.202,  0.302,  0.403,                                  //
    0.302,  0.403,  0.504,                                          //
    0.504,  0.604,                                                  //
    0.705};
constexpr std::array<double, 36> kAddTable{
    -374.5, -321.0, -267.5, -214.0, -160.5, -107.0, -53.5, 0.0,  //
    -267.5, -214.0, -160.5, -107.0, -53.5,  0.0,    53.5,        //
    -160.5, -107.0, -53.5,  0.0,    53.5,   107.0,               //
    -53.5,  0.0,    53.5,   107.0,  160.5,                       //
    53.5,   107.0,  160.5,  214.0,                               //
    160.5,  214.0,  267.5,                                       //
    267.5,  321.0,                                               //
    374.5};

// Half-up rounding of 0.2015 to three decimals is ambiguous in the printed
// table, so exact cells can sit 5e-4 away; allow for double round-off on top.
constexpr double kTableTol = 5e-4 + 1e-12;

}  // namespace ergo::tables
