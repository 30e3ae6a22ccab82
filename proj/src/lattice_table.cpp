#include "smoothquad/sampling.hpp"

#include <array>

namespace smoothquad {

namespace {

// Embedded component-by-component rank-1 lattice, order-2 Korobov kernel,
// product weights 1/j^2, optimised jointly for n = 2^4 .. 2^14 points.
// Produced offline by tools/lattice_cbc.cpp (`lattice_cbc 14 128`).
// For n < 2^14 use z mod n.
constexpr std::array<std::uint32_t, 128> kGeneratingVector = {
    4097, 663, 7031, 5519, 3229, 6267, 953, 1833,
    2211, 2745, 5749, 811, 531, 6327, 3987, 6489,
    2451, 847, 2147, 7925, 7053, 6449, 4413, 2637,
    4015, 3573, 3651, 1737, 4275, 7735, 1545, 6677,
    4395, 3671, 1213, 5859, 4163, 5989, 977, 1933,
    323, 465, 3189, 2725, 2095, 5065, 371, 4377,
    3279, 6989, 311, 6875, 1677, 8145, 1049, 4565,
    487, 2421, 1947, 5237, 4869, 7719, 3301, 1581,
    6127, 5467, 1305, 6611, 6707, 1553, 1763, 1455,
    4835, 6635, 777, 7065, 5245, 6161, 5165, 5245,
    3381, 4811, 561, 6091, 99, 27, 4499, 5545,
    1851, 5169, 2245, 4293, 5309, 6161, 3175, 3753,
    6873, 405, 3723, 7881, 1003, 35, 2245, 4547,
    1203, 4891, 6425, 1847, 2551, 3037, 5587, 4547,
    3825, 2735, 8007, 91, 8165, 445, 6703, 4309,
    4285, 3533, 4309, 5455, 31, 31, 161, 161,
    
};

}  // namespace

std::span<const std::uint32_t> default_generating_vector() { return kGeneratingVector; }

std::size_t default_lattice_max_points() { return std::size_t{1} << 14; }

}  // namespace smoothquad
