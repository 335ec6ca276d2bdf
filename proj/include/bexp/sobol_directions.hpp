// Joe-Kuo direction numbers (new-joe-kuo-6) for Sobol sequence construction,
// dimensions 2..256. Dimension 1 is the van der Corput sequence and needs no
// table entry. Each row: primitive polynomial (coefficient bits, including
// leading/trailing 1) followed by the initial odd direction integers m_1..m_s.
#pragma once

#include <cstdint>

namespace bexp::detail {

inline constexpr int kSobolMaxDim = 256;
inline constexpr int kSobolMaxDegree = 11;

struct SobolDirectionRow {
  std::uint32_t poly;
  std::uint32_t degree;
  std::uint32_t m[11];
};

inline constexpr SobolDirectionRow kSobolDirections[255] = {
    {3, 1, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}},
    {7, 2, {1, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0}},
    {11, 3, {1, 3, 1, 0, 0, 0, 0, 0, 0, 0, 0}},
    {13, 3, {1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0}},
    {19, 4, {1, 1, 3, 3, 0, 0, 0, 0, 0, 0, 0}},
    {25, 4, {1, 3, 5, 13, 0, 0, 0, 0, 0, 0, 0}},
    {37, 5, {1, 1, 5, 5, 17, 0, 0, 0, 0, 0, 0}},
    {41, 5, {1, 1, 5, 5, 5, 0, 0, 0, 0, 0, 0}},
    {47, 5, {1, 1, 7, 11, 19, 0, 0, 0, 0, 0, 0}},
    {55, 5, {1, 1, 5, 1, 1, 0, 0, 0, 0, 0, 0}},
    {59, 5, {1, 1, 1, 3, 11, 0, 0, 0, 0, 0, 0}},
    {61, 5, {1, 3, 5, 5, 31, 0, 0, 0, 0, 0, 0}},
    {67, 6, {1, 3, 3, 9, 7, 49, 0, 0, 0, 0, 0}},
    {91, 6, {1, 1, 1, 15, 21, 21, 0, 0, 0, 0, 0}},
    {97, 6, {1, 3, 1, 13, 27, 49, 0, 0, 0, 0, 0}},
    {103, 6, {1, 1, 1, 15, 7, 5, 0, 0, 0, 0, 0}},
    {109, 6, {1, 3, 1, 15, 13, 25, 0, 0, 0, 0, 0}},
    {115, 6, {1, 1, 5, 5, 19, 61, 0, 0, 0, 0, 0}},
    {131, 7, {1, 3, 7, 11, 23, 15, 103, 0, 0, 0, 0}},
    {137, 7, {1, 3, 7, 13, 13, 15, 69, 0, 0, 0, 0}},
    {143, 7, {1, 1, 3, 13, 7, 35, 63, 0, 0, 0, 0}},
    {145, 7, {1, 3, 5, 9, 1, 25, 53, 0, 0, 0, 0}},
    {157, 7, {1, 3, 1, 13, 9, 35, 107, 0, 0, 0, 0}},
    {167, 7, {1, 3, 1, 5, 27, 61, 31, 0, 0, 0, 0}},
    {171, 7, {1, 1, 5, 11, 19, 41, 61, 0, 0, 0, 0}},
    {185, 7, {1, 3, 5, 3, 3, 13, 69, 0, 0, 0, 0}},
    {191, 7, {1, 1, 7, 13, 1, 19, 1, 0, 0, 0, 0}},
    {193, 7, {1, 3, 7, 5, 13, 19, 59, 0, 0, 0, 0}},
    {203, 7, {1, 1, 3, 9, 25, 29, 41, 0, 0, 0, 0}},
    {211, 7, {1, 3, 5, 13, 23, 1, 55, 0, 0, 0, 0}},
    {213, 7, {1, 3, 7, 3, 13, 59, 17, 0, 0, 0, 0}},
    {229, 7, {1, 3, 1, 3, 5, 53, 69, 0, 0, 0, 0}},
    {239, 7, {1, 1, 5, 5, 23, 33, 13, 0, 0, 0, 0}},
    {241, 7, {1, 1, 7, 7, 1, 61, 123, 0, 0, 0, 0}},
    {247, 7, {1, 1, 7, 9, 13, 61, 49, 0, 0, 0, 0}},
    {253, 7, {1, 3, 3, 5, 3, 55, 33, 0, 0, 0, 0}},
    {285, 8, {1, 3, 1, 15, 31, 13, 49, 245, 0, 0, 0}},
    {299, 8, {1, 3, 5, 15, 31, 59, 63, 97, 0, 0, 0}},
    {301, 8, {1, 3, 1, 11, 11, 11, 77, 249, 0, 0, 0}},
    {333, 8, {1, 3, 1, 11, 27, 43, 71, 9, 0, 0, 0}},
    {351, 8, {1, 1, 7, 15, 21, 11, 81, 45, 0, 0, 0}},
    {355, 8, {1, 3, 7, 3, 25, 31, 65, 79, 0, 0, 0}},
    {357, 8, {1, 3, 1, 1, 19, 11, 3, 205, 0, 0, 0}},
    {361, 8, {1, 1, 5, 9, 19, 21, 29, 157, 0, 0, 0}},
    {369, 8, {1, 3, 7, 11, 1, 33, 89, 185, 0, 0, 0}},
    {391, 8, {1, 3, 3, 3, 15, 9, 79, 71, 0, 0, 0}},
    {397, 8, {1, 3, 7, 11, 15, 39, 119, 27, 0, 0, 0}},
    {425, 8, {1, 1, 3, 1, 11, 31, 97, 225, 0, 0, 0}},
    {451, 8, {1, 1, 1, 3, 23, 43, 57, 177, 0, 0, 0}},
    {463, 8, {1, 3, 7, 7, 17, 17, 37, 71, 0, 0, 0}},
    {487, 8, {1, 3, 1, 5, 27, 63, 123, 213, 0, 0, 0}},
    {501, 8, {1, 1, 3, 5, 11, 43, 53, 133, 0, 0, 0}},
    {529, 9, {1, 3, 5, 5, 29, 17, 47, 173, 479, 0, 0}},
    {539, 9, {1, 3, 3, 11, 3, 1, 109, 9, 69, 0, 0}},
    {545, 9, {1, 1, 1, 5, 17, 39, 23, 5, 343, 0, 0}},
    {557, 9, {1, 3, 1, 5, 25, 15, 31, 103, 499, 0, 0}},
    {563, 9, {1, 1, 1, 11, 11, 17, 63, 105, 183, 0, 0}},
    {601, 9, {1, 1, 5, 11, 9, 29, 97, 231, 363, 0, 0}},
    {607, 9, {1, 1, 5, 15, 19, 45, 41, 7, 383, 0, 0}},
    {617, 9, {1, 3, 7, 7, 31, 19, 83, 137, 221, 0, 0}},
    {623, 9, {1, 1, 1, 3, 23, 15, 111, 223, 83, 0, 0}},
    {631, 9, {1, 1, 5, 13, 31, 15, 55, 25, 161, 0, 0}},
    {637, 9, {1, 1, 3, 13, 25, 47, 39, 87, 257, 0, 0}},
    {647, 9, {1, 1, 1, 11, 21, 53, 125, 249, 293, 0, 0}},
    {661, 9, {1, 1, 7, 11, 11, 7, 57, 79, 323, 0, 0}},
    {675, 9, {1, 1, 5, 5, 17, 13, 81, 3, 131, 0, 0}},
    {677, 9, {1, 1, 7, 13, 23, 7, 65, 251, 475, 0, 0}},
    {687, 9, {1, 3, 5, 1, 9, 43, 3, 149, 11, 0, 0}},
    {695, 9, {1, 1, 3, 13, 31, 13, 13, 255, 487, 0, 0}},
    {701, 9, {1, 3, 3, 1, 5, 63, 89, 91, 127, 0, 0}},
    {719, 9, {1, 1, 3, 3, 1, 19, 123, 127, 237, 0, 0}},
    {721, 9, {1, 1, 5, 7, 23, 31, 37, 243, 289, 0, 0}},
    {731, 9, {1, 1, 5, 11, 17, 53, 117, 183, 491, 0, 0}},
    {757, 9, {1, 1, 1, 5, 1, 13, 13, 209, 345, 0, 0}},
    {761, 9, {1, 1, 3, 15, 1, 57, 115, 7, 33, 0, 0}},
    {787, 9, {1, 3, 1, 11, 7, 43, 81, 207, 175, 0, 0}},
    {789, 9, {1, 3, 1, 1, 15, 27, 63, 255, 49, 0, 0}},
    {799, 9, {1, 3, 5, 3, 27, 61, 105, 171, 305, 0, 0}},
    {803, 9, {1, 1, 5, 3, 1, 3, 57, 249, 149, 0, 0}},
    {817, 9, {1, 1, 3, 5, 5, 57, 15, 13, 159, 0, 0}},
    {827, 9, {1, 1, 1, 11, 7, 11, 105, 141, 225, 0, 0}},
    {847, 9, {1, 3, 3, 5, 27, 59, 121, 101, 271, 0, 0}},
    {859, 9, {1, 3, 5, 9, 11, 49, 51, 59, 115, 0, 0}},
    {865, 9, {1, 1, 7, 1, 23, 45, 125, 71, 419, 0, 0}},
    {875, 9, {1, 1, 3, 5, 23, 5, 105, 109, 75, 0, 0}},
    {877, 9, {1, 1, 7, 15, 7, 11, 67, 121, 453, 0, 0}},
    {883, 9, {1, 3, 7, 3, 9, 13, 31, 27, 449, 0, 0}},
    {895, 9, {1, 3, 1, 15, 19, 39, 39, 89, 15, 0, 0}},
    {901, 9, {1, 1, 1, 1, 1, 33, 73, 145, 379, 0, 0}},
    {911, 9, {1, 3, 1, 15, 15, 43, 29, 13, 483, 0, 0}},
    {949, 9, {1, 1, 7, 3, 19, 27, 85, 131, 431, 0, 0}},
    {953, 9, {1, 3, 3, 3, 5, 35, 23, 195, 349, 0, 0}},
    {967, 9, {1, 3, 3, 7, 9, 27, 39, 59, 297, 0, 0}},
    {971, 9, {1, 1, 3, 9, 11, 17, 13, 241, 157, 0, 0}},
    {973, 9, {1, 3, 7, 15, 25, 57, 33, 189, 213, 0, 0}},
    {981, 9, {1, 1, 7, 1, 9, 55, 73, 83, 217, 0, 0}},
    {985, 9, {1, 3, 3, 13, 19, 27, 23, 113, 249, 0, 0}},
    {995, 9, {1, 3, 5, 3, 23, 43, 3, 253, 479, 0, 0}},
    {1001, 9, {1, 1, 5, 5, 11, 5, 45, 117, 217, 0, 0}},
    {1019, 9, {1, 3, 3, 7, 29, 37, 33, 123, 147, 0, 0}},
    {1033, 10, {1, 3, 1, 15, 5, 5, 37, 227, 223, 459, 0}},
    {1051, 10, {1, 1, 7, 5, 5, 39, 63, 255, 135, 487, 0}},
    {1063, 10, {1, 3, 1, 7, 9, 7, 87, 249, 217, 599, 0}},
    {1069, 10, {1, 1, 3, 13, 9, 47, 7, 225, 363, 247, 0}},
    {1125, 10, {1, 3, 7, 13, 19, 13, 9, 67, 9, 737, 0}},
    {1135, 10, {1, 3, 5, 5, 19, 59, 7, 41, 319, 677, 0}},
    {1153, 10, {1, 1, 5, 3, 31, 63, 15, 43, 207, 789, 0}},
    {1163, 10, {1, 1, 7, 9, 13, 39, 3, 47, 497, 169, 0}},
    {1221, 10, {1, 3, 1, 7, 21, 17, 97, 19, 415, 905, 0}},
    {1239, 10, {1, 3, 7, 1, 3, 31, 71, 111, 165, 127, 0}},
    {1255, 10, {1, 1, 5, 11, 1, 61, 83, 119, 203, 847, 0}},
    {1267, 10, {1, 3, 3, 13, 9, 61, 19, 97, 47, 35, 0}},
    {1279, 10, {1, 1, 7, 7, 15, 29, 63, 95, 417, 469, 0}},
    {1293, 10, {1, 3, 1, 9, 25, 9, 71, 57, 213, 385, 0}},
    {1305, 10, {1, 3, 5, 13, 31, 47, 101, 57, 39, 341, 0}},
    {1315, 10, {1, 1, 3, 3, 31, 57, 125, 173, 365, 551, 0}},
    {1329, 10, {1, 3, 7, 1, 13, 57, 67, 157, 451, 707, 0}},
    {1341, 10, {1, 1, 1, 7, 21, 13, 105, 89, 429, 965, 0}},
    {1347, 10, {1, 1, 5, 9, 17, 51, 45, 119, 157, 141, 0}},
    {1367, 10, {1, 3, 7, 7, 13, 45, 91, 9, 129, 741, 0}},
    {1387, 10, {1, 3, 7, 1, 23, 57, 67, 141, 151, 571, 0}},
    {1413, 10, {1, 1, 3, 11, 17, 47, 93, 107, 375, 157, 0}},
    {1423, 10, {1, 3, 3, 5, 11, 21, 43, 51, 169, 915, 0}},
    {1431, 10, {1, 1, 5, 3, 15, 55, 101, 67, 455, 625, 0}},
    {1441, 10, {1, 3, 5, 9, 1, 23, 29, 47, 345, 595, 0}},
    {1479, 10, {1, 3, 7, 7, 5, 49, 29, 155, 323, 589, 0}},
    {1509, 10, {1, 3, 3, 7, 5, 41, 127, 61, 261, 717, 0}},
    {1527, 10, {1, 3, 7, 7, 17, 23, 117, 67, 129, 1009, 0}},
    {1531, 10, {1, 1, 3, 13, 11, 39, 21, 207, 123, 305, 0}},
    {1555, 10, {1, 1, 3, 9, 29, 3, 95, 47, 231, 73, 0}},
    {1557, 10, {1, 3, 1, 9, 1, 29, 117, 21, 441, 259, 0}},
    {1573, 10, {1, 3, 1, 13, 21, 39, 125, 211, 439, 723, 0}},
    {1591, 10, {1, 1, 7, 3, 17, 63, 115, 89, 49, 773, 0}},
    {1603, 10, {1, 3, 7, 13, 11, 33, 101, 107, 63, 73, 0}},
    {1615, 10, {1, 1, 5, 5, 13, 57, 63, 135, 437, 177, 0}},
    {1627, 10, {1, 1, 3, 7, 27, 63, 93, 47, 417, 483, 0}},
    {1657, 10, {1, 1, 3, 1, 23, 29, 1, 191, 49, 23, 0}},
    {1663, 10, {1, 1, 3, 15, 25, 55, 9, 101, 219, 607, 0}},
    {1673, 10, {1, 3, 1, 7, 7, 19, 51, 251, 393, 307, 0}},
    {1717, 10, {1, 3, 3, 3, 25, 55, 17, 75, 337, 3, 0}},
    {1729, 10, {1, 1, 1, 13, 25, 17, 65, 45, 479, 413, 0}},
    {1747, 10, {1, 1, 7, 7, 27, 49, 99, 161, 213, 727, 0}},
    {1759, 10, {1, 3, 5, 1, 23, 5, 43, 41, 251, 857, 0}},
    {1789, 10, {1, 3, 3, 7, 11, 61, 39, 87, 383, 835, 0}},
    {1815, 10, {1, 1, 3, 15, 13, 7, 29, 7, 505, 923, 0}},
    {1821, 10, {1, 3, 7, 1, 5, 31, 47, 157, 445, 501, 0}},
    {1825, 10, {1, 1, 3, 7, 1, 43, 9, 147, 115, 605, 0}},
    {1849, 10, {1, 3, 3, 13, 5, 1, 119, 211, 455, 1001, 0}},
    {1863, 10, {1, 1, 3, 5, 13, 19, 3, 243, 75, 843, 0}},
    {1869, 10, {1, 3, 7, 7, 1, 19, 91, 249, 357, 589, 0}},
    {1877, 10, {1, 1, 1, 9, 1, 25, 109, 197, 279, 411, 0}},
    {1881, 10, {1, 3, 1, 15, 23, 57, 59, 135, 191, 75, 0}},
    {1891, 10, {1, 1, 5, 15, 29, 21, 39, 253, 383, 349, 0}},
    {1917, 10, {1, 3, 3, 5, 19, 45, 61, 151, 199, 981, 0}},
    {1933, 10, {1, 3, 5, 13, 9, 61, 107, 141, 141, 1, 0}},
    {1939, 10, {1, 3, 1, 11, 27, 25, 85, 105, 309, 979, 0}},
    {1969, 10, {1, 3, 3, 11, 19, 7, 115, 223, 349, 43, 0}},
    {2011, 10, {1, 1, 7, 9, 21, 39, 123, 21, 275, 927, 0}},
    {2035, 10, {1, 1, 7, 13, 15, 41, 47, 243, 303, 437, 0}},
    {2041, 10, {1, 1, 1, 7, 7, 3, 15, 99, 409, 719, 0}},
    {2053, 11, {1, 3, 3, 15, 27, 49, 113, 123, 113, 67, 469}},
    {2071, 11, {1, 3, 7, 11, 3, 23, 87, 169, 119, 483, 199}},
    {2091, 11, {1, 1, 5, 15, 7, 17, 109, 229, 179, 213, 741}},
    {2093, 11, {1, 1, 5, 13, 11, 17, 25, 135, 403, 557, 1433}},
    {2119, 11, {1, 3, 1, 1, 1, 61, 67, 215, 189, 945, 1243}},
    {2147, 11, {1, 1, 7, 13, 17, 33, 9, 221, 429, 217, 1679}},
    {2149, 11, {1, 1, 3, 11, 27, 3, 15, 93, 93, 865, 1049}},
    {2161, 11, {1, 3, 7, 7, 25, 41, 121, 35, 373, 379, 1547}},
    {2171, 11, {1, 3, 3, 9, 11, 35, 45, 205, 241, 9, 59}},
    {2189, 11, {1, 3, 1, 7, 3, 51, 7, 177, 53, 975, 89}},
    {2197, 11, {1, 1, 3, 5, 27, 1, 113, 231, 299, 759, 861}},
    {2207, 11, {1, 3, 3, 15, 25, 29, 5, 255, 139, 891, 2031}},
    {2217, 11, {1, 3, 1, 1, 13, 9, 109, 193, 419, 95, 17}},
    {2225, 11, {1, 1, 7, 9, 3, 7, 29, 41, 135, 839, 867}},
    {2255, 11, {1, 1, 7, 9, 25, 49, 123, 217, 113, 909, 215}},
    {2257, 11, {1, 1, 7, 3, 23, 15, 43, 133, 217, 327, 901}},
    {2273, 11, {1, 1, 3, 3, 13, 53, 63, 123, 477, 711, 1387}},
    {2279, 11, {1, 1, 3, 15, 7, 29, 75, 119, 181, 957, 247}},
    {2283, 11, {1, 1, 1, 11, 27, 25, 109, 151, 267, 99, 1461}},
    {2293, 11, {1, 3, 7, 15, 5, 5, 53, 145, 11, 725, 1501}},
    {2317, 11, {1, 3, 7, 1, 9, 43, 71, 229, 157, 607, 1835}},
    {2323, 11, {1, 3, 3, 13, 25, 1, 5, 27, 471, 349, 127}},
    {2341, 11, {1, 1, 1, 1, 23, 37, 9, 221, 269, 897, 1685}},
    {2345, 11, {1, 1, 3, 3, 31, 29, 51, 19, 311, 553, 1969}},
    {2363, 11, {1, 3, 7, 5, 5, 55, 17, 39, 475, 671, 1529}},
    {2365, 11, {1, 1, 7, 1, 1, 35, 47, 27, 437, 395, 1635}},
    {2373, 11, {1, 1, 7, 3, 13, 23, 43, 135, 327, 139, 389}},
    {2377, 11, {1, 3, 7, 3, 9, 25, 91, 25, 429, 219, 513}},
    {2385, 11, {1, 1, 3, 5, 13, 29, 119, 201, 277, 157, 2043}},
    {2395, 11, {1, 3, 5, 3, 29, 57, 13, 17, 167, 739, 1031}},
    {2419, 11, {1, 3, 3, 5, 29, 21, 95, 27, 255, 679, 1531}},
    {2421, 11, {1, 3, 7, 15, 9, 5, 21, 71, 61, 961, 1201}},
    {2431, 11, {1, 3, 5, 13, 15, 57, 33, 93, 459, 867, 223}},
    {2435, 11, {1, 1, 1, 15, 17, 43, 127, 191, 67, 177, 1073}},
    {2447, 11, {1, 1, 1, 15, 23, 7, 21, 199, 75, 293, 1611}},
    {2475, 11, {1, 3, 7, 13, 15, 39, 21, 149, 65, 741, 319}},
    {2477, 11, {1, 3, 7, 11, 23, 13, 101, 89, 277, 519, 711}},
    {2489, 11, {1, 3, 7, 15, 19, 27, 85, 203, 441, 97, 1895}},
    {2503, 11, {1, 3, 1, 3, 29, 25, 21, 155, 11, 191, 197}},
    {2521, 11, {1, 1, 7, 5, 27, 11, 81, 101, 457, 675, 1687}},
    {2533, 11, {1, 3, 1, 5, 25, 5, 65, 193, 41, 567, 781}},
    {2551, 11, {1, 3, 1, 5, 11, 15, 113, 77, 411, 695, 1111}},
    {2561, 11, {1, 1, 3, 9, 11, 53, 119, 171, 55, 297, 509}},
    {2567, 11, {1, 1, 1, 1, 11, 39, 113, 139, 165, 347, 595}},
    {2579, 11, {1, 3, 7, 11, 9, 17, 101, 13, 81, 325, 1733}},
    {2581, 11, {1, 3, 1, 1, 21, 43, 115, 9, 113, 907, 645}},
    {2601, 11, {1, 1, 7, 3, 9, 25, 117, 197, 159, 471, 475}},
    {2633, 11, {1, 3, 1, 9, 11, 21, 57, 207, 485, 613, 1661}},
    {2657, 11, {1, 1, 7, 7, 27, 55, 49, 223, 89, 85, 1523}},
    {2669, 11, {1, 1, 5, 3, 19, 41, 45, 51, 447, 299, 1355}},
    {2681, 11, {1, 3, 1, 13, 1, 33, 117, 143, 313, 187, 1073}},
    {2687, 11, {1, 1, 7, 7, 5, 11, 65, 97, 377, 377, 1501}},
    {2693, 11, {1, 3, 1, 1, 21, 35, 95, 65, 99, 23, 1239}},
    {2705, 11, {1, 1, 5, 9, 3, 37, 95, 167, 115, 425, 867}},
    {2717, 11, {1, 3, 3, 13, 1, 37, 27, 189, 81, 679, 773}},
    {2727, 11, {1, 1, 3, 11, 1, 61, 99, 233, 429, 969, 49}},
    {2731, 11, {1, 1, 1, 7, 25, 63, 99, 165, 245, 793, 1143}},
    {2739, 11, {1, 1, 5, 11, 11, 43, 55, 65, 71, 283, 273}},
    {2741, 11, {1, 1, 5, 5, 9, 3, 101, 251, 355, 379, 1611}},
    {2773, 11, {1, 1, 1, 15, 21, 63, 85, 99, 49, 749, 1335}},
    {2783, 11, {1, 1, 5, 13, 27, 9, 121, 43, 255, 715, 289}},
    {2793, 11, {1, 3, 1, 5, 27, 19, 17, 223, 77, 571, 1415}},
    {2799, 11, {1, 1, 5, 3, 13, 59, 125, 251, 195, 551, 1737}},
    {2801, 11, {1, 3, 3, 15, 13, 27, 49, 105, 389, 971, 755}},
    {2811, 11, {1, 3, 5, 15, 23, 43, 35, 107, 447, 763, 253}},
    {2819, 11, {1, 3, 5, 11, 21, 3, 17, 39, 497, 407, 611}},
    {2825, 11, {1, 1, 7, 13, 15, 31, 113, 17, 23, 507, 1995}},
    {2833, 11, {1, 1, 7, 15, 3, 15, 31, 153, 423, 79, 503}},
    {2867, 11, {1, 1, 7, 9, 19, 25, 23, 171, 505, 923, 1989}},
    {2879, 11, {1, 1, 5, 9, 21, 27, 121, 223, 133, 87, 697}},
    {2881, 11, {1, 1, 5, 5, 9, 19, 107, 99, 319, 765, 1461}},
    {2891, 11, {1, 1, 3, 3, 19, 25, 3, 101, 171, 729, 187}},
    {2905, 11, {1, 1, 3, 1, 13, 23, 85, 93, 291, 209, 37}},
    {2911, 11, {1, 1, 1, 15, 25, 25, 77, 253, 333, 947, 1073}},
    {2917, 11, {1, 1, 3, 9, 17, 29, 55, 47, 255, 305, 2037}},
    {2927, 11, {1, 3, 3, 9, 29, 63, 9, 103, 489, 939, 1523}},
    {2941, 11, {1, 3, 7, 15, 7, 31, 89, 175, 369, 339, 595}},
    {2951, 11, {1, 3, 7, 13, 25, 5, 71, 207, 251, 367, 665}},
    {2955, 11, {1, 3, 3, 3, 21, 25, 75, 35, 31, 321, 1603}},
    {2963, 11, {1, 1, 1, 9, 11, 1, 65, 5, 11, 329, 535}},
    {2965, 11, {1, 1, 5, 3, 19, 13, 17, 43, 379, 485, 383}},
    {2991, 11, {1, 3, 5, 13, 13, 9, 85, 147, 489, 787, 1133}},
    {2999, 11, {1, 3, 1, 1, 5, 51, 37, 129, 195, 297, 1783}},
    {3005, 11, {1, 1, 3, 15, 19, 57, 59, 181, 455, 697, 2033}},
    {3017, 11, {1, 3, 7, 1, 27, 9, 65, 145, 325, 189, 201}},
    {3035, 11, {1, 3, 1, 15, 31, 23, 19, 5, 485, 581, 539}},
    {3037, 11, {1, 1, 7, 13, 11, 15, 65, 83, 185, 847, 831}},
    {3047, 11, {1, 3, 5, 7, 7, 55, 73, 15, 303, 511, 1905}},
    {3053, 11, {1, 3, 5, 9, 7, 21, 45, 15, 397, 385, 597}},
    {3083, 11, {1, 3, 7, 3, 23, 13, 73, 221, 511, 883, 1265}},
    {3085, 11, {1, 1, 3, 11, 1, 51, 73, 185, 33, 975, 1441}},
    {3097, 11, {1, 3, 3, 9, 19, 59, 21, 39, 339, 37, 143}},
    {3103, 11, {1, 1, 7, 1, 31, 33, 19, 167, 117, 635, 639}},
    {3159, 11, {1, 1, 1, 3, 5, 13, 59, 83, 355, 349, 1967}},
    {3169, 11, {1, 1, 1, 5, 19, 3, 53, 133, 97, 863, 983}},
};

}  // namespace bexp::detail
