// SPDX-License-Identifier: Apache-2.0
//
// Reference scenarios used by the figure recipes and the acceptance tests.
#pragma once

#include "fasris/channel_model.hpp"

namespace fasris::presets {

inline constexpr double kRefGain = 0.01;  // -20 dB at 1 m
inline constexpr double kAlphaRis = 2.1;
inline constexpr double kAlphaDirect = 3.2;
inline constexpr double kBsRis = 5.0;       // m
inline constexpr double kLinkAngle = 150.0;  // degrees between BS-RIS and RIS-user legs

double sigma2_from_db(double snr_db);  // snr_db is sigma^{-2} in dB

// Uncommon correlation with per-user angular profiles. M_tot = M. The
// cascaded gain is the product of the BS-RIS and RIS-user path losses.
// K = 12, L = 32 gives the ESR-vs-SNR reference setup.
Scenario uncommon_linear(int M, int K, int L, double snr_db);

// Common correlation on a 10x10 planar FAS with aperture W (wavelengths).
// Distances 20 + floor((k-1)/4) m, p_k = floor((k-1)/2) + 1.
Scenario common_planar(int M, int K, double snr_db, double W = 2.0);

// Homogeneous users of common_planar: t, u from the first user at 20 m / 22.9 m, p = 1.
Scenario common_planar_homogeneous(int M, int K, double snr_db, double W = 2.0);

// iid channels with the given gains.
Scenario iid(int M, int K, int L, double u, double t, double snr_db);

}  // namespace fasris::presets
