#pragma once

#include "spikeline/gray_image.hpp"
#include "spikeline/isi_etfi.hpp"

namespace spikeline {

// 10 * log10(255^2 / MSE); +infinity when the images are identical.
double psnr(const GrayImage& a, const GrayImage& b);

// Single-scale SSIM over every 8x8 window (stride 1, uniform weights,
// population statistics), averaged. C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2.
double ssim(const GrayImage& a, const GrayImage& b);

// Fraction of pixels whose raw enhanced intensity is at least 255.
double overexposure_ratio(const EtfiImage& etfi);

}  // namespace spikeline
