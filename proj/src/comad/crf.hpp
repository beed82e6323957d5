#pragma once

#include "comad/image.hpp"
#include "comad/segmentation_field.hpp"

#include <cstdint>

namespace comad {

enum class CrfMode {
    Exact,      ///< all N^2 pixel pairs; the reference
    Subsampled, ///< appearance kernel over a colour-stratified pixel sample, smoothness kernel windowed
};

/// Fully connected Gaussian CRF with Potts compatibility:
///   w(i,j) = a exp(-|p_i-p_j|^2 / 2 theta_alpha^2 - |I_i-I_j|^2 / 2 theta_beta^2)
///          + b exp(-|p_i-p_j|^2 / 2 theta_gamma^2)
/// Positions in pixels, colours as 0..255 RGB.
struct CrfParams {
    double a = 4.0;
    double b = 3.0;
    double theta_alpha = 67.0;
    double theta_beta = 3.0;
    double theta_gamma = 1.0;
    int iterations = 2;
    CrfMode mode = CrfMode::Subsampled;
    /// Fraction of each colour stratum used as appearance-kernel partners (small strata are taken whole).
    double sample_ratio = 0.05;
    /// Lower bound on the total partner count.
    int min_samples = 256;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const CrfParams&) const = default;
};

/// Mean-field inference. Unary = -log(max(membership, 1e-8)). Each iteration
/// computes messages m_i(l) = sum_{j != i} w(i,j) Q_j(l), applies the Potts
/// transform and renormalises. Returns the input unchanged when there is no
/// pairwise term (a = b = 0) or iterations = 0.
SegmentationField crf_refine(const SegmentationField& seg, const Image& img, const CrfParams& params);

} // namespace comad
