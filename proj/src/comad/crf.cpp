#include "comad/crf.hpp"

#include "comad/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#endif

namespace comad {

void CrfParams::validate() const {
    if (!(theta_alpha > 0 && theta_beta > 0 && theta_gamma > 0)) {
        throw InvalidArgument("crf: bandwidths must be positive");
    }
    if (iterations < 0) {
        throw InvalidArgument("crf: iterations must be >= 0");
    }
    if (!(a >= 0 && b >= 0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw InvalidArgument("crf: kernel weights must be finite and non-negative");
    }
    if (!(sample_ratio > 0 && sample_ratio <= 1)) {
        throw InvalidArgument("crf: sample_ratio must be in (0, 1]");
    }
    if (min_samples < 1) {
        throw InvalidArgument("crf: min_samples must be >= 1");
    }
}

namespace {

constexpr double kFloor = 1e-8;

// exp(x) for x <= 0, ~1e-7 relative error, branch-free so the partner loop
// vectorises. Arguments are clamped at kCut: the weight floor e^-30 keeps
// every product in the message sums a normal float and is negligible next
// to the unit self-similar weights.
constexpr float kCut = -30.0f;

inline float fast_exp(float x) {
    x = std::max(x, kCut);
    const float t = x * 1.44269504088896341f;
    // floor(t + 0.5) via truncation of a positive number
    const int n = static_cast<int>(t + 64.5f) - 64;
    const float f = (t - static_cast<float>(n)) * 0.69314718055994531f;
    float p = 1.0f / 720.0f;
    p = p * f + 1.0f / 120.0f;
    p = p * f + 1.0f / 24.0f;
    p = p * f + 1.0f / 6.0f;
    p = p * f + 0.5f;
    p = p * f + 1.0f;
    p = p * f + 1.0f;
    const float scale = std::bit_cast<float>(static_cast<std::uint32_t>(n + 127) << 23);
    return p * scale;
}

// Partner memberships below this are stored as 0 for the same reason.
constexpr double kTinyQ = 1e-12;

// Appearance tables larger than this fall back to evaluating the kernel.
constexpr std::size_t kMaxTableBytes = std::size_t{96} << 20;

// Flush-to-zero / denormals-are-zero for the scope. The message sums mix
// weights spanning many orders of magnitude; subnormal products are
// irrelevant to the result and very slow on x86.
class DenormalGuard {
public:
#if defined(__SSE__) || defined(_M_X64)
    DenormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~DenormalGuard() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
public:
    DenormalGuard(const DenormalGuard&) = delete;
    DenormalGuard& operator=(const DenormalGuard&) = delete;
};

// acc[l] = sum_s weight(s) * q[l][s], labels handled in blocks of up to
// eight so every weight is computed once per block.
template <int C, class F>
void accumulate_block(std::size_t m, const float* const* q, double* acc, F weight) {
    float sum[C] = {};
    const float* r[C];
    for (int c = 0; c < C; ++c) {
        r[c] = q[c];
    }
#pragma omp simd reduction(+ : sum[:C])
    for (std::size_t s = 0; s < m; ++s) {
        const float v = weight(s);
        for (int c = 0; c < C; ++c) {
            sum[c] += v * r[c][s];
        }
    }
    for (int c = 0; c < C; ++c) {
        acc[c] = sum[c];
    }
}

template <class F>
void accumulate(std::size_t m, int k, const float* const* q, double* acc, F weight) {
    int l = 0;
    for (; l + 8 <= k; l += 8) {
        accumulate_block<8>(m, q + l, acc + l, weight);
    }
    switch (k - l) {
    case 7: accumulate_block<7>(m, q + l, acc + l, weight); break;
    case 6: accumulate_block<6>(m, q + l, acc + l, weight); break;
    case 5: accumulate_block<5>(m, q + l, acc + l, weight); break;
    case 4: accumulate_block<4>(m, q + l, acc + l, weight); break;
    case 3: accumulate_block<3>(m, q + l, acc + l, weight); break;
    case 2: accumulate_block<2>(m, q + l, acc + l, weight); break;
    case 1: accumulate_block<1>(m, q + l, acc + l, weight); break;
    default: break;
    }
}

// Colour-stratified partner sample. Pixels are binned into RGB cubes of
// side ~4 theta_beta; each bin contributes ceil(r * size) random members, at
// least min(size, kStratumMin), where r is sample_ratio raised so the total
// reaches min_samples. Each partner carries weight size / taken, so the
// weighted sum over partners is an unbiased estimate of the sum over all
// pixels. Rare colours are always represented.
constexpr std::size_t kStratumMin = 64;

struct Partners {
    std::vector<std::uint32_t> index;
    std::vector<double> weight;
};

Partners select_partners(const Image& img, const CrfParams& prm) {
    const std::size_t n = img.pixel_count();
    const auto rgb = img.data();
    const int side = std::max(1, static_cast<int>(std::lround(4.0 * prm.theta_beta)));
    std::vector<std::pair<std::uint32_t, std::uint32_t>> keyed(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t key = (static_cast<std::uint32_t>(rgb[i * 3] / side) << 16) |
                                  (static_cast<std::uint32_t>(rgb[i * 3 + 1] / side) << 8) |
                                  static_cast<std::uint32_t>(rgb[i * 3 + 2] / side);
        keyed[i] = {key, static_cast<std::uint32_t>(i)};
    }
    std::sort(keyed.begin(), keyed.end());
    const double ratio = std::min(1.0, std::max(prm.sample_ratio, static_cast<double>(prm.min_samples) / static_cast<double>(n)));

    std::mt19937_64 rng(prm.seed);
    std::vector<std::pair<std::uint32_t, double>> picked;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi < n && keyed[hi].first == keyed[lo].first) {
            ++hi;
        }
        const std::size_t size = hi - lo;
        std::size_t take = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(size)));
        take = std::min(size, std::max(take, kStratumMin));
        // partial Fisher-Yates inside the stratum
        for (std::size_t t = 0; t < take; ++t) {
            std::uniform_int_distribution<std::size_t> pick(lo + t, hi - 1);
            std::swap(keyed[lo + t], keyed[pick(rng)]);
            picked.emplace_back(keyed[lo + t].second, static_cast<double>(size) / static_cast<double>(take));
        }
        lo = hi;
    }
    std::sort(picked.begin(), picked.end());
    Partners out;
    out.index.reserve(picked.size());
    out.weight.reserve(picked.size());
    for (const auto& [idx, wgt] : picked) {
        out.index.push_back(idx);
        out.weight.push_back(wgt);
    }
    return out;
}

// Q_i(l) proportional to p~_i(l) * exp(m_i(l)), which equals
// exp(-U_i(l) - sum_{l' != l} m_i(l')) after normalisation.
void update_pixel(const double* unary_prob, const double* msg, double* q, int k) {
    double mx = msg[0];
    for (int l = 1; l < k; ++l) {
        mx = std::max(mx, msg[l]);
    }
    double z = 0.0;
    for (int l = 0; l < k; ++l) {
        q[l] = unary_prob[l] * std::exp(msg[l] - mx);
        z += q[l];
    }
    for (int l = 0; l < k; ++l) {
        q[l] /= z;
    }
}

std::vector<double> floored_unary(const SegmentationField& seg) {
    std::vector<double> p(seg.values().begin(), seg.values().end());
    for (auto& v : p) {
        v = std::max(v, kFloor);
    }
    return p;
}

std::vector<double> initial_q(const std::vector<double>& prob, std::size_t n, int k) {
    std::vector<double> q(prob.size());
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (int l = 0; l < k; ++l) {
            z += prob[i * k + l];
        }
        for (int l = 0; l < k; ++l) {
            q[i * k + l] = prob[i * k + l] / z;
        }
    }
    return q;
}

SegmentationField refine_exact(const SegmentationField& seg, const Image& img, const CrfParams& prm) {
    const int w = seg.width();
    const int k = seg.k();
    const std::size_t n = seg.pixel_count();
    const auto prob = floored_unary(seg);
    auto q = initial_q(prob, n, k);

    const double ia = 1.0 / (2.0 * prm.theta_alpha * prm.theta_alpha);
    const double ib = 1.0 / (2.0 * prm.theta_beta * prm.theta_beta);
    const double ig = 1.0 / (2.0 * prm.theta_gamma * prm.theta_gamma);
    const auto rgb = img.data();

    std::vector<double> msg(n * k);
    for (int it = 0; it < prm.iterations; ++it) {
        std::fill(msg.begin(), msg.end(), 0.0);
        // Kernel is symmetric: visit each unordered pair once.
        for (std::size_t i = 0; i < n; ++i) {
            const double yi = static_cast<double>(i / w);
            const double xi = static_cast<double>(i % w);
            const double ri = rgb[i * 3], gi = rgb[i * 3 + 1], bi = rgb[i * 3 + 2];
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dy = yi - static_cast<double>(j / w);
                const double dx = xi - static_cast<double>(j % w);
                const double dr = ri - rgb[j * 3], dg = gi - rgb[j * 3 + 1], db = bi - rgb[j * 3 + 2];
                const double dp = dx * dx + dy * dy;
                const double dc = dr * dr + dg * dg + db * db;
                const double wij = prm.a * std::exp(-dp * ia - dc * ib) + prm.b * std::exp(-dp * ig);
                for (int l = 0; l < k; ++l) {
                    msg[i * k + l] += wij * q[j * k + l];
                    msg[j * k + l] += wij * q[i * k + l];
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            update_pixel(&prob[i * k], &msg[i * k], &q[i * k], k);
        }
    }
    return SegmentationField(seg.height(), seg.width(), k, std::move(q));
}

SegmentationField refine_subsampled(const SegmentationField& seg, const Image& img, const CrfParams& prm) {
    const int h = seg.height();
    const int w = seg.width();
    const int k = seg.k();
    const std::size_t n = seg.pixel_count();
    const auto prob = floored_unary(seg);
    auto q = initial_q(prob, n, k);
    const auto rgb = img.data();

    // Appearance partners: a fixed pixel subset shared by all pixels.
    const auto [partners, weight] = select_partners(img, prm);
    const std::size_t m = partners.size();

    const float ia = static_cast<float>(1.0 / (2.0 * prm.theta_alpha * prm.theta_alpha));
    const float ib = static_cast<float>(1.0 / (2.0 * prm.theta_beta * prm.theta_beta));
    std::vector<float> px(m), py(m), pr(m), pg(m), pb(m);
    for (std::size_t s = 0; s < m; ++s) {
        const std::uint32_t j = partners[s];
        py[s] = static_cast<float>(j / w);
        px[s] = static_cast<float>(j % w);
        pr[s] = rgb[j * 3];
        pg[s] = rgb[j * 3 + 1];
        pb[s] = rgb[j * 3 + 2];
    }

    // Smoothness partners: exact within 4 sigma.
    const int radius = static_cast<int>(std::ceil(4.0 * prm.theta_gamma));
    const double ig = 1.0 / (2.0 * prm.theta_gamma * prm.theta_gamma);
    std::vector<double> taps;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            taps.push_back(prm.b * std::exp(-(dx * dx + dy * dy) * ig));
        }
    }
    const int span = 2 * radius + 1;

    // Separable weight tables: exp(-(dy^2) ia) * exp(-(dx^2) ia) * prod_c exp(-(dc^2) ib),
    // one row per coordinate / channel value, one column per partner.
    const bool use_tables = (static_cast<std::size_t>(h + w) + 3 * 256) * m * sizeof(float) <= kMaxTableBytes;
    std::vector<float> ty, tx, tc;
    if (use_tables && prm.a != 0.0) {
        ty.resize(static_cast<std::size_t>(h) * m);
        tx.resize(static_cast<std::size_t>(w) * m);
        tc.resize(3 * 256 * m);
        for (int v = 0; v < h; ++v) {
            for (std::size_t s = 0; s < m; ++s) {
                const double d = v - py[s];
                ty[v * m + s] = static_cast<float>(std::exp(-d * d * ia));
            }
        }
        for (int v = 0; v < w; ++v) {
            for (std::size_t s = 0; s < m; ++s) {
                const double d = v - px[s];
                tx[v * m + s] = static_cast<float>(std::exp(-d * d * ia));
            }
        }
        const float* chan[3] = {pr.data(), pg.data(), pb.data()};
        for (int c = 0; c < 3; ++c) {
            for (int v = 0; v < 256; ++v) {
                float* row = &tc[(static_cast<std::size_t>(c) * 256 + v) * m];
                for (std::size_t s = 0; s < m; ++s) {
                    const double d = v - chan[c][s];
                    row[s] = static_cast<float>(std::exp(-d * d * ib));
                }
            }
        }
    }

    std::vector<float> qs(static_cast<std::size_t>(k) * m);
    std::vector<const float*> qrows(k);
    std::vector<double> acc(k);
    std::vector<double> msg(k);
    std::vector<double> next(q.size());
    const float a = static_cast<float>(prm.a);
    const DenormalGuard guard;
    for (int it = 0; it < prm.iterations; ++it) {
        for (std::size_t s = 0; s < m; ++s) {
            for (int l = 0; l < k; ++l) {
                const double v = q[partners[s] * k + l];
                qs[static_cast<std::size_t>(l) * m + s] = v < kTinyQ ? 0.0f : static_cast<float>(v * weight[s]);
            }
        }
        for (int l = 0; l < k; ++l) {
            qrows[l] = &qs[static_cast<std::size_t>(l) * m];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const int yi = static_cast<int>(i / w);
            const int xi = static_cast<int>(i % w);
            if (a != 0.0f) {
                if (use_tables) {
                    const float* ey = &ty[static_cast<std::size_t>(yi) * m];
                    const float* ex = &tx[static_cast<std::size_t>(xi) * m];
                    const float* er = &tc[static_cast<std::size_t>(rgb[i * 3]) * m];
                    const float* eg = &tc[(256 + static_cast<std::size_t>(rgb[i * 3 + 1])) * m];
                    const float* eb = &tc[(512 + static_cast<std::size_t>(rgb[i * 3 + 2])) * m];
                    accumulate(
                        m, k, qrows.data(), acc.data(),
                        [=](std::size_t s) { return ey[s] * ex[s] * er[s] * eg[s] * eb[s]; });
                } else {
                    const float fy = static_cast<float>(yi), fx = static_cast<float>(xi);
                    const float ri = rgb[i * 3], gi = rgb[i * 3 + 1], bi = rgb[i * 3 + 2];
                    const float* cy = py.data();
                    const float* cx = px.data();
                    const float* cr = pr.data();
                    const float* cg = pg.data();
                    const float* cb = pb.data();
                    accumulate(m, k, qrows.data(), acc.data(), [=](std::size_t s) {
                        const float dy = fy - cy[s], dx = fx - cx[s];
                        const float dr = ri - cr[s], dg = gi - cg[s], db = bi - cb[s];
                        return fast_exp(-(dx * dx + dy * dy) * ia - (dr * dr + dg * dg + db * db) * ib);
                    });
                }
                // The weighted sum estimates the message over all pixels; the
                // pixel's own term (unit kernel value) is removed exactly.
                for (int l = 0; l < k; ++l) {
                    msg[l] = prm.a * std::max(acc[l] - q[i * k + l], 0.0);
                }
            } else {
                std::fill(msg.begin(), msg.end(), 0.0);
            }
            if (prm.b != 0.0) {
                for (int dy = -radius; dy <= radius; ++dy) {
                    const int y = yi + dy;
                    if (y < 0 || y >= h) {
                        continue;
                    }
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int x = xi + dx;
                        if (x < 0 || x >= w || (dx == 0 && dy == 0)) {
                            continue;
                        }
                        const double t = taps[static_cast<std::size_t>((dy + radius) * span + dx + radius)];
                        const std::size_t j = static_cast<std::size_t>(y) * w + x;
                        for (int l = 0; l < k; ++l) {
                            msg[l] += t * q[j * k + l];
                        }
                    }
                }
            }
            std::copy_n(&q[i * k], k, &next[i * k]);
            update_pixel(&prob[i * k], msg.data(), &next[i * k], k);
        }
        q.swap(next);
    }
    return SegmentationField(h, w, k, std::move(q));
}

} // namespace

SegmentationField crf_refine(const SegmentationField& seg, const Image& img, const CrfParams& params) {
    params.validate();
    if (seg.height() != img.height() || seg.width() != img.width()) {
        throw InvalidArgument("crf_refine: segmentation field and image resolution differ");
    }
    if (params.iterations == 0 || (params.a == 0.0 && params.b == 0.0)) {
        return seg;
    }
    return params.mode == CrfMode::Exact ? refine_exact(seg, img, params) : refine_subsampled(seg, img, params);
}

} // namespace comad
