#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <cstddef>
#include <span>
#include <vector>

#include "atloss/error.hpp"
#include "atloss/nn/tensor.hpp"

namespace atloss::nn {

namespace detail {

// dst[y][x] += a * src[y + dy][x + dx] wherever the source index is in range.
template <typename T>
void axpy_shifted(T* dst, const T* src, std::ptrdiff_t h, std::ptrdiff_t w, std::ptrdiff_t dy, std::ptrdiff_t dx,
                  T a) {
    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
    const std::ptrdiff_t y1 = std::min(h, h - dy);
    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
    const std::ptrdiff_t x1 = std::min(w, w - dx);
    for (std::ptrdiff_t y = y0; y < y1; ++y) {
        T* d = dst + y * w;
        const T* s = src + (y + dy) * w + dx;
        for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += a * s[x];
    }
}

// acc[x] += a[y][x] * b[y + dy][x + dx]; the caller reduces acc.
template <typename T>
void dot_shifted(T* acc, const T* a, const T* b, std::ptrdiff_t h, std::ptrdiff_t w, std::ptrdiff_t dy,
                 std::ptrdiff_t dx) {
    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
    const std::ptrdiff_t y1 = std::min(h, h - dy);
    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
    const std::ptrdiff_t x1 = std::min(w, w - dx);
    for (std::ptrdiff_t y = y0; y < y1; ++y) {
        const T* pa = a + y * w;
        const T* pb = b + (y + dy) * w + dx;
        for (std::ptrdiff_t x = x0; x < x1; ++x) acc[x] += pa[x] * pb[x];
    }
}

// d[x] += w0 s[x-1] + w1 s[x] + w2 s[x+1], zero outside the row.
template <typename T>
void row_taps3(T* __restrict d, const T* __restrict s, std::ptrdiff_t w, T w0, T w1, T w2) {
    if (w == 1) {
        d[0] += w1 * s[0];
        return;
    }
    d[0] += w1 * s[0] + w2 * s[1];
    for (std::ptrdiff_t x = 1; x < w - 1; ++x) d[x] += w0 * s[x - 1] + w1 * s[x] + w2 * s[x + 1];
    d[w - 1] += w0 * s[w - 2] + w1 * s[w - 1];
}

// a0 += g[x] s[x-1], a1 += g[x] s[x], a2 += g[x] s[x+1] (zero outside the row).
template <typename T>
void row_dots3(T* __restrict a0, T* __restrict a1, T* __restrict a2, const T* __restrict g, const T* __restrict s,
               std::ptrdiff_t w) {
    for (std::ptrdiff_t x = 0; x < w; ++x) a1[x] += g[x] * s[x];
    for (std::ptrdiff_t x = 1; x < w; ++x) a0[x] += g[x] * s[x - 1];
    for (std::ptrdiff_t x = 0; x < w - 1; ++x) a2[x] += g[x] * s[x + 1];
}

// Sum with eight interleaved double accumulators; fixed order, so
// deterministic, and independent lanes let the compiler vectorize.
template <typename T, typename F>
double lane_sum(std::span<const T> v, F&& f) {
    double acc[8] = {};
    const std::size_t n8 = v.size() / 8 * 8;
    for (std::size_t i = 0; i < n8; i += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += f(static_cast<double>(v[i + l]), i + l);
    }
    for (std::size_t i = n8; i < v.size(); ++i) acc[i % 8] += f(static_cast<double>(v[i]), i);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// Branch-free expf (Cephes polynomial, ~1 ulp) that the compiler can vectorize.
inline float exp_vectorizable(float x) {
    x = x < -87.0f ? -87.0f : x;
    x = x > 88.0f ? 88.0f : x;
    constexpr float kRound = 12582912.0f; // 1.5 * 2^23
    const float n = (x * 1.44269504088896341f + kRound) - kRound;
    float r = x - n * 0.693359375f;
    r = r - n * -2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * r * r + r + 1.0f;
    const auto bits = static_cast<std::uint32_t>(static_cast<std::int32_t>(n) + 127) << 23;
    return p * std::bit_cast<float>(bits);
}

template <typename T>
T exp_fast(T x) {
    if constexpr (std::is_same_v<T, float>) {
        return exp_vectorizable(x);
    } else {
        return std::exp(x);
    }
}

} // namespace detail

/// Square convolution, stride 1, zero padding kernel/2 (size preserving).
/// Weights are laid out [out][in][ky][kx].
template <typename T>
struct Conv2d {
    std::size_t in_channels;
    std::size_t out_channels;
    std::size_t kernel;

    [[nodiscard]] std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel * kernel; }

    void check(std::span<const T> weight, std::span<const T> bias) const {
        if (kernel % 2 == 0) throw InvalidParameter("convolution kernel size must be odd");
        if (weight.size() != weight_count() || bias.size() != out_channels) {
            throw DimensionError("convolution parameter size mismatch");
        }
    }

    /// One sample: `in` holds in_channels planes of h*w, `out` out_channels planes.
    void forward_sample(const T* in, const T* weight, const T* bias, T* out, std::ptrdiff_t h,
                        std::ptrdiff_t w) const {
        const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
        const std::size_t plane = static_cast<std::size_t>(h * w);
        for (std::size_t o = 0; o < out_channels; ++o) {
            T* dst = out + o * plane;
            std::fill(dst, dst + plane, bias[o]);
            for (std::size_t c = 0; c < in_channels; ++c) {
                const T* src = in + c * plane;
                const T* wk = weight + (o * in_channels + c) * kernel * kernel;
                if (kernel == 3) {
                    for (std::ptrdiff_t y = 0; y < h; ++y) {
                        for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
                            const std::ptrdiff_t sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            detail::row_taps3(dst + y * w, src + sy * w, w, wk[ky * 3], wk[ky * 3 + 1], wk[ky * 3 + 2]);
                        }
                    }
                    continue;
                }
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        detail::axpy_shifted(dst, src, h, w, static_cast<std::ptrdiff_t>(ky) - pad,
                                             static_cast<std::ptrdiff_t>(kx) - pad, wk[ky * kernel + kx]);
                    }
                }
            }
        }
    }

    void backward_input_sample(const T* dout, const T* weight, T* din, std::ptrdiff_t h, std::ptrdiff_t w) const {
        const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
        const std::size_t plane = static_cast<std::size_t>(h * w);
        std::fill(din, din + in_channels * plane, T(0));
        for (std::size_t c = 0; c < in_channels; ++c) {
            T* dst = din + c * plane;
            for (std::size_t o = 0; o < out_channels; ++o) {
                const T* src = dout + o * plane;
                const T* wk = weight + (o * in_channels + c) * kernel * kernel;
                if (kernel == 3) {
                    // Correlation with the flipped kernel.
                    for (std::ptrdiff_t y = 0; y < h; ++y) {
                        for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
                            const std::ptrdiff_t sy = y + 1 - ky;
                            if (sy < 0 || sy >= h) continue;
                            detail::row_taps3(dst + y * w, src + sy * w, w, wk[ky * 3 + 2], wk[ky * 3 + 1], wk[ky * 3]);
                        }
                    }
                    continue;
                }
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        detail::axpy_shifted(dst, src, h, w, pad - static_cast<std::ptrdiff_t>(ky),
                                             pad - static_cast<std::ptrdiff_t>(kx), wk[ky * kernel + kx]);
                    }
                }
            }
        }
    }

    /// Adds one sample's contribution to dW and db. `scratch` needs 3*w entries.
    void accumulate_params_sample(const T* in, const T* dout, T* dweight, T* dbias, std::ptrdiff_t h,
                                  std::ptrdiff_t w, T* scratch) const {
        const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
        const std::size_t plane = static_cast<std::size_t>(h * w);
        for (std::size_t o = 0; o < out_channels; ++o) {
            const T* g = dout + o * plane;
            for (std::size_t c = 0; c < in_channels; ++c) {
                const T* src = in + c * plane;
                T* dw = dweight + (o * in_channels + c) * kernel * kernel;
                if (kernel == 3) {
                    for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
                        T* a0 = scratch;
                        T* a1 = a0 + w;
                        T* a2 = a1 + w;
                        std::fill(scratch, scratch + 3 * w, T(0));
                        for (std::ptrdiff_t y = 0; y < h; ++y) {
                            const std::ptrdiff_t sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            detail::row_dots3(a0, a1, a2, g + y * w, src + sy * w, w);
                        }
                        T s0 = 0, s1 = 0, s2 = 0;
                        for (std::ptrdiff_t x = 0; x < w; ++x) {
                            s0 += a0[x];
                            s1 += a1[x];
                            s2 += a2[x];
                        }
                        dw[ky * 3] += s0;
                        dw[ky * 3 + 1] += s1;
                        dw[ky * 3 + 2] += s2;
                    }
                    continue;
                }
                for (std::size_t ky = 0; ky < kernel; ++ky) {
                    for (std::size_t kx = 0; kx < kernel; ++kx) {
                        std::fill(scratch, scratch + w, T(0));
                        detail::dot_shifted(scratch, g, src, h, w, static_cast<std::ptrdiff_t>(ky) - pad,
                                            static_cast<std::ptrdiff_t>(kx) - pad);
                        T sum = 0;
                        for (std::ptrdiff_t x = 0; x < w; ++x) sum += scratch[x];
                        dw[ky * kernel + kx] += sum;
                    }
                }
            }
            std::fill(scratch, scratch + w, T(0));
            for (std::ptrdiff_t y = 0; y < h; ++y) {
                for (std::ptrdiff_t x = 0; x < w; ++x) scratch[x] += g[y * w + x];
            }
            T sum = 0;
            for (std::ptrdiff_t x = 0; x < w; ++x) sum += scratch[x];
            dbias[o] += sum;
        }
    }

    void forward(const Tensor4<T>& in, std::span<const T> weight, std::span<const T> bias, Tensor4<T>& out) const {
        check(weight, bias);
        if (in.channels() != in_channels) throw DimensionError("convolution input channel mismatch");
        const Shape4 s{in.batch(), out_channels, in.height(), in.width()};
        if (out.shape() != s) out.reset(s);
        const auto h = static_cast<std::ptrdiff_t>(in.height());
        const auto w = static_cast<std::ptrdiff_t>(in.width());
        for (std::size_t n = 0; n < in.batch(); ++n) {
            forward_sample(in.plane(n, 0).data(), weight.data(), bias.data(), out.plane(n, 0).data(), h, w);
        }
    }

    /// dL/d(input) given dL/d(output).
    void backward_input(const Tensor4<T>& dout, std::span<const T> weight, Tensor4<T>& din) const {
        if (dout.channels() != out_channels) throw DimensionError("convolution upstream channel mismatch");
        const Shape4 s{dout.batch(), in_channels, dout.height(), dout.width()};
        if (din.shape() != s) din.reset(s);
        const auto h = static_cast<std::ptrdiff_t>(dout.height());
        const auto w = static_cast<std::ptrdiff_t>(dout.width());
        for (std::size_t n = 0; n < dout.batch(); ++n) {
            backward_input_sample(dout.plane(n, 0).data(), weight.data(), din.plane(n, 0).data(), h, w);
        }
    }

    /// dL/dW and dL/db, overwritten.
    void backward_params(const Tensor4<T>& in, const Tensor4<T>& dout, std::span<T> dweight,
                         std::span<T> dbias) const {
        if (dweight.size() != weight_count() || dbias.size() != out_channels) {
            throw DimensionError("convolution gradient buffer mismatch");
        }
        std::fill(dweight.begin(), dweight.end(), T(0));
        std::fill(dbias.begin(), dbias.end(), T(0));
        const auto h = static_cast<std::ptrdiff_t>(in.height());
        const auto w = static_cast<std::ptrdiff_t>(in.width());
        std::vector<T> scratch(static_cast<std::size_t>(3 * w));
        for (std::size_t n = 0; n < in.batch(); ++n) {
            accumulate_params_sample(in.plane(n, 0).data(), dout.plane(n, 0).data(), dweight.data(), dbias.data(), h,
                                     w, scratch.data());
        }
    }
};

/// Per-(sample, channel) normalization with a learnable per-channel affine.
template <typename T>
struct InstanceNorm {
    double eps = 1e-5;

    struct Cache {
        Tensor4<T> normalized;  ///< x-hat, before the affine
        std::vector<T> inv_std; ///< one per (n, c)
    };

    /// One plane of `count` values; returns 1/sqrt(var + eps).
    T forward_plane(const T* x, std::size_t count, T scale, T shift, T* xh, T* y) const {
        const std::span<const T> xs(x, count);
        const auto cnt = static_cast<double>(count);
        const double mean = detail::lane_sum(xs, [](double v, std::size_t) { return v; }) / cnt;
        const double var = detail::lane_sum(xs, [mean](double v, std::size_t) {
                               const double d = v - mean;
                               return d * d;
                           }) / cnt;
        const T m = static_cast<T>(mean);
        const T is = static_cast<T>(1.0 / std::sqrt(var + eps));
        for (std::size_t i = 0; i < count; ++i) {
            xh[i] = (x[i] - m) * is;
            y[i] = scale * xh[i] + shift;
        }
        return is;
    }

    /// One plane; adds to dscale/dshift and overwrites dx.
    static void backward_plane(const T* g, const T* xh, std::size_t count, T inv_std, T scale, T* dx, T& dscale,
                               T& dshift) {
        const std::span<const T> gs(g, count);
        const double sum_g = detail::lane_sum(gs, [](double v, std::size_t) { return v; });
        const double sum_gx =
            detail::lane_sum(gs, [xh](double v, std::size_t i) { return v * static_cast<double>(xh[i]); });
        dscale += static_cast<T>(sum_gx);
        dshift += static_cast<T>(sum_g);
        // dx = inv_std * gamma * (g - mean(g) - xh * mean(g * xh))
        const T a = static_cast<T>(static_cast<double>(inv_std) * static_cast<double>(scale));
        const T mg = static_cast<T>(sum_g / static_cast<double>(count));
        const T mgx = static_cast<T>(sum_gx / static_cast<double>(count));
        for (std::size_t i = 0; i < count; ++i) dx[i] = a * (g[i] - mg - xh[i] * mgx);
    }

    void forward(const Tensor4<T>& in, std::span<const T> scale, std::span<const T> shift, Tensor4<T>& out,
                 Cache& cache) const {
        const std::size_t channels = in.channels();
        if (scale.size() != channels || shift.size() != channels) {
            throw DimensionError("instance norm parameter size mismatch");
        }
        if (out.shape() != in.shape()) out.reset(in.shape());
        if (cache.normalized.shape() != in.shape()) cache.normalized.reset(in.shape());
        cache.inv_std.resize(in.batch() * channels);
        const std::size_t count = in.shape().plane();
        for (std::size_t n = 0; n < in.batch(); ++n) {
            for (std::size_t c = 0; c < channels; ++c) {
                cache.inv_std[n * channels + c] = forward_plane(in.plane(n, c).data(), count, scale[c], shift[c],
                                                                cache.normalized.plane(n, c).data(),
                                                                out.plane(n, c).data());
            }
        }
    }

    /// dL/d(input), dL/d(scale), dL/d(shift) (parameter gradients overwritten).
    void backward(const Tensor4<T>& dout, const Cache& cache, std::span<const T> scale, Tensor4<T>& din,
                  std::span<T> dscale, std::span<T> dshift) const {
        const std::size_t channels = dout.channels();
        if (dout.shape() != cache.normalized.shape()) throw DimensionError("instance norm upstream shape mismatch");
        if (din.shape() != dout.shape()) din.reset(dout.shape());
        std::fill(dscale.begin(), dscale.end(), T(0));
        std::fill(dshift.begin(), dshift.end(), T(0));
        const std::size_t count = dout.shape().plane();
        for (std::size_t n = 0; n < dout.batch(); ++n) {
            for (std::size_t c = 0; c < channels; ++c) {
                backward_plane(dout.plane(n, c).data(), cache.normalized.plane(n, c).data(), count,
                               cache.inv_std[n * channels + c], scale[c], din.plane(n, c).data(), dscale[c],
                               dshift[c]);
            }
        }
    }
};

/// x * sigmoid(x).
template <typename T>
struct Swish {
    /// Stores sigmoid(x) in `sig` for the backward pass.
    static void forward(std::span<const T> in, std::span<T> out, std::span<T> sig) {
        const T* x = in.data();
        T* y = out.data();
        T* s = sig.data();
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            const T v = T(1) / (T(1) + detail::exp_fast(-x[i]));
            s[i] = v;
            y[i] = x[i] * v;
        }
    }

    /// d/dx x sigma(x) = sigma(x) (1 + x (1 - sigma(x))).
    static T derivative(T x, T s) { return s * (T(1) + x * (T(1) - s)); }

    static void backward(std::span<const T> dout, std::span<const T> in, std::span<const T> sig, std::span<T> din) {
        for (std::size_t i = 0; i < in.size(); ++i) din[i] = dout[i] * derivative(in[i], sig[i]);
    }
};

} // namespace atloss::nn
