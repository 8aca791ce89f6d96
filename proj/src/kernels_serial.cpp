#include "plaae/kernels.hpp"

#include <cmath>
#include <numeric>

// Reference loops. Every output element is a plain left-to-right sum over the
// in-range taps; loop bounds realize the zero padding so the inner statements
// are bare multiply-adds. The parallel backend reproduces the same per-element
// term order with the same statement shape, so the two agree bit for bit.
// Gradient buffers are accumulated into, not overwritten. The one reduction
// with a fixed richer shape is the weight gradient: its time sum runs in
// eight interleaved lanes (lane l takes elements l, l+8, ... of the term
// sequence), the remainder past the last full block sums in order, and the
// lanes combine pairwise before the tail joins. Both backends implement that
// scheme, so it is part of the kernel contract; when fewer than eight terms
// exist it degenerates to the plain in-order sum.

namespace plaae::kernels::serial {

void conv1d_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y) {
  const int T_out = d.out_len();
  const int S = d.stride;
  for (int o = 0; o < d.out_ch; ++o) {
    for (int t = 0; t < T_out; ++t) {
      double acc = b ? b[o] : 0.0;
      const int k_end = std::min(d.kernel - 1, t * S / d.dilation);  // taps with t·S − k·dil ≥ 0
      for (int i = 0; i < d.in_ch; ++i) {
        const double* xi = x + static_cast<int64_t>(i) * d.in_len;
        const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * d.kernel;
        for (int k = 0; k <= k_end; ++k) acc += wo[k] * xi[t * S - k * d.dilation];
      }
      y[static_cast<int64_t>(o) * T_out + t] = acc;
    }
  }
}

void conv1d_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                     double* gx, double* gw, double* gb) {
  const int T_out = d.out_len();
  const int S = d.stride;
  if (gb) {
    for (int o = 0; o < d.out_ch; ++o) {
      double acc = 0.0;
      for (int t = 0; t < T_out; ++t) acc += gy[static_cast<int64_t>(o) * T_out + t];
      gb[o] += acc;
    }
  }
  if (gw) {
    for (int o = 0; o < d.out_ch; ++o) {
      for (int i = 0; i < d.in_ch; ++i) {
        const double* xi = x + static_cast<int64_t>(i) * d.in_len;
        const double* gyo = gy + static_cast<int64_t>(o) * T_out;
        for (int k = 0; k < d.kernel; ++k) {
          const int t_start = (k * d.dilation + S - 1) / S;
          double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
          int t = t_start;
          for (; t + 8 <= T_out; t += 8)
            for (int l = 0; l < 8; ++l)
              lane[l] += gyo[t + l] * xi[(t + l) * S - k * d.dilation];
          double tail = 0.0;
          for (; t < T_out; ++t) tail += gyo[t] * xi[t * S - k * d.dilation];
          gw[(static_cast<int64_t>(o) * d.in_ch + i) * d.kernel + k] +=
              (((lane[0] + lane[1]) + (lane[2] + lane[3])) +
               ((lane[4] + lane[5]) + (lane[6] + lane[7]))) + tail;
        }
      }
    }
  }
  if (gx) {
    // Gather form: gx[i][s] collects from (o asc, k asc) the taps with
    // t·stride − k·dilation == s; valid k advance in steps of stride/gcd.
    const int P = S / std::gcd(d.dilation, S);
    for (int i = 0; i < d.in_ch; ++i) {
      for (int s = 0; s < d.in_len; ++s) {
        int k0 = -1;
        for (int k = 0; k < P; ++k)
          if ((s + k * d.dilation) % S == 0) {
            k0 = k;
            break;
          }
        double acc = 0.0;
        if (k0 >= 0) {
          const int64_t num = static_cast<int64_t>(T_out - 1) * S - s;
          const int k_end = num < 0 ? -1 : std::min<int64_t>(d.kernel - 1, num / d.dilation);
          for (int o = 0; o < d.out_ch; ++o) {
            const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * d.kernel;
            const double* gyo = gy + static_cast<int64_t>(o) * T_out;
            for (int k = k0; k <= k_end; k += P) acc += wo[k] * gyo[(s + k * d.dilation) / S];
          }
        }
        gx[static_cast<int64_t>(i) * d.in_len + s] += acc;
      }
    }
  }
}

void convt1d_forward(const ConvTDims& d, const double* x, const double* w, const double* b, double* y) {
  const int S = d.stride;
  for (int o = 0; o < d.out_ch; ++o) {
    double* yo = y + static_cast<int64_t>(o) * d.out_len();
    for (int t = 0; t < d.in_len; ++t) {
      for (int s = 0; s < S; ++s) {
        double acc = b ? b[o] : 0.0;
        for (int i = 0; i < d.in_ch; ++i)
          acc += w[(static_cast<int64_t>(o) * d.in_ch + i) * S + s] * x[static_cast<int64_t>(i) * d.in_len + t];
        yo[static_cast<int64_t>(t) * S + s] = acc;
      }
    }
  }
}

void convt1d_backward(const ConvTDims& d, const double* x, const double* w, const double* gy,
                      double* gx, double* gw, double* gb) {
  const int S = d.stride;
  const int T_out = d.out_len();
  if (gb) {
    for (int o = 0; o < d.out_ch; ++o) {
      double acc = 0.0;
      const double* gyo = gy + static_cast<int64_t>(o) * T_out;
      for (int u = 0; u < T_out; ++u) acc += gyo[u];
      gb[o] += acc;
    }
  }
  if (gw) {
    for (int o = 0; o < d.out_ch; ++o) {
      const double* gyo = gy + static_cast<int64_t>(o) * T_out;
      for (int i = 0; i < d.in_ch; ++i) {
        const double* xi = x + static_cast<int64_t>(i) * d.in_len;
        for (int s = 0; s < S; ++s) {
          double lane[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
          int t = 0;
          for (; t + 8 <= d.in_len; t += 8)
            for (int l = 0; l < 8; ++l)
              lane[l] += gyo[static_cast<int64_t>(t + l) * S + s] * xi[t + l];
          double tail = 0.0;
          for (; t < d.in_len; ++t) tail += gyo[static_cast<int64_t>(t) * S + s] * xi[t];
          gw[(static_cast<int64_t>(o) * d.in_ch + i) * S + s] +=
              (((lane[0] + lane[1]) + (lane[2] + lane[3])) +
               ((lane[4] + lane[5]) + (lane[6] + lane[7]))) + tail;
        }
      }
    }
  }
  if (gx) {
    for (int i = 0; i < d.in_ch; ++i) {
      for (int t = 0; t < d.in_len; ++t) {
        double acc = 0.0;
        for (int o = 0; o < d.out_ch; ++o) {
          const double* gyo = gy + static_cast<int64_t>(o) * T_out;
          const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * S;
          for (int s = 0; s < S; ++s) acc += wo[s] * gyo[static_cast<int64_t>(t) * S + s];
        }
        gx[static_cast<int64_t>(i) * d.in_len + t] += acc;
      }
    }
  }
}

void layer_norm_forward(int channels, int len, const double* x, const double* gain, const double* bias,
                        double eps, double* y, double* mean, double* inv_std) {
  for (int t = 0; t < len; ++t) {
    double mu = 0.0;
    for (int i = 0; i < channels; ++i) mu += x[static_cast<int64_t>(i) * len + t];
    mu /= channels;
    double var = 0.0;
    for (int i = 0; i < channels; ++i) {
      const double dlt = x[static_cast<int64_t>(i) * len + t] - mu;
      var += dlt * dlt;
    }
    var /= channels;
    const double istd = 1.0 / std::sqrt(var + eps);
    mean[t] = mu;
    inv_std[t] = istd;
    for (int i = 0; i < channels; ++i)
      y[static_cast<int64_t>(i) * len + t] = gain[i] * ((x[static_cast<int64_t>(i) * len + t] - mu) * istd) + bias[i];
  }
}

void layer_norm_backward(int channels, int len, const double* x, const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx, double* ggain, double* gbias) {
  if (gx) {
    for (int t = 0; t < len; ++t) {
      const double mu = mean[t];
      const double istd = inv_std[t];
      double a = 0.0, bsum = 0.0;
      for (int i = 0; i < channels; ++i) {
        const double xhat = (x[static_cast<int64_t>(i) * len + t] - mu) * istd;
        const double g = gy[static_cast<int64_t>(i) * len + t] * gain[i];
        a += g;
        bsum += g * xhat;
      }
      a /= channels;
      bsum /= channels;
      for (int i = 0; i < channels; ++i) {
        const double xhat = (x[static_cast<int64_t>(i) * len + t] - mu) * istd;
        const double g = gy[static_cast<int64_t>(i) * len + t] * gain[i];
        gx[static_cast<int64_t>(i) * len + t] += istd * (g - a - xhat * bsum);
      }
    }
  }
  if (ggain || gbias) {
    for (int i = 0; i < channels; ++i) {
      double sg = 0.0, sb = 0.0;
      for (int t = 0; t < len; ++t) {
        const double xhat = (x[static_cast<int64_t>(i) * len + t] - mean[t]) * inv_std[t];
        const double g = gy[static_cast<int64_t>(i) * len + t];
        sg += g * xhat;
        sb += g;
      }
      if (ggain) ggain[i] += sg;
      if (gbias) gbias[i] += sb;
    }
  }
}

void avg_pool_forward(int channels, int len, int factor, const double* x, double* y) {
  const int T_out = len / factor;
  const double inv = 1.0 / factor;
  for (int i = 0; i < channels; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * len;
    double* yi = y + static_cast<int64_t>(i) * T_out;
    for (int t = 0; t < T_out; ++t) {
      double acc = 0.0;
      for (int s = 0; s < factor; ++s) acc += xi[t * factor + s];
      yi[t] = acc * inv;
    }
  }
}

void avg_pool_backward(int channels, int len, int factor, const double* gy, double* gx) {
  const int T_out = len / factor;
  const double inv = 1.0 / factor;
  for (int i = 0; i < channels; ++i) {
    const double* gyi = gy + static_cast<int64_t>(i) * T_out;
    double* gxi = gx + static_cast<int64_t>(i) * len;
    for (int t = 0; t < T_out; ++t)
      for (int s = 0; s < factor; ++s) gxi[t * factor + s] += gyi[t] * inv;
  }
}

}  // namespace plaae::kernels::serial
