#include "plaae/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

// Optimized backend. Every kernel reproduces the serial backend's floating
// point result bit for bit: per output element the terms are added in the
// same order, gradient buffers receive exactly one += of an accumulator
// built from zero, and no contracted multiply-add is introduced (builds use
// -ffp-contract=off). Throughput comes from unroll-and-jam over channels,
// register-tiled pointwise sweeps, polyphase repacking for strided taps, and
// the shared eight-lane time reduction for weight gradients.
//
// Work splits across OpenMP threads one channel (or time tile) per
// iteration. Each loop body lives in a standalone noinline worker with
// restrict-qualified parameters, so it keeps full aliasing information even
// when called from the outlined OpenMP stub, and every worker writes a
// disjoint slice of the destination, so results do not depend on the thread
// count.

#define PLAAE_NOINLINE __attribute__((noinline))

namespace plaae::kernels::par {

namespace {

typedef double v8 __attribute__((vector_size(64), aligned(8), may_alias));

// may_alias plus the relaxed alignment make it legal to read and write plain
// double arrays through v8 pointers; memcpy-based loads are not an option
// here, gcc spills them through the stack inside reduction loops.
inline v8 vload(const double* p) { return *reinterpret_cast<const v8*>(p); }

inline void vstore(double* p, v8 v) { *reinterpret_cast<v8*>(p) = v; }

inline v8 vsplat(double s) { return v8{s, s, s, s, s, s, s, s}; }

inline double lane_combine(const v8 acc, double tail) {
  return (((acc[0] + acc[1]) + (acc[2] + acc[3])) +
          ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
         tail;
}

// Dot product with the eight-lane interleaved scheme shared with the serial
// backend: lane l sums elements l, l+8, l+16, ... of the product sequence,
// the remainder past the last full block accumulates in order, and lanes
// combine pairwise before the tail is added.
inline double lane_dot(const double* __restrict a, const double* __restrict b,
                       int n) {
  v8 acc = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  int t = 0;
  for (; t + 8 <= n; t += 8) acc = acc + vload(a + t) * vload(b + t);
  double tail = 0.0;
  for (; t < n; ++t) tail = tail + a[t] * b[t];
  return lane_combine(acc, tail);
}

// ---- stride-1 convolution forward ----

template <int K>
PLAAE_NOINLINE void fwd_s1_jam_ch(const ConvDims& d,
                                  const double* __restrict x,
                                  const double* __restrict w,
                                  const double* __restrict b,
                                  double* __restrict y, int o) {
  const int T = d.in_len;
  const int D = d.dilation;
  const int lead = std::min((K - 1) * D, T);
  double* __restrict yo = y + static_cast<int64_t>(o) * T;
  const double bo = b ? b[o] : 0.0;
  for (int t = 0; t < T; ++t) yo[t] = bo;
  int i = 0;
  for (; i + 4 <= d.in_ch; i += 4) {
    const double* __restrict x0 = x + static_cast<int64_t>(i) * T;
    const double* __restrict x1 = x0 + T;
    const double* __restrict x2 = x1 + T;
    const double* __restrict x3 = x2 + T;
    const double* w0 = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    double w0r[K], w1r[K], w2r[K], w3r[K];
    for (int k = 0; k < K; ++k) {
      w0r[k] = w0[k];
      w1r[k] = w0[K + k];
      w2r[k] = w0[2 * K + k];
      w3r[k] = w0[3 * K + k];
    }
    for (int t = 0; t < lead; ++t) {
      const int k_end = std::min(K - 1, t / D);
      double acc = yo[t];
      for (int k = 0; k <= k_end; ++k) acc = acc + w0r[k] * x0[t - k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w1r[k] * x1[t - k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w2r[k] * x2[t - k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w3r[k] * x3[t - k * D];
      yo[t] = acc;
    }
    for (int t = lead; t < T; ++t) {
      double acc = yo[t];
      for (int k = 0; k < K; ++k) acc = acc + w0r[k] * x0[t - k * D];
      for (int k = 0; k < K; ++k) acc = acc + w1r[k] * x1[t - k * D];
      for (int k = 0; k < K; ++k) acc = acc + w2r[k] * x2[t - k * D];
      for (int k = 0; k < K; ++k) acc = acc + w3r[k] * x3[t - k * D];
      yo[t] = acc;
    }
  }
  for (; i < d.in_ch; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * T;
    const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    double wr[K];
    for (int k = 0; k < K; ++k) wr[k] = wo[k];
    for (int t = 0; t < lead; ++t) {
      const int k_end = std::min(K - 1, t / D);
      double acc = yo[t];
      for (int k = 0; k <= k_end; ++k) acc = acc + wr[k] * xi[t - k * D];
      yo[t] = acc;
    }
    for (int t = lead; t < T; ++t) {
      double acc = yo[t];
      for (int k = 0; k < K; ++k) acc = acc + wr[k] * xi[t - k * D];
      yo[t] = acc;
    }
  }
}

template <int K>
void fwd_s1_jam(const ConvDims& d, const double* x, const double* w,
                const double* b, double* y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < d.out_ch; ++o) fwd_s1_jam_ch<K>(d, x, w, b, y, o);
}

// Pointwise convolution as a register-tiled matrix product: RN output rows
// accumulate in vector registers across one ascending input-channel sweep
// per eight-sample column, reading each x element once per row block.
template <int RN>
PLAAE_NOINLINE void fwd_k1_rows(const ConvDims& d, const double* __restrict x,
                                const double* __restrict w,
                                const double* __restrict b,
                                double* __restrict y, int o0) {
  const int T = d.in_len;
  const int in_ch = d.in_ch;
  int t = 0;
  for (; t + 8 <= T; t += 8) {
    v8 acc[RN];
    for (int j = 0; j < RN; ++j) acc[j] = vsplat(b ? b[o0 + j] : 0.0);
    for (int i = 0; i < in_ch; ++i) {
      const v8 xv = vload(x + static_cast<int64_t>(i) * T + t);
      const double* wcol = w + i;
      for (int j = 0; j < RN; ++j) {
        const double wj = wcol[static_cast<int64_t>(o0 + j) * in_ch];
        acc[j] = acc[j] + vsplat(wj) * xv;
      }
    }
    for (int j = 0; j < RN; ++j)
      vstore(y + static_cast<int64_t>(o0 + j) * T + t, acc[j]);
  }
  for (; t < T; ++t) {
    for (int j = 0; j < RN; ++j) {
      double acc = b ? b[o0 + j] : 0.0;
      const double* wrow = w + static_cast<int64_t>(o0 + j) * in_ch;
      for (int i = 0; i < in_ch; ++i)
        acc = acc + wrow[i] * x[static_cast<int64_t>(i) * T + t];
      y[static_cast<int64_t>(o0 + j) * T + t] = acc;
    }
  }
}

void fwd_s1_k1(const ConvDims& d, const double* x, const double* w,
               const double* b, double* y) {
  const int full = d.out_ch / 8;
  const int rem = d.out_ch % 8;
#pragma omp parallel for schedule(static)
  for (int idx = 0; idx < full + rem; ++idx) {
    if (idx < full)
      fwd_k1_rows<8>(d, x, w, b, y, idx * 8);
    else
      fwd_k1_rows<1>(d, x, w, b, y, full * 8 + (idx - full));
  }
}

PLAAE_NOINLINE void fwd_s1_gen_ch(const ConvDims& d,
                                  const double* __restrict x,
                                  const double* __restrict w,
                                  const double* __restrict b,
                                  double* __restrict y, int o) {
  const int T = d.in_len;
  const int D = d.dilation;
  const int K = d.kernel;
  const int lead = std::min((K - 1) * D, T);
  double* __restrict yo = y + static_cast<int64_t>(o) * T;
  const double bo = b ? b[o] : 0.0;
  for (int t = 0; t < T; ++t) yo[t] = bo;
  for (int i = 0; i < d.in_ch; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * T;
    const double* __restrict wo =
        w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int t = 0; t < lead; ++t) {
      const int k_end = std::min(K - 1, t / D);
      double acc = yo[t];
      for (int k = 0; k <= k_end; ++k) acc = acc + wo[k] * xi[t - k * D];
      yo[t] = acc;
    }
    for (int t = lead; t < T; ++t) {
      double acc = yo[t];
      for (int k = 0; k < K; ++k) acc = acc + wo[k] * xi[t - k * D];
      yo[t] = acc;
    }
  }
}

void fwd_s1_gen(const ConvDims& d, const double* x, const double* w,
                const double* b, double* y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < d.out_ch; ++o) fwd_s1_gen_ch(d, x, w, b, y, o);
}

// ---- strided convolution via polyphase repacking ----

// ph[(i * S + r) * plen + u] = x[i][r + u * S]; cells past in_len stay zero.
void repack_phases(const double* __restrict x, int channels, int in_len,
                   int S, int plen, std::vector<double>& ph) {
  ph.assign(static_cast<size_t>(channels) * S * plen, 0.0);
  for (int i = 0; i < channels; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * in_len;
    for (int r = 0; r < S; ++r) {
      double* row = ph.data() + (static_cast<int64_t>(i) * S + r) * plen;
      for (int u = 0; r + u * S < in_len; ++u) row[u] = xi[r + u * S];
    }
  }
}

struct TapMap {
  int r;  // phase row holding this tap's samples
  int q;  // output offset: x[t*S - k*D] = phase[r][t - q]
};

inline TapMap tap_map(int k, int D, int S) {
  const int rem = (k * D) % S;
  const int r = rem == 0 ? 0 : S - rem;
  return {r, (k * D + r) / S};
}

template <int KN>
void fwd_strided_kblock(const double* const* rows, const int* qs,
                        const double* wk, double* __restrict yo, int t_lo,
                        int t_hi) {
  const double* __restrict r0 = rows[0];
  const double* __restrict r1 = rows[1];
  const double* __restrict r2 = rows[2];
  const double* __restrict r3 = rows[3];
  const int q0 = qs[0], q1 = qs[1], q2 = qs[2], q3 = qs[3];
  const double w0 = wk[0];
  const double w1 = KN > 1 ? wk[1] : 0.0;
  const double w2 = KN > 2 ? wk[2] : 0.0;
  const double w3 = KN > 3 ? wk[3] : 0.0;
  for (int t = t_lo; t < t_hi; ++t) {
    double acc = yo[t];
    acc = acc + w0 * r0[t - q0];
    if constexpr (KN > 1) acc = acc + w1 * r1[t - q1];
    if constexpr (KN > 2) acc = acc + w2 * r2[t - q2];
    if constexpr (KN > 3) acc = acc + w3 * r3[t - q3];
    yo[t] = acc;
  }
}

PLAAE_NOINLINE void fwd_strided_ch(const ConvDims& d,
                                   const double* __restrict x,
                                   const double* __restrict ph, int plen,
                                   const double* __restrict w,
                                   const double* __restrict b,
                                   double* __restrict y, int t_pro, int o) {
  const int T = d.out_len();
  const int D = d.dilation;
  const int S = d.stride;
  const int K = d.kernel;
  double* __restrict yo = y + static_cast<int64_t>(o) * T;
  const double bo = b ? b[o] : 0.0;
  for (int t = 0; t < T; ++t) yo[t] = bo;
  for (int i = 0; i < d.in_ch; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * d.in_len;
    const double* phi = ph + static_cast<int64_t>(i) * S * plen;
    const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int t = 0; t < t_pro; ++t) {
      const int k_end = std::min(K - 1, t * S / D);
      double acc = yo[t];
      for (int k = 0; k <= k_end; ++k) acc = acc + wo[k] * xi[t * S - k * D];
      yo[t] = acc;
    }
    for (int kb = 0; kb < K; kb += 4) {
      const int kn = std::min(4, K - kb);
      const double* rows[4] = {nullptr, nullptr, nullptr, nullptr};
      int qs[4] = {0, 0, 0, 0};
      for (int j = 0; j < kn; ++j) {
        const TapMap m = tap_map(kb + j, D, S);
        rows[j] = phi + static_cast<int64_t>(m.r) * plen;
        qs[j] = m.q;
      }
      switch (kn) {
        case 1: fwd_strided_kblock<1>(rows, qs, wo + kb, yo, t_pro, T); break;
        case 2: fwd_strided_kblock<2>(rows, qs, wo + kb, yo, t_pro, T); break;
        case 3: fwd_strided_kblock<3>(rows, qs, wo + kb, yo, t_pro, T); break;
        default: fwd_strided_kblock<4>(rows, qs, wo + kb, yo, t_pro, T); break;
      }
    }
  }
}

void fwd_strided(const ConvDims& d, const double* x, const double* w,
                 const double* b, double* y) {
  const int T = d.out_len();
  const int S = d.stride;
  const int plen = (d.in_len + S - 1) / S;
  std::vector<double> ph;
  repack_phases(x, d.in_ch, d.in_len, S, plen, ph);
  const int t_pro = std::min(T, ((d.kernel - 1) * d.dilation + S - 1) / S);
  const double* php = ph.data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < d.out_ch; ++o)
    fwd_strided_ch(d, x, php, plen, w, b, y, t_pro, o);
}

// ---- stride-1 input gradient ----
// Terms for gx[i][s] accumulate into a from-zero scratch row across the
// output-channel passes, then land in the caller's buffer with one +=,
// matching the serial gather exactly.

template <int K>
PLAAE_NOINLINE void gx_s1_jam_ch(const ConvDims& d,
                                 const double* __restrict gy,
                                 const double* __restrict w,
                                 double* __restrict gx, int i) {
  const int T = d.in_len;
  const int D = d.dilation;
  const int lead = (K - 1) * D;
  const int main_end = std::max(0, T - lead);
  std::vector<double> row(static_cast<size_t>(T), 0.0);
  double* __restrict acc_row = row.data();
  int o = 0;
  for (; o + 4 <= d.out_ch; o += 4) {
    const double* __restrict g0 = gy + static_cast<int64_t>(o) * T;
    const double* __restrict g1 = g0 + T;
    const double* __restrict g2 = g1 + T;
    const double* __restrict g3 = g2 + T;
    const double* w0 = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    const int64_t wstride = static_cast<int64_t>(d.in_ch) * K;
    double w0r[K], w1r[K], w2r[K], w3r[K];
    for (int k = 0; k < K; ++k) {
      w0r[k] = w0[k];
      w1r[k] = w0[wstride + k];
      w2r[k] = w0[2 * wstride + k];
      w3r[k] = w0[3 * wstride + k];
    }
    for (int s = 0; s < main_end; ++s) {
      double acc = acc_row[s];
      for (int k = 0; k < K; ++k) acc = acc + w0r[k] * g0[s + k * D];
      for (int k = 0; k < K; ++k) acc = acc + w1r[k] * g1[s + k * D];
      for (int k = 0; k < K; ++k) acc = acc + w2r[k] * g2[s + k * D];
      for (int k = 0; k < K; ++k) acc = acc + w3r[k] * g3[s + k * D];
      acc_row[s] = acc;
    }
    for (int s = main_end; s < T; ++s) {
      const int k_end = std::min(K - 1, (T - 1 - s) / D);
      double acc = acc_row[s];
      for (int k = 0; k <= k_end; ++k) acc = acc + w0r[k] * g0[s + k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w1r[k] * g1[s + k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w2r[k] * g2[s + k * D];
      for (int k = 0; k <= k_end; ++k) acc = acc + w3r[k] * g3[s + k * D];
      acc_row[s] = acc;
    }
  }
  for (; o < d.out_ch; ++o) {
    const double* __restrict gyo = gy + static_cast<int64_t>(o) * T;
    const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    double wr[K];
    for (int k = 0; k < K; ++k) wr[k] = wo[k];
    for (int s = 0; s < main_end; ++s) {
      double acc = acc_row[s];
      for (int k = 0; k < K; ++k) acc = acc + wr[k] * gyo[s + k * D];
      acc_row[s] = acc;
    }
    for (int s = main_end; s < T; ++s) {
      const int k_end = std::min(K - 1, (T - 1 - s) / D);
      double acc = acc_row[s];
      for (int k = 0; k <= k_end; ++k) acc = acc + wr[k] * gyo[s + k * D];
      acc_row[s] = acc;
    }
  }
  double* __restrict gxi = gx + static_cast<int64_t>(i) * T;
  for (int s = 0; s < T; ++s) gxi[s] += acc_row[s];
}

template <int K>
void gx_s1_jam(const ConvDims& d, const double* gy, const double* w,
               double* gx) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.in_ch; ++i) gx_s1_jam_ch<K>(d, gy, w, gx, i);
}

// Pointwise input gradient, the transpose of fwd_k1_rows: RN input rows
// accumulate from zero in registers across an ascending output-channel
// sweep, then land in the caller's buffer with one += per element.
template <int RN>
PLAAE_NOINLINE void gx_k1_rows(const ConvDims& d, const double* __restrict gy,
                               const double* __restrict w,
                               double* __restrict gx, int i0) {
  const int T = d.in_len;
  const int in_ch = d.in_ch;
  int t = 0;
  for (; t + 8 <= T; t += 8) {
    v8 acc[RN];
    for (int j = 0; j < RN; ++j) acc[j] = vsplat(0.0);
    for (int o = 0; o < d.out_ch; ++o) {
      const v8 gv = vload(gy + static_cast<int64_t>(o) * T + t);
      const double* wrow = w + static_cast<int64_t>(o) * in_ch + i0;
      for (int j = 0; j < RN; ++j) acc[j] = acc[j] + vsplat(wrow[j]) * gv;
    }
    for (int j = 0; j < RN; ++j) {
      double* gxi = gx + static_cast<int64_t>(i0 + j) * T + t;
      vstore(gxi, vload(gxi) + acc[j]);
    }
  }
  for (; t < T; ++t) {
    for (int j = 0; j < RN; ++j) {
      double acc = 0.0;
      for (int o = 0; o < d.out_ch; ++o)
        acc = acc + w[static_cast<int64_t>(o) * in_ch + i0 + j] *
                        gy[static_cast<int64_t>(o) * T + t];
      gx[static_cast<int64_t>(i0 + j) * T + t] += acc;
    }
  }
}

void gx_s1_k1(const ConvDims& d, const double* gy, const double* w,
              double* gx) {
  const int full = d.in_ch / 8;
  const int rem = d.in_ch % 8;
#pragma omp parallel for schedule(static)
  for (int idx = 0; idx < full + rem; ++idx) {
    if (idx < full)
      gx_k1_rows<8>(d, gy, w, gx, idx * 8);
    else
      gx_k1_rows<1>(d, gy, w, gx, full * 8 + (idx - full));
  }
}

PLAAE_NOINLINE void gx_s1_gen_ch(const ConvDims& d,
                                 const double* __restrict gy,
                                 const double* __restrict w,
                                 double* __restrict gx, int i) {
  const int T = d.in_len;
  const int D = d.dilation;
  const int K = d.kernel;
  const int main_end = std::max(0, T - (K - 1) * D);
  std::vector<double> row(static_cast<size_t>(T), 0.0);
  double* __restrict acc_row = row.data();
  for (int o = 0; o < d.out_ch; ++o) {
    const double* __restrict gyo = gy + static_cast<int64_t>(o) * T;
    const double* __restrict wo =
        w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int s = 0; s < main_end; ++s) {
      double acc = acc_row[s];
      for (int k = 0; k < K; ++k) acc = acc + wo[k] * gyo[s + k * D];
      acc_row[s] = acc;
    }
    for (int s = main_end; s < T; ++s) {
      const int k_end = std::min(K - 1, (T - 1 - s) / D);
      double acc = acc_row[s];
      for (int k = 0; k <= k_end; ++k) acc = acc + wo[k] * gyo[s + k * D];
      acc_row[s] = acc;
    }
  }
  double* __restrict gxi = gx + static_cast<int64_t>(i) * T;
  for (int s = 0; s < T; ++s) gxi[s] += acc_row[s];
}

void gx_s1_gen(const ConvDims& d, const double* gy, const double* w,
               double* gx) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.in_ch; ++i) gx_s1_gen_ch(d, gy, w, gx, i);
}

// Strided input gradient: each input phase r collects the taps with
// (r + k*D) divisible by S, ascending in k within each output channel, which
// matches the serial per-element term order exactly.
PLAAE_NOINLINE void gx_strided_ch(const ConvDims& d,
                                  const double* __restrict gy,
                                  const double* __restrict w,
                                  double* __restrict gx, int plen, int i) {
  const int T = d.out_len();
  const int D = d.dilation;
  const int S = d.stride;
  const int K = d.kernel;
  std::vector<double> acc(static_cast<size_t>(S) * plen, 0.0);
  for (int o = 0; o < d.out_ch; ++o) {
    const double* gyo = gy + static_cast<int64_t>(o) * T;
    const double* wo = w + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int k = 0; k < K; ++k) {
      const TapMap m = tap_map(k, D, S);
      if (m.r >= d.in_len) continue;
      const int phase_len = (d.in_len - m.r + S - 1) / S;
      const int u_hi = std::min(phase_len, T - m.q);
      if (u_hi <= 0) continue;
      double* __restrict row = acc.data() + static_cast<int64_t>(m.r) * plen;
      const double* __restrict gsrc = gyo + m.q;
      const double wk = wo[k];
      for (int u = 0; u < u_hi; ++u) row[u] = row[u] + wk * gsrc[u];
    }
  }
  double* __restrict gxi = gx + static_cast<int64_t>(i) * d.in_len;
  for (int r = 0; r < S; ++r) {
    const double* __restrict row = acc.data() + static_cast<int64_t>(r) * plen;
    for (int u = 0; r + u * S < d.in_len; ++u) gxi[r + u * S] += row[u];
  }
}

void gx_strided(const ConvDims& d, const double* gy, const double* w,
                double* gx) {
  const int S = d.stride;
  const int plen = (d.in_len + S - 1) / S;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.in_ch; ++i) gx_strided_ch(d, gy, w, gx, plen, i);
}

// ---- weight and bias gradients ----

PLAAE_NOINLINE void conv_gb_ch(const ConvDims& d, const double* __restrict gy,
                               double* __restrict gb, int o) {
  const int T_out = d.out_len();
  const double* __restrict gyo = gy + static_cast<int64_t>(o) * T_out;
  double acc = 0.0;
  for (int t = 0; t < T_out; ++t) acc += gyo[t];
  gb[o] += acc;
}

PLAAE_NOINLINE void conv_gw_s1_ch(const ConvDims& d,
                                  const double* __restrict x,
                                  const double* __restrict gy,
                                  double* __restrict gw, int o) {
  const int T_out = d.out_len();
  const int D = d.dilation;
  const int K = d.kernel;
  const double* gyo = gy + static_cast<int64_t>(o) * T_out;
  for (int i = 0; i < d.in_ch; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * d.in_len;
    double* gwo = gw + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int k = 0; k < K; ++k) {
      const int t_start = k * D;
      gwo[k] += lane_dot(gyo + t_start, xi + t_start - k * D, T_out - t_start);
    }
  }
}

PLAAE_NOINLINE void conv_gw_strided_ch(const ConvDims& d,
                                       const double* __restrict ph, int plen,
                                       const double* __restrict gy,
                                       double* __restrict gw, int o) {
  const int T_out = d.out_len();
  const int D = d.dilation;
  const int S = d.stride;
  const int K = d.kernel;
  const double* gyo = gy + static_cast<int64_t>(o) * T_out;
  for (int i = 0; i < d.in_ch; ++i) {
    const double* phi = ph + static_cast<int64_t>(i) * S * plen;
    double* gwo = gw + (static_cast<int64_t>(o) * d.in_ch + i) * K;
    for (int k = 0; k < K; ++k) {
      // t runs from ceil(k*D/S) = m.q; x[t*S - k*D] sits in phase row m.r
      // at position t - m.q.
      const TapMap m = tap_map(k, D, S);
      const double dot =
          m.q >= T_out
              ? 0.0
              : lane_dot(gyo + m.q, phi + static_cast<int64_t>(m.r) * plen,
                         T_out - m.q);
      gwo[k] += dot;
    }
  }
}

}  // namespace

void conv1d_forward(const ConvDims& d, const double* x, const double* w,
                    const double* b, double* y) {
  if (d.stride != 1) {
    fwd_strided(d, x, w, b, y);
    return;
  }
  switch (d.kernel) {
    case 1: fwd_s1_k1(d, x, w, b, y); break;
    case 2: fwd_s1_jam<2>(d, x, w, b, y); break;
    case 3: fwd_s1_jam<3>(d, x, w, b, y); break;
    case 4: fwd_s1_jam<4>(d, x, w, b, y); break;
    case 5: fwd_s1_jam<5>(d, x, w, b, y); break;
    default: fwd_s1_gen(d, x, w, b, y); break;
  }
}

void conv1d_backward(const ConvDims& d, const double* x, const double* w,
                     const double* gy, double* gx, double* gw, double* gb) {
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_ch; ++o) conv_gb_ch(d, gy, gb, o);
  }
  if (gw) {
    if (d.stride == 1) {
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.out_ch; ++o) conv_gw_s1_ch(d, x, gy, gw, o);
    } else {
      const int S = d.stride;
      const int plen = (d.in_len + S - 1) / S;
      std::vector<double> ph;
      repack_phases(x, d.in_ch, d.in_len, S, plen, ph);
      const double* php = ph.data();
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.out_ch; ++o)
        conv_gw_strided_ch(d, php, plen, gy, gw, o);
    }
  }
  if (gx) {
    if (d.stride != 1) {
      gx_strided(d, gy, w, gx);
    } else {
      switch (d.kernel) {
        case 1: gx_s1_k1(d, gy, w, gx); break;
        case 2: gx_s1_jam<2>(d, gy, w, gx); break;
        case 3: gx_s1_jam<3>(d, gy, w, gx); break;
        case 4: gx_s1_jam<4>(d, gy, w, gx); break;
        case 5: gx_s1_jam<5>(d, gy, w, gx); break;
        default: gx_s1_gen(d, gy, w, gx); break;
      }
    }
  }
}

namespace {

PLAAE_NOINLINE void convt_fwd_ch(const ConvTDims& d,
                                 const double* __restrict x,
                                 const double* __restrict w,
                                 const double* __restrict b,
                                 double* __restrict y, int o) {
  const int T = d.in_len;
  const int S = d.stride;
  std::vector<double> scratch(static_cast<size_t>(S) * T);
  const double bo = b ? b[o] : 0.0;
  for (int s = 0; s < S; ++s) {
    double* __restrict row = scratch.data() + static_cast<int64_t>(s) * T;
    for (int t = 0; t < T; ++t) row[t] = bo;
    int i = 0;
    for (; i + 4 <= d.in_ch; i += 4) {
      const double* __restrict x0 = x + static_cast<int64_t>(i) * T;
      const double* __restrict x1 = x0 + T;
      const double* __restrict x2 = x1 + T;
      const double* __restrict x3 = x2 + T;
      const double w0 = w[(static_cast<int64_t>(o) * d.in_ch + i) * S + s];
      const double w1 = w[(static_cast<int64_t>(o) * d.in_ch + i + 1) * S + s];
      const double w2 = w[(static_cast<int64_t>(o) * d.in_ch + i + 2) * S + s];
      const double w3 = w[(static_cast<int64_t>(o) * d.in_ch + i + 3) * S + s];
      for (int t = 0; t < T; ++t) {
        double acc = row[t];
        acc = acc + w0 * x0[t];
        acc = acc + w1 * x1[t];
        acc = acc + w2 * x2[t];
        acc = acc + w3 * x3[t];
        row[t] = acc;
      }
    }
    for (; i < d.in_ch; ++i) {
      const double* __restrict xi = x + static_cast<int64_t>(i) * T;
      const double wi = w[(static_cast<int64_t>(o) * d.in_ch + i) * S + s];
      for (int t = 0; t < T; ++t) row[t] = row[t] + wi * xi[t];
    }
  }
  double* __restrict yo = y + static_cast<int64_t>(o) * T * S;
  for (int s = 0; s < S; ++s) {
    const double* __restrict row = scratch.data() + static_cast<int64_t>(s) * T;
    for (int t = 0; t < T; ++t) yo[t * S + s] = row[t];
  }
}

// gyph[(o * S + s) * T + t] = gy[o][t * S + s], so every backward pass reads
// contiguous rows; the de-interleave changes no values or term order.
PLAAE_NOINLINE void convt_split_ch(const ConvTDims& d,
                                   const double* __restrict gy,
                                   double* __restrict gyph, int o) {
  const int T = d.in_len;
  const int S = d.stride;
  const double* __restrict gyo = gy + static_cast<int64_t>(o) * T * S;
  for (int s = 0; s < S; ++s) {
    double* __restrict row = gyph + (static_cast<int64_t>(o) * S + s) * T;
    for (int t = 0; t < T; ++t) row[t] = gyo[static_cast<int64_t>(t) * S + s];
  }
}

PLAAE_NOINLINE void convt_gb_ch(const ConvTDims& d, const double* __restrict gy,
                                double* __restrict gb, int o) {
  const int T_out = d.out_len();
  const double* __restrict gyo = gy + static_cast<int64_t>(o) * T_out;
  double acc = 0.0;
  for (int u = 0; u < T_out; ++u) acc += gyo[u];
  gb[o] += acc;
}

PLAAE_NOINLINE void convt_gw_ch(const ConvTDims& d, const double* __restrict x,
                                const double* __restrict gyph,
                                double* __restrict gw, int o) {
  const int T = d.in_len;
  const int S = d.stride;
  for (int i = 0; i < d.in_ch; ++i) {
    const double* xi = x + static_cast<int64_t>(i) * T;
    double* gwo = gw + (static_cast<int64_t>(o) * d.in_ch + i) * S;
    for (int s = 0; s < S; ++s)
      gwo[s] += lane_dot(gyph + (static_cast<int64_t>(o) * S + s) * T, xi, T);
  }
}

PLAAE_NOINLINE void convt_gx_ch(const ConvTDims& d, const double* __restrict w,
                                const double* __restrict gyph,
                                double* __restrict gx, int i) {
  const int T = d.in_len;
  const int S = d.stride;
  std::vector<double> accv(static_cast<size_t>(T), 0.0);
  double* __restrict acc_row = accv.data();
  for (int o = 0; o < d.out_ch; ++o) {
    for (int s = 0; s < S; ++s) {
      const double* __restrict row =
          gyph + (static_cast<int64_t>(o) * S + s) * T;
      const double ws = w[(static_cast<int64_t>(o) * d.in_ch + i) * S + s];
      for (int t = 0; t < T; ++t) acc_row[t] = acc_row[t] + ws * row[t];
    }
  }
  double* __restrict gxi = gx + static_cast<int64_t>(i) * T;
  for (int t = 0; t < T; ++t) gxi[t] += acc_row[t];
}

}  // namespace

void convt1d_forward(const ConvTDims& d, const double* x, const double* w,
                     const double* b, double* y) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < d.out_ch; ++o) convt_fwd_ch(d, x, w, b, y, o);
}

void convt1d_backward(const ConvTDims& d, const double* x, const double* w,
                      const double* gy, double* gx, double* gw, double* gb) {
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_ch; ++o) convt_gb_ch(d, gy, gb, o);
  }
  if (gw || gx) {
    std::vector<double> gyph(static_cast<size_t>(d.out_ch) * d.stride *
                             d.in_len);
    double* gyphp = gyph.data();
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_ch; ++o) convt_split_ch(d, gy, gyphp, o);
    if (gw) {
#pragma omp parallel for schedule(static)
      for (int o = 0; o < d.out_ch; ++o) convt_gw_ch(d, x, gyphp, gw, o);
    }
    if (gx) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < d.in_ch; ++i) convt_gx_ch(d, w, gyphp, gx, i);
    }
  }
}

namespace {

constexpr int kNormTile = 512;

PLAAE_NOINLINE void ln_fwd_tile(int channels, int len,
                                const double* __restrict x,
                                const double* __restrict gain,
                                const double* __restrict bias, double eps,
                                double* __restrict y, double* __restrict mean,
                                double* __restrict inv_std, int t0) {
  const int tn = std::min(kNormTile, len - t0);
  double mu[kNormTile];
  double var[kNormTile];
  double istd[kNormTile];
  for (int j = 0; j < tn; ++j) mu[j] = 0.0;
  for (int i = 0; i < channels; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * len + t0;
    for (int j = 0; j < tn; ++j) mu[j] += xi[j];
  }
  for (int j = 0; j < tn; ++j) mu[j] /= channels;
  for (int j = 0; j < tn; ++j) var[j] = 0.0;
  for (int i = 0; i < channels; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * len + t0;
    for (int j = 0; j < tn; ++j) {
      const double dlt = xi[j] - mu[j];
      var[j] += dlt * dlt;
    }
  }
  for (int j = 0; j < tn; ++j) {
    var[j] /= channels;
    istd[j] = 1.0 / std::sqrt(var[j] + eps);
    mean[t0 + j] = mu[j];
    inv_std[t0 + j] = istd[j];
  }
  for (int i = 0; i < channels; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * len + t0;
    double* __restrict yi = y + static_cast<int64_t>(i) * len + t0;
    const double g = gain[i];
    const double bi = bias[i];
    for (int j = 0; j < tn; ++j) yi[j] = g * ((xi[j] - mu[j]) * istd[j]) + bi;
  }
}

PLAAE_NOINLINE void ln_bwd_tile(int channels, int len,
                                const double* __restrict x,
                                const double* __restrict gain,
                                const double* __restrict mean,
                                const double* __restrict inv_std,
                                const double* __restrict gy,
                                double* __restrict gx, int t0) {
  const int tn = std::min(kNormTile, len - t0);
  double a[kNormTile];
  double bsum[kNormTile];
  for (int j = 0; j < tn; ++j) a[j] = 0.0;
  for (int j = 0; j < tn; ++j) bsum[j] = 0.0;
  const double* __restrict mt = mean + t0;
  const double* __restrict it = inv_std + t0;
  for (int i = 0; i < channels; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * len + t0;
    const double* __restrict gyi = gy + static_cast<int64_t>(i) * len + t0;
    const double gn = gain[i];
    for (int j = 0; j < tn; ++j) {
      const double xhat = (xi[j] - mt[j]) * it[j];
      const double g = gyi[j] * gn;
      a[j] += g;
      bsum[j] += g * xhat;
    }
  }
  for (int j = 0; j < tn; ++j) a[j] /= channels;
  for (int j = 0; j < tn; ++j) bsum[j] /= channels;
  for (int i = 0; i < channels; ++i) {
    const double* __restrict xi = x + static_cast<int64_t>(i) * len + t0;
    const double* __restrict gyi = gy + static_cast<int64_t>(i) * len + t0;
    double* __restrict gxi = gx + static_cast<int64_t>(i) * len + t0;
    const double gn = gain[i];
    for (int j = 0; j < tn; ++j) {
      const double istd = it[j];
      const double xhat = (xi[j] - mt[j]) * istd;
      const double g = gyi[j] * gn;
      gxi[j] += istd * (g - a[j] - xhat * bsum[j]);
    }
  }
}

PLAAE_NOINLINE void ln_param_grads_ch(int len, const double* __restrict x,
                                      const double* __restrict mean,
                                      const double* __restrict inv_std,
                                      const double* __restrict gy,
                                      double* __restrict ggain,
                                      double* __restrict gbias, int i) {
  const double* __restrict xi = x + static_cast<int64_t>(i) * len;
  const double* __restrict gyi = gy + static_cast<int64_t>(i) * len;
  double sg = 0.0;
  double sb = 0.0;
  for (int t = 0; t < len; ++t) {
    const double xhat = (xi[t] - mean[t]) * inv_std[t];
    const double g = gyi[t];
    sg += g * xhat;
    sb += g;
  }
  if (ggain) ggain[i] += sg;
  if (gbias) gbias[i] += sb;
}

PLAAE_NOINLINE void pool_fwd_ch(int len, int factor,
                                const double* __restrict x,
                                double* __restrict y, int i) {
  const int T_out = len / factor;
  const double inv = 1.0 / factor;
  const double* __restrict xi = x + static_cast<int64_t>(i) * len;
  double* __restrict yi = y + static_cast<int64_t>(i) * T_out;
  for (int t = 0; t < T_out; ++t) {
    double acc = 0.0;
    for (int s = 0; s < factor; ++s) acc += xi[t * factor + s];
    yi[t] = acc * inv;
  }
}

PLAAE_NOINLINE void pool_bwd_ch(int len, int factor,
                                const double* __restrict gy,
                                double* __restrict gx, int i) {
  const int T_out = len / factor;
  const double inv = 1.0 / factor;
  const double* __restrict gyi = gy + static_cast<int64_t>(i) * T_out;
  double* __restrict gxi = gx + static_cast<int64_t>(i) * len;
  for (int t = 0; t < T_out; ++t)
    for (int s = 0; s < factor; ++s) gxi[t * factor + s] += gyi[t] * inv;
}

}  // namespace

void layer_norm_forward(int channels, int len, const double* x,
                        const double* gain, const double* bias, double eps,
                        double* y, double* mean, double* inv_std) {
  const int tiles = (len + kNormTile - 1) / kNormTile;
#pragma omp parallel for schedule(static)
  for (int tile = 0; tile < tiles; ++tile)
    ln_fwd_tile(channels, len, x, gain, bias, eps, y, mean, inv_std,
                tile * kNormTile);
}

void layer_norm_backward(int channels, int len, const double* x,
                         const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx,
                         double* ggain, double* gbias) {
  if (gx) {
    const int tiles = (len + kNormTile - 1) / kNormTile;
#pragma omp parallel for schedule(static)
    for (int tile = 0; tile < tiles; ++tile)
      ln_bwd_tile(channels, len, x, gain, mean, inv_std, gy, gx,
                  tile * kNormTile);
  }
  if (ggain || gbias) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < channels; ++i)
      ln_param_grads_ch(len, x, mean, inv_std, gy, ggain, gbias, i);
  }
}

void avg_pool_forward(int channels, int len, int factor, const double* x,
                      double* y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < channels; ++i) pool_fwd_ch(len, factor, x, y, i);
}

void avg_pool_backward(int channels, int len, int factor, const double* gy,
                       double* gx) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < channels; ++i) pool_bwd_ch(len, factor, gy, gx, i);
}

}  // namespace plaae::kernels::par
