#pragma once

#include <cstdint>

namespace plaae::kernels {

// Compute kernels behind every layer. Two interchangeable backends:
//   serial   - straightforward reference loops, kept for testing
//   parallel - OpenMP + register-tiled loops
// Both accumulate each output element in the identical order, so results are
// bit-identical between backends and for any OMP thread count.

enum class Backend { serial, parallel };

void set_backend(Backend b);
Backend backend();

// Causal dilated 1-D convolution, channels-major layout x[i*T + t].
// Weight layout w[(o*in_ch + i)*kernel + k]; tap k reads x at t*stride - k*dilation,
// out-of-range indices read as zero (left zero-padding).
struct ConvDims {
  int in_ch = 1;
  int out_ch = 1;
  int kernel = 1;
  int dilation = 1;
  int stride = 1;
  int in_len = 0;

  int out_len() const { return stride == 1 ? in_len : (in_len - 1) / stride + 1; }
  int64_t weight_count() const { return static_cast<int64_t>(in_ch) * out_ch * kernel; }
};

// Transposed non-overlapping convolution: kernel == stride, output block
// y[o][t*S .. t*S+S) depends only on input column t.
// Weight layout w[(o*in_ch + i)*S + s].
struct ConvTDims {
  int in_ch = 1;
  int out_ch = 1;
  int stride = 1;  // == kernel size
  int in_len = 0;

  int out_len() const { return in_len * stride; }
  int64_t weight_count() const { return static_cast<int64_t>(in_ch) * out_ch * stride; }
};

namespace serial {
void conv1d_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y);
void conv1d_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                     double* gx, double* gw, double* gb);
void convt1d_forward(const ConvTDims& d, const double* x, const double* w, const double* b, double* y);
void convt1d_backward(const ConvTDims& d, const double* x, const double* w, const double* gy,
                      double* gx, double* gw, double* gb);
void layer_norm_forward(int channels, int len, const double* x, const double* gain, const double* bias,
                        double eps, double* y, double* mean, double* inv_std);
void layer_norm_backward(int channels, int len, const double* x, const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx, double* ggain, double* gbias);
void avg_pool_forward(int channels, int len, int factor, const double* x, double* y);
void avg_pool_backward(int channels, int len, int factor, const double* gy, double* gx);
}  // namespace serial

namespace par {
void conv1d_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y);
void conv1d_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                     double* gx, double* gw, double* gb);
void convt1d_forward(const ConvTDims& d, const double* x, const double* w, const double* b, double* y);
void convt1d_backward(const ConvTDims& d, const double* x, const double* w, const double* gy,
                      double* gx, double* gw, double* gb);
void layer_norm_forward(int channels, int len, const double* x, const double* gain, const double* bias,
                        double eps, double* y, double* mean, double* inv_std);
void layer_norm_backward(int channels, int len, const double* x, const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx, double* ggain, double* gbias);
void avg_pool_forward(int channels, int len, int factor, const double* x, double* y);
void avg_pool_backward(int channels, int len, int factor, const double* gy, double* gx);
}  // namespace par

// Dispatch on the active backend. Null gradient pointers skip that gradient.
void conv1d_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y);
void conv1d_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                     double* gx, double* gw, double* gb);
void convt1d_forward(const ConvTDims& d, const double* x, const double* w, const double* b, double* y);
void convt1d_backward(const ConvTDims& d, const double* x, const double* w, const double* gy,
                      double* gx, double* gw, double* gb);
void layer_norm_forward(int channels, int len, const double* x, const double* gain, const double* bias,
                        double eps, double* y, double* mean, double* inv_std);
void layer_norm_backward(int channels, int len, const double* x, const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx, double* ggain, double* gbias);
void avg_pool_forward(int channels, int len, int factor, const double* x, double* y);
void avg_pool_backward(int channels, int len, int factor, const double* gy, double* gx);

}  // namespace plaae::kernels
