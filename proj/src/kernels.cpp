#include "plaae/kernels.hpp"

namespace plaae::kernels {

namespace {
Backend g_backend = Backend::parallel;
}

void set_backend(Backend b) { g_backend = b; }
Backend backend() { return g_backend; }

void conv1d_forward(const ConvDims& d, const double* x, const double* w, const double* b, double* y) {
  g_backend == Backend::serial ? serial::conv1d_forward(d, x, w, b, y) : par::conv1d_forward(d, x, w, b, y);
}

void conv1d_backward(const ConvDims& d, const double* x, const double* w, const double* gy,
                     double* gx, double* gw, double* gb) {
  g_backend == Backend::serial ? serial::conv1d_backward(d, x, w, gy, gx, gw, gb)
                               : par::conv1d_backward(d, x, w, gy, gx, gw, gb);
}

void convt1d_forward(const ConvTDims& d, const double* x, const double* w, const double* b, double* y) {
  g_backend == Backend::serial ? serial::convt1d_forward(d, x, w, b, y) : par::convt1d_forward(d, x, w, b, y);
}

void convt1d_backward(const ConvTDims& d, const double* x, const double* w, const double* gy,
                      double* gx, double* gw, double* gb) {
  g_backend == Backend::serial ? serial::convt1d_backward(d, x, w, gy, gx, gw, gb)
                               : par::convt1d_backward(d, x, w, gy, gx, gw, gb);
}

void layer_norm_forward(int channels, int len, const double* x, const double* gain, const double* bias,
                        double eps, double* y, double* mean, double* inv_std) {
  g_backend == Backend::serial ? serial::layer_norm_forward(channels, len, x, gain, bias, eps, y, mean, inv_std)
                               : par::layer_norm_forward(channels, len, x, gain, bias, eps, y, mean, inv_std);
}

void layer_norm_backward(int channels, int len, const double* x, const double* gain, const double* mean,
                         const double* inv_std, const double* gy, double* gx, double* ggain, double* gbias) {
  g_backend == Backend::serial
      ? serial::layer_norm_backward(channels, len, x, gain, mean, inv_std, gy, gx, ggain, gbias)
      : par::layer_norm_backward(channels, len, x, gain, mean, inv_std, gy, gx, ggain, gbias);
}

void avg_pool_forward(int channels, int len, int factor, const double* x, double* y) {
  g_backend == Backend::serial ? serial::avg_pool_forward(channels, len, factor, x, y)
                               : par::avg_pool_forward(channels, len, factor, x, y);
}

void avg_pool_backward(int channels, int len, int factor, const double* gy, double* gx) {
  g_backend == Backend::serial ? serial::avg_pool_backward(channels, len, factor, gy, gx)
                               : par::avg_pool_backward(channels, len, factor, gy, gx);
}

}  // namespace plaae::kernels
