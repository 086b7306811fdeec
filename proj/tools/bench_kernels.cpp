// Copyright (c) 2026 the mptp authors
// SPDX-License-Identifier: Apache-2.0
//
// Times the OpenMP kernels against their serial reference twins on
// model-realistic shapes and prints a speedup table. Also cross-checks the
// outputs agree, so a miscompiled kernel can't post a fast-but-wrong number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "mptp/core/rng.hpp"
#include "mptp/kernels/kernels.hpp"
#include "mptp/kernels/reference.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

std::vector<double> random_vec(int64_t n, uint64_t seed) {
  mptp::Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up, also first-touch allocation
  const auto t0 = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void report(const char* name, double serial_ms, double parallel_ms, double diff) {
  std::printf("%-28s %10.3f %10.3f %8.2fx %11.2e\n", name, serial_ms, parallel_ms, serial_ms / parallel_ms, diff);
}

}  // namespace

int main() {
  std::printf("%-28s %10s %10s %9s %11s\n", "kernel", "serial ms", "openmp ms", "speedup", "max |diff|");

  {  // token-mixer sized matmul: (B*N, D) x (D, D)
    const int64_t M = 784, N = 256, K = 256;
    auto a = random_vec(M * K, 1), b = random_vec(K * N, 2);
    std::vector<double> c0(M * N), c1(M * N);
    const double ts = time_ms([&] { mptp::refk::gemm_nn(M, N, K, a.data(), b.data(), c0.data(), false); }, 5);
    const double tp = time_ms([&] { mptp::kernels::gemm_nn(M, N, K, a.data(), b.data(), c1.data(), false); }, 5);
    report("gemm_nn 784x256x256", ts, tp, max_abs_diff(c0, c1));
  }

  {  // stem-sized 3x3 convolution
    const int64_t B = 2, Ci = 16, H = 112, W = 112, Co = 32, k = 3;
    auto x = random_vec(B * Ci * H * W, 3), w = random_vec(Co * Ci * k * k, 4), bias = random_vec(Co, 5);
    std::vector<double> y0(B * Co * H * W), y1(y0.size());
    const double ts = time_ms(
        [&] { mptp::refk::conv2d_forward(x.data(), w.data(), bias.data(), y0.data(), B, Ci, H, W, Co, k, k, 1, 1); },
        3);
    const double tp = time_ms(
        [&] { mptp::kernels::conv2d_forward(x.data(), w.data(), bias.data(), y1.data(), B, Ci, H, W, Co, k, k, 1, 1); },
        3);
    report("conv2d 16->32 112^2 k3", ts, tp, max_abs_diff(y0, y1));
  }

  {  // decoder upsample
    const int64_t B = 2, C = 48, H = 56, W = 56;
    auto x = random_vec(B * C * H * W, 6);
    std::vector<double> y0(B * C * 4 * H * W), y1(y0.size());
    const double ts =
        time_ms([&] { mptp::refk::bilinear_forward(x.data(), y0.data(), B, C, H, W, 2 * H, 2 * W); }, 5);
    const double tp =
        time_ms([&] { mptp::kernels::bilinear_forward(x.data(), y1.data(), B, C, H, W, 2 * H, 2 * W); }, 5);
    report("bilinear 56->112 x48ch", ts, tp, max_abs_diff(y0, y1));
  }

  {  // attention-sized softmax
    const int64_t R = 8 * 196, C = 196;
    auto x = random_vec(R * C, 7);
    std::vector<double> y0(R * C), y1(R * C);
    const double ts = time_ms([&] { mptp::refk::softmax_rows(x.data(), y0.data(), R, C); }, 10);
    const double tp = time_ms([&] { mptp::kernels::softmax_rows(x.data(), y1.data(), R, C); }, 10);
    report("softmax 1568x196", ts, tp, max_abs_diff(y0, y1));
  }

  {  // loss-sized reduction; also checks the fixed-chunk sum agrees with serial
    const int64_t n = 4 * 1024 * 1024;
    auto x = random_vec(n, 8);
    double s0 = 0, s1 = 0;
    const double ts = time_ms([&] { s0 = mptp::refk::sum(x.data(), n); }, 10);
    const double tp = time_ms([&] { s1 = mptp::kernels::sum_det(x.data(), n); }, 10);
    report("sum 4M", ts, tp, std::abs(s0 - s1));
  }

  return 0;
}
