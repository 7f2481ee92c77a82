/*
 * Copyright 2026 The RQFedRec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rqfedrec::kernels {

// Dense double-precision primitives behind the whole training stack.
// Every entry point has a scalar reference implementation; wider variants
// (AVX2 on x86-64) are selected once at startup from CPUID and can be
// overridden with RQFEDREC_KERNELS=scalar|avx2 or force().
//
// Results from different variants may differ in the last bits (reassociated
// sums, FMA contraction). A fixed variant is bit-deterministic.
struct Kernels {
    const char* name;

    // sum_i a[i]*b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_i (a[i]-b[i])^2
    double (*l2sq)(const double* a, const double* b, std::size_t n);
    // sum_i a[i]^2
    double (*sum_sq)(const double* a, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // x[i] *= alpha
    void (*scale)(double* x, double alpha, std::size_t n);
    // out[i] = wa*a[i] + wb*b[i]
    void (*blend)(double* out, double wa, const double* a, double wb, const double* b,
                  std::size_t n);
    // One Adam step on a parameter row. bias1/bias2 are the precomputed
    // corrections (1 - beta1^t), (1 - beta2^t). Weight decay is the caller's
    // problem (applied decoupled, before the step).
    void (*adam_step)(double* w, double* m, double* v, const double* g, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bias1,
                      double bias2);
};

const Kernels& scalar();

// Variants compiled into this binary (always includes scalar). Entries other
// than scalar are only present when the running CPU supports them.
std::vector<const Kernels*> available();

// Active variant. First call resolves: RQFEDREC_KERNELS env override if set,
// otherwise the widest supported variant.
const Kernels& active();

// Pin a variant (tests). Pass nullptr to restore automatic selection.
void force(const Kernels* k);

// Convenience forwarders.
inline double dot(const double* a, const double* b, std::size_t n) {
    return active().dot(a, b, n);
}
inline double l2sq(const double* a, const double* b, std::size_t n) {
    return active().l2sq(a, b, n);
}
inline double sum_sq(const double* a, std::size_t n) { return active().sum_sq(a, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
}
inline void scale(double* x, double alpha, std::size_t n) { active().scale(x, alpha, n); }
inline void blend(double* out, double wa, const double* a, double wb, const double* b,
                  std::size_t n) {
    active().blend(out, wa, a, wb, b, n);
}
inline void adam_step(double* w, double* m, double* v, const double* g, std::size_t n,
                      double lr, double beta1, double beta2, double eps, double bias1,
                      double bias2) {
    active().adam_step(w, m, v, g, n, lr, beta1, beta2, eps, bias1, bias2);
}

}  // namespace rqfedrec::kernels
