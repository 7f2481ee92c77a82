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
#include "rqfedrec/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rqfedrec::kernels {

#if defined(RQFEDREC_HAVE_AVX2_BUILD)
const Kernels& avx2_kernels();  // defined in kernels_avx2.cpp

static bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

std::vector<const Kernels*> available() {
    std::vector<const Kernels*> out;
    out.push_back(&scalar());
#if defined(RQFEDREC_HAVE_AVX2_BUILD)
    if (cpu_has_avx2()) out.push_back(&avx2_kernels());
#endif
    return out;
}

namespace {
const Kernels* g_forced = nullptr;

const Kernels* resolve() {
    if (const char* env = std::getenv("RQFEDREC_KERNELS")) {
        for (const Kernels* k : available()) {
            if (std::strcmp(env, k->name) == 0) return k;
        }
        // Unknown or unsupported name: fall through to auto selection.
    }
    return available().back();
}
}  // namespace

const Kernels& active() {
    if (g_forced) return *g_forced;
    static const Kernels* selected = resolve();
    return *selected;
}

void force(const Kernels* k) { g_forced = k; }

}  // namespace rqfedrec::kernels
