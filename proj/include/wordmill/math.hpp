/*
 * Copyright 2026 The Wordmill Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>

namespace wordmill {

// The scalar type is deduced from the first span only; the remaining
// parameters are non-deduced so mutable spans convert to const ones at the
// call site.

template <class T>
T dot(std::span<const T> a, std::type_identity_t<std::span<const T>> b) {
    T s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// y += alpha * x
template <class T>
void axpy(std::span<T> y, std::type_identity_t<T> alpha,
          std::type_identity_t<std::span<const T>> x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

/// y += a (element-wise)
template <class T>
void add(std::span<T> y, std::type_identity_t<std::span<const T>> a) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a[i];
}

/// y += a ⊙ b (element-wise product accumulate)
template <class T>
void madd(std::span<T> y, std::type_identity_t<std::span<const T>> a,
          std::type_identity_t<std::span<const T>> b) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a[i] * b[i];
}

template <class T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

/// log(1 + e^x) without overflow for large |x|.
template <class T>
T softplus(T x) {
    if (x > T(30)) return x;
    if (x < T(-30)) return std::exp(x);
    return std::log1p(std::exp(x));
}

/// log σ(x) = -softplus(-x), finite for all finite x.
template <class T>
T log_sigmoid(T x) {
    return -softplus(-x);
}

template <class T>
T l2_norm(std::span<const T> v) {
    T s = 0;
    for (T x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace wordmill
