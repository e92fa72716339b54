#pragma once

#include <algorithm>
#include <cmath>

namespace lethe {

// Max-shifted log(sum(exp(x_i))).
inline double log_sum_exp(const double* x, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

inline void softmax_row(const double* logits, double* probs, int n) {
    double m = logits[0];
    for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - m);
        s += probs[i];
    }
    const double inv = 1.0 / s;
    for (int i = 0; i < n; ++i) probs[i] *= inv;
}

// Argmax with ties broken toward the smaller index.
inline int argmax_row(const double* x, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (x[i] > x[best]) best = i;
    }
    return best;
}

}  // namespace lethe
