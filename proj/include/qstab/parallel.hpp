#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qstab {

// Execution policy for the data-parallel kernels. Every parallel kernel has
// the same contract: iterations are independent, results land in
// index-addressed slots, and any reduction is performed serially in index
// order afterwards. That makes Serial and OpenMP produce bit-identical
// output for any thread count.
enum class ExecMode { Serial, OpenMP };

ExecMode default_exec_mode();
void set_default_exec_mode(ExecMode mode);

template <class Body>
void parallel_for(std::size_t n, const Body& body, ExecMode mode) {
    if (mode == ExecMode::OpenMP) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i) body(i);
}

template <class Body>
void parallel_for(std::size_t n, const Body& body) {
    parallel_for(n, body, default_exec_mode());
}

// Fill a vector of per-index results, then combine serially. The combine
// order is fixed by index, never by thread.
template <class T, class Body>
std::vector<T> parallel_map(std::size_t n, const Body& body, ExecMode mode) {
    std::vector<T> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = body(i); }, mode);
    return out;
}

template <class Body>
double parallel_sum(std::size_t n, const Body& body, ExecMode mode) {
    std::vector<double> parts(n);
    parallel_for(n, [&](std::size_t i) { parts[i] = body(i); }, mode);
    double s = 0.0;
    for (double p : parts) s += p;
    return s;
}

} // namespace qstab
