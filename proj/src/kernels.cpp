#include "firelab/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace firelab::kernels {

namespace {

std::vector<Vertex> flatten(std::vector<std::vector<Vertex>>&& lists)
{
    std::size_t total = 0;
    for (const auto& l : lists)
        total += l.size();
    std::vector<Vertex> out;
    out.reserve(total);
    for (auto& l : lists)
        for (auto& v : l)
            out.push_back(std::move(v));
    return out;
}

} // namespace

int thread_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<std::vector<Vertex>> neighbor_lists_serial(const GraphSpec& spec, std::span<const Vertex> front)
{
    std::vector<std::vector<Vertex>> out(front.size());
    for (std::size_t i = 0; i < front.size(); ++i)
        out[i] = neighbors(spec, front[i]);
    return out;
}

std::vector<std::vector<Vertex>> neighbor_lists(const GraphSpec& spec, std::span<const Vertex> front)
{
    std::vector<std::vector<Vertex>> out(front.size());
    auto n = static_cast<std::ptrdiff_t>(front.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = neighbors(spec, front[i]);
        } catch (...) {
#pragma omp critical(firelab_kernel_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

std::vector<Vertex> expand_frontier_serial(const GraphSpec& spec, std::span<const Vertex> front)
{
    return flatten(neighbor_lists_serial(spec, front));
}

std::vector<Vertex> expand_frontier(const GraphSpec& spec, std::span<const Vertex> front)
{
    return flatten(neighbor_lists(spec, front));
}

} // namespace firelab::kernels
