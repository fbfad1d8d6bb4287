#pragma once

// Caching allocator for node value buffers. Large blocks released by one graph
// are kept in a bounded per-thread cache and handed to the next graph instead
// of going back to the OS, so a recorded forward pass does not fault in fresh
// pages for its whole tape on every run.

#include <cstddef>
#include <new>
#include <vector>

namespace gradproj::ad::pool {

// Blocks smaller than this go straight to operator new.
inline constexpr std::size_t kMinPooledBytes = 16 * 1024;
// Per-thread cap on cached (idle) bytes.
inline constexpr std::size_t kMaxCachedBytes = std::size_t{512} << 20;

void* allocate(std::size_t bytes);
void deallocate(void* p, std::size_t bytes) noexcept;

struct Stats {
    std::size_t cached_bytes = 0;
    std::size_t hits = 0;
    std::size_t misses = 0;
};
// Counters of the calling thread's cache.
Stats stats();
// Returns every idle block of the calling thread to the system.
void release_cached();

template <typename T>
struct Allocator {
    using value_type = T;

    Allocator() noexcept = default;
    template <typename U>
    Allocator(const Allocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        if (n > static_cast<std::size_t>(-1) / sizeof(T)) throw std::bad_array_new_length();
        return static_cast<T*>(pool::allocate(n * sizeof(T)));
    }
    void deallocate(T* p, std::size_t n) noexcept { pool::deallocate(p, n * sizeof(T)); }

    template <typename U>
    friend bool operator==(const Allocator&, const Allocator<U>&) noexcept {
        return true;
    }
};

}  // namespace gradproj::ad::pool

namespace gradproj::ad {

using Buffer = std::vector<double, pool::Allocator<double>>;

}  // namespace gradproj::ad
